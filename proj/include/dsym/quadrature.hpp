#pragma once

// Log-domain quadrature used for normalization constants, moments and
// CDF tables.  Integrals over (0, inf) are taken in w = log y, where every
// density in this library is well behaved, and truncated to the window where
// the integrand is within a fixed ratio of its peak.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace dsym {

class domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class degenerate_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace quad {

struct Estimate {
  double value = 0.0;
  double abs_error = 0.0;
};

/// Result of integrating exp(log_f) where the magnitude may exceed double
/// range: the integral is exp(log_scale) * scaled.value.
struct LogEstimate {
  double log_scale = 0.0;
  Estimate scaled;

  double value() const { return std::exp(log_scale) * scaled.value; }
  double log_value() const { return log_scale + std::log(scaled.value); }
  double rel_error() const {
    return scaled.value > 0 ? scaled.abs_error / scaled.value
                            : std::numeric_limits<double>::infinity();
  }
};

struct Window {
  double lo = 0.0;
  double hi = 0.0;
  double peak_at = 0.0;
  double log_peak = -std::numeric_limits<double>::infinity();
};

inline constexpr double kWindowDrop = 41.446531673892822;  // log(1e18)
inline constexpr double kScanLo = -120.0;
inline constexpr double kScanHi = 120.0;
inline constexpr double kScanStep = 0.02;
inline constexpr double kMaxChunk = 0.5;

/// Adaptive 31-point Gauss-Kronrod on [a, b].
template <class F>
Estimate integrate(F&& f, double a, double b, double rel_tol = 1e-14,
                   unsigned max_depth = 10) {
  if (!(b > a)) return {};
  double err = 0.0;
  double l1 = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, a, b, max_depth, rel_tol, &err, &l1);
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os << "quadrature produced a non-finite value on [" << a << ", " << b << "]";
    throw numeric_error(os.str());
  }
  return {v, err};
}

/// Sorted, deduplicated nodes on [lo, hi]: the two ends, every breakpoint
/// strictly inside, and extra cuts so that no chunk is wider than max_chunk.
inline std::vector<double> chunk_nodes(double lo, double hi,
                                       std::span<const double> breakpoints,
                                       double max_chunk = kMaxChunk) {
  std::vector<double> cuts{lo, hi};
  for (double b : breakpoints)
    if (b > lo && b < hi) cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<double> nodes;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i];
    const double b = cuts[i + 1];
    const auto m = static_cast<int>(std::ceil((b - a) / max_chunk));
    for (int j = 0; j < std::max(m, 1); ++j) nodes.push_back(a + (b - a) * j / std::max(m, 1));
  }
  nodes.push_back(cuts.back());
  return nodes;
}

/// Scan log_f on a uniform grid and return the window outside of which the
/// integrand stays below exp(-drop) times its peak.
template <class LogF>
Window find_window(LogF&& log_f, double drop = kWindowDrop, double scan_lo = kScanLo,
                   double scan_hi = kScanHi, double step = kScanStep) {
  const auto n = static_cast<std::size_t>(std::llround((scan_hi - scan_lo) / step)) + 1;
  std::vector<double> vals(n);
  Window win;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = scan_lo + step * static_cast<double>(i);
    const double v = log_f(w);
    vals[i] = std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
    if (vals[i] > win.log_peak) {
      win.log_peak = vals[i];
      arg = i;
    }
  }
  if (!std::isfinite(win.log_peak))
    throw degenerate_error("integrand is zero or non-finite over the whole scan range");

  const double cut = win.log_peak - drop;
  std::size_t first = 0;
  while (first < n && vals[first] < cut) ++first;
  std::size_t last = n - 1;
  while (last > 0 && vals[last] < cut) --last;
  if (first == 0 || last == n - 1) {
    std::ostringstream os;
    os << "integrand does not decay inside w in [" << scan_lo << ", " << scan_hi
       << "] (peak " << win.log_peak << " at w=" << scan_lo + step * static_cast<double>(arg)
       << ")";
    throw numeric_error(os.str());
  }
  win.lo = scan_lo + step * static_cast<double>(first - 1);
  win.hi = scan_lo + step * static_cast<double>(last + 1);
  win.peak_at = scan_lo + step * static_cast<double>(arg);
  return win;
}

/// Integral of exp(log_f(w)) dw over the real line, truncated to the window
/// found by find_window and split at the given breakpoints.
template <class LogF>
LogEstimate integrate_log(LogF&& log_f, std::span<const double> breakpoints = {},
                          double rel_tol = 1e-14) {
  const Window win = find_window(log_f);
  const double shift = win.log_peak;
  auto scaled = [&](double w) {
    const double v = log_f(w) - shift;
    return std::isnan(v) ? 0.0 : std::exp(v);
  };
  const auto nodes = chunk_nodes(win.lo, win.hi, breakpoints);
  LogEstimate out;
  out.log_scale = shift;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const Estimate e = integrate(scaled, nodes[i], nodes[i + 1], rel_tol);
    out.scaled.value += e.value;
    out.scaled.abs_error += e.abs_error;
  }
  // Mass outside the window is at most exp(-drop) per unit length near the
  // edges; count it as error.
  out.scaled.abs_error += std::exp(-kWindowDrop) * (win.hi - win.lo);
  return out;
}

}  // namespace quad
}  // namespace dsym
