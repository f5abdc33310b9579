#pragma once

// Symmetry parameters, the geometric piece partition of (0, inf), density
// models, and residual checks for the two reciprocal symmetries and the
// rescale/length-bias identity chain they imply.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dsym/quadrature.hpp"

namespace dsym {

/// Mode scale theta, grid ratio k and median delta = k * theta.
class SymmetryParams {
 public:
  static SymmetryParams make(double theta, double k) {
    if (!(theta > 0.0) || !std::isfinite(theta))
      throw domain_error("theta must be positive and finite");
    if (!(k > 1.0) || !std::isfinite(k))
      throw domain_error("k must exceed 1 (the median lies above the mode)");
    return SymmetryParams(theta, k);
  }

  double theta() const { return theta_; }
  double k() const { return k_; }
  double delta() const { return delta_; }
  double log_k() const { return log_k_; }

 private:
  SymmetryParams(double theta, double k)
      : theta_(theta), k_(k), delta_(k * theta), log_k_(std::log(k)) {}

  double theta_;
  double k_;
  double delta_;
  double log_k_;
};

struct NormMeta {
  double constant = 1.0;   // divisor applied to the unnormalized density
  double rel_error = 0.0;  // estimated relative error of `constant`
};

/// A density on (0, inf) evaluated through its logarithm.  Breakpoints, when
/// given, are the log-domain locations of derivative jumps; quadrature splits
/// there.
class DensityModel {
 public:
  using LogPdf = std::function<double(double)>;
  using Breakpoints = std::function<std::vector<double>(double, double)>;

  DensityModel(std::string family, LogPdf log_pdf, NormMeta norm = {},
               Breakpoints breakpoints = {})
      : family_(std::move(family)),
        log_pdf_(std::move(log_pdf)),
        norm_(norm),
        breakpoints_(std::move(breakpoints)) {}

  double log_pdf(double y) const {
    if (!(y > 0.0)) throw domain_error("density evaluated at nonpositive y");
    return log_pdf_(y);
  }
  double pdf(double y) const { return std::exp(log_pdf(y)); }
  double operator()(double y) const { return pdf(y); }

  /// Log-domain breakpoints in [w_lo, w_hi].
  std::vector<double> breakpoints(double w_lo, double w_hi) const {
    return breakpoints_ ? breakpoints_(w_lo, w_hi) : std::vector<double>{};
  }
  bool has_breakpoints() const { return static_cast<bool>(breakpoints_); }

  const std::string& family() const { return family_; }
  const NormMeta& norm_meta() const { return norm_; }

 private:
  std::string family_;
  LogPdf log_pdf_;
  NormMeta norm_;
  Breakpoints breakpoints_;
};

/// Equally spaced points in w = log y.
class GridSpec {
 public:
  static GridSpec make(double w_min, double w_max, int n_points) {
    if (!(w_min < w_max)) throw domain_error("grid requires w_min < w_max");
    if (n_points < 3) throw domain_error("grid requires at least 3 points");
    return GridSpec(w_min, w_max, n_points);
  }

  double w_min() const { return w_min_; }
  double w_max() const { return w_max_; }
  int n_points() const { return n_; }

  double w(int j) const {
    return j == n_ - 1 ? w_max_ : w_min_ + (w_max_ - w_min_) * j / (n_ - 1);
  }
  std::vector<double> w_points() const {
    std::vector<double> out(static_cast<std::size_t>(n_));
    for (int j = 0; j < n_; ++j) out[static_cast<std::size_t>(j)] = w(j);
    return out;
  }
  std::vector<double> points() const {
    auto out = w_points();
    for (double& v : out) v = std::exp(v);
    return out;
  }

  GridSpec with_points(int n) const { return make(w_min_, w_max_, n); }

 private:
  GridSpec(double lo, double hi, int n) : w_min_(lo), w_max_(hi), n_(n) {}
  double w_min_;
  double w_max_;
  int n_;
};

inline constexpr int kDefaultGridPoints = 2001;

/// Absolute grid around the mode: six grid periods plus tails either side.
inline GridSpec default_grid(const SymmetryParams& p, int n = kDefaultGridPoints) {
  const double half = 6.0 * p.log_k() + 5.0;
  const double c = std::log(p.theta());
  return GridSpec::make(c - half, c + half, n);
}

/// Grid of ratios y about a symmetry center (w symmetric about 0).
inline GridSpec default_ratio_grid(double k, int n = kDefaultGridPoints) {
  const double half = 6.0 * std::log(k) + 5.0;
  return GridSpec::make(-half, half, n);
}

// ---------------------------------------------------------------------------
// Piece partition: piece i is (theta k^{-2i}, theta k^{2-2i}].

struct PieceIndex {
  long i = 0;
  friend bool operator==(PieceIndex, PieceIndex) = default;
};

inline double piece_lower(long i, const SymmetryParams& p) {
  return p.theta() * std::pow(p.k(), -2.0 * static_cast<double>(i));
}
inline double piece_upper(long i, const SymmetryParams& p) { return piece_lower(i - 1, p); }

inline PieceIndex grid_index(double y, const SymmetryParams& p) {
  if (!(y > 0.0) || !std::isfinite(y)) throw domain_error("grid_index requires finite y > 0");
  const double t = std::log(y / p.theta()) / (2.0 * p.log_k());
  long i = static_cast<long>(std::floor(1.0 - t));
  // Settle rounding against the exact boundary values.
  while (!(y <= piece_upper(i, p))) --i;
  while (!(y > piece_lower(i, p))) ++i;
  return {i};
}

/// Log-domain locations theta k^{2i} that fall inside [w_lo, w_hi].
inline std::vector<double> grid_endpoints_log(const SymmetryParams& p, double w_lo,
                                              double w_hi) {
  std::vector<double> out;
  const double c = std::log(p.theta());
  const double step = 2.0 * p.log_k();
  const auto first = static_cast<long>(std::ceil((w_lo - c) / step));
  const auto last = static_cast<long>(std::floor((w_hi - c) / step));
  for (long i = first; i <= last; ++i) out.push_back(c + step * static_cast<double>(i));
  return out;
}

// ---------------------------------------------------------------------------
// Residual checks.

enum class Relation { LogSym, RSym };

inline const char* to_string(Relation r) {
  return r == Relation::LogSym ? "log_symmetry" : "r_symmetry";
}

struct ResidualReport {
  std::string relation;
  double residual = 0.0;
  double normalizer = 1.0;
  GridSpec grid = GridSpec::make(-1.0, 1.0, 3);
  double tolerance = 0.0;
  bool pass = false;
  /// Second-moment defect of the rescaled variable, for chain checks that
  /// compute one.
  std::optional<double> moment_defect;

  double raw_defect() const { return residual * normalizer; }
};

inline constexpr double kDefaultResidualTol = 1e-10;

namespace detail {

inline ResidualReport finish_report(std::string tag, double sup_defect, double sup_value,
                                    const GridSpec& grid, double tol) {
  if (!(sup_value > 0.0) || !std::isfinite(sup_value))
    throw degenerate_error("density vanishes on the whole evaluation grid");
  ResidualReport r{std::move(tag), sup_defect / sup_value, sup_value, grid, tol, false, {}};
  r.pass = r.residual <= tol;
  return r;
}

}  // namespace detail

/// Sup over the ratio grid of |y^2 f(c y) - f(c/y)| (log symmetry) or
/// |f(c y) - f(c/y)| (R symmetry), divided by the sup of f over the points
/// evaluated.
inline ResidualReport symmetry_residual(const DensityModel& d, Relation rel, double center,
                                        const GridSpec& grid,
                                        double tol = kDefaultResidualTol) {
  if (!(center > 0.0)) throw domain_error("symmetry center must be positive");
  double sup_defect = 0.0;
  double sup_value = 0.0;
  for (int j = 0; j < grid.n_points(); ++j) {
    const double w = grid.w(j);
    const double y = std::exp(w);
    const double up = d.pdf(center * y);
    const double down = d.pdf(center / y);
    const double lhs = rel == Relation::LogSym ? y * y * up : up;
    sup_defect = std::max(sup_defect, std::abs(lhs - down));
    sup_value = std::max({sup_value, up, down});
  }
  return detail::finish_report(to_string(rel), sup_defect, sup_value, grid, tol);
}

/// Levels of the rescale/length-bias identity chain.
///   Scaled:       (1/k^2) f(y/k^2) = y^2 f(y) / (theta^2 k^4)
///   Standardized: g(x) = theta k^2 f(theta k^2 x), (1/k^2) g(x/k^2) = x^2 g(x)
///   Squared:      h(z) = g(sqrt z) / (2 sqrt z),   (1/k^4) h(z/k^4) = z h(z)
enum class ChainLevel { Scaled, Standardized, Squared };

inline const char* to_string(ChainLevel l) {
  switch (l) {
    case ChainLevel::Scaled: return "rescale_length_bias";
    case ChainLevel::Standardized: return "standardized_length_bias";
    case ChainLevel::Squared: return "squared_length_bias";
  }
  return "?";
}

/// E(Y^s) by log-domain quadrature.
inline quad::LogEstimate raw_moment(const DensityModel& d, double s, double rel_tol = 1e-14) {
  auto log_integrand = [&](double w) { return (s + 1.0) * w + d.log_pdf(std::exp(w)); };
  // Breakpoints have to be known before the window; take them over the whole
  // scan range.
  const auto bps = d.breakpoints(quad::kScanLo, quad::kScanHi);
  return quad::integrate_log(log_integrand, bps, rel_tol);
}

/// Residual of one chain level on the given grid.  The grid is taken in y;
/// the Standardized and Squared levels evaluate at x = y/(theta k^2) and
/// z = x^2 respectively.
inline ResidualReport ds_chain_residual(const DensityModel& d, const SymmetryParams& p,
                                        ChainLevel level, const GridSpec& grid,
                                        double tol = kDefaultResidualTol) {
  const double k2 = p.k() * p.k();
  const double k4 = k2 * k2;
  const double scale = p.theta() * k2;  // Y = scale * X
  auto g = [&](double x) { return scale * d.pdf(scale * x); };
  auto h = [&](double z) {
    const double r = std::sqrt(z);
    return g(r) / (2.0 * r);
  };

  double sup_defect = 0.0;
  double sup_value = 0.0;
  for (int j = 0; j < grid.n_points(); ++j) {
    const double y = std::exp(grid.w(j));
    double lhs = 0.0;
    double rhs = 0.0;
    switch (level) {
      case ChainLevel::Scaled:
        lhs = d.pdf(y / k2) / k2;
        rhs = y * y * d.pdf(y) / (p.theta() * p.theta() * k4);
        break;
      case ChainLevel::Standardized: {
        const double x = y / scale;
        lhs = g(x / k2) / k2;
        rhs = x * x * g(x);
        break;
      }
      case ChainLevel::Squared: {
        const double x = y / scale;
        const double z = x * x;
        lhs = h(z / k4) / k4;
        rhs = z * h(z);
        break;
      }
    }
    sup_defect = std::max(sup_defect, std::abs(lhs - rhs));
    sup_value = std::max({sup_value, std::abs(lhs), std::abs(rhs)});
  }
  auto report = detail::finish_report(to_string(level), sup_defect, sup_value, grid, tol);

  if (level != ChainLevel::Scaled) {
    // E(X^2) = E(Z) = E(Y^2) / (theta^2 k^4) must equal 1.
    const auto m2 = raw_moment(d, 2.0);
    if (!(m2.rel_error() < 1e-8)) {
      std::ostringstream os;
      os << "second-moment quadrature did not converge (relative error estimate "
         << m2.rel_error() << ")";
      throw numeric_error(os.str());
    }
    report.moment_defect = std::abs(m2.value() / (scale * scale) - 1.0);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Center search.

struct CenterSearch {
  double center = 1.0;
  double residual = 0.0;
  bool used_dense_scan = false;
};

inline constexpr int kDenseScanPoints = 10000;
inline constexpr int kCoarseScanPoints = 33;
inline constexpr double kCenterRelTol = 1e-8;

namespace detail {

template <class F>
std::pair<double, double> golden_section(F&& f, double a, double b, double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return fc <= fd ? std::pair{c, fc} : std::pair{d, fd};
}

template <class F>
std::pair<std::size_t, std::vector<double>> scan_profile(F&& f, double lo, double hi, int n) {
  std::vector<double> vals(static_cast<std::size_t>(n));
  std::size_t arg = 0;
  for (int j = 0; j < n; ++j) {
    vals[static_cast<std::size_t>(j)] = f(lo + (hi - lo) * j / (n - 1));
    if (vals[static_cast<std::size_t>(j)] < vals[arg]) arg = static_cast<std::size_t>(j);
  }
  return {arg, std::move(vals)};
}

inline bool single_valley(const std::vector<double>& v) {
  std::size_t j = 1;
  while (j < v.size() && v[j] < v[j - 1]) ++j;
  while (j < v.size() && v[j] > v[j - 1]) ++j;
  return j == v.size();
}

}  // namespace detail

/// Minimizes symmetry_residual over the center by golden section in
/// log(center).  A coarse pre-scan that does not show a single valley
/// switches to a dense scan of 10^4 log-spaced candidates before refining.
inline CenterSearch best_symmetry_center(const DensityModel& d, Relation rel, double lo,
                                         double hi, const GridSpec& grid) {
  if (!(lo > 0.0) || !(hi > lo)) throw domain_error("search interval must be positive and nondegenerate");
  auto profile = [&](double log_c) {
    return symmetry_residual(d, rel, std::exp(log_c), grid).residual;
  };
  const double a = std::log(lo);
  const double b = std::log(hi);

  CenterSearch out;
  auto [arg, coarse] = detail::scan_profile(profile, a, b, kCoarseScanPoints);
  int n = kCoarseScanPoints;
  if (!detail::single_valley(coarse)) {
    out.used_dense_scan = true;
    n = kDenseScanPoints;
    std::tie(arg, coarse) = detail::scan_profile(profile, a, b, n);
  }
  const double step = (b - a) / (n - 1);
  const double left = a + step * static_cast<double>(arg > 0 ? arg - 1 : 0);
  const double right = std::min(b, a + step * static_cast<double>(arg + 1));
  auto [best_w, best] = detail::golden_section(profile, left, right, kCenterRelTol);
  if (coarse[arg] < best) {
    best_w = a + step * static_cast<double>(arg);
    best = coarse[arg];
  }
  out.center = std::exp(best_w);
  out.residual = best;
  return out;
}

// ---------------------------------------------------------------------------
// Transforms.

/// Density of Y^gamma: g(z) = f(z^{1/gamma}) z^{1/gamma - 1} / |gamma|.
inline DensityModel power_transform(const DensityModel& d, double gamma) {
  if (gamma == 0.0 || !std::isfinite(gamma)) throw domain_error("power transform needs gamma != 0");
  if (gamma == 1.0) return d;
  const double inv = 1.0 / gamma;
  const double log_abs = std::log(std::abs(gamma));
  auto base = std::make_shared<const DensityModel>(d);
  DensityModel::LogPdf lp = [base, inv, log_abs](double z) {
    const double lz = std::log(z);
    return base->log_pdf(std::exp(inv * lz)) + (inv - 1.0) * lz - log_abs;
  };
  DensityModel::Breakpoints bp;
  if (d.has_breakpoints()) {
    bp = [base, gamma](double lo, double hi) {
      const double a = gamma > 0 ? lo / gamma : hi / gamma;
      const double b = gamma > 0 ? hi / gamma : lo / gamma;
      auto v = base->breakpoints(a, b);
      for (double& w : v) w *= gamma;
      std::sort(v.begin(), v.end());
      return v;
    };
  }
  std::ostringstream tag;
  tag << "power(" << gamma << "):" << d.family();
  return DensityModel(tag.str(), std::move(lp), d.norm_meta(), std::move(bp));
}

/// Density of center^2 / Y.
inline DensityModel reciprocal_transform(const DensityModel& d, double center) {
  if (!(center > 0.0)) throw domain_error("reflection center must be positive");
  auto base = std::make_shared<const DensityModel>(d);
  const double c2 = center * center;
  const double log_c2 = std::log(c2);
  DensityModel::LogPdf lp = [base, c2, log_c2](double y) {
    return base->log_pdf(c2 / y) + log_c2 - 2.0 * std::log(y);
  };
  DensityModel::Breakpoints bp;
  if (d.has_breakpoints()) {
    bp = [base, log_c2](double lo, double hi) {
      auto v = base->breakpoints(log_c2 - hi, log_c2 - lo);
      for (double& w : v) w = log_c2 - w;
      std::sort(v.begin(), v.end());
      return v;
    };
  }
  return DensityModel("reciprocal:" + d.family(), std::move(lp), d.norm_meta(), std::move(bp));
}

}  // namespace dsym
