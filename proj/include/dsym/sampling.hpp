#pragma once

// Random variates: a generic inverse-CDF sampler on a tabulated CDF, an exact
// sampler for the closed-form piecewise density, and Kolmogorov-Smirnov
// statistics for checking them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dsym/core.hpp"
#include "dsym/densities.hpp"

namespace dsym {

/// 64-bit Mersenne Twister (std::mt19937_64, seeded with the given integer);
/// uniforms are ((x >> 11) + 0.5) * 2^-53, which lie strictly inside (0, 1).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1p-53; }

 private:
  std::mt19937_64 engine_;
};

struct SampleBatch {
  std::vector<double> values;
  std::uint64_t seed = 0;
  std::string family;
};

inline constexpr int kDefaultCdfResolution = 4096;

/// CDF tabulated on a log-spaced grid and interpolated by monotone cubic
/// Hermite in w = log y.  Node slopes start from the exact density and are
/// limited (Fritsch-Carlson) so every cell is monotone.
class CdfTable {
 public:
  double operator()(double y) const {
    if (!(y > 0.0)) return 0.0;
    const double w = std::log(y);
    if (w <= w_.front()) return 0.0;
    if (w >= w_.back()) return 1.0;
    const std::size_t j = cell_of(w);
    return hermite(j, w);
  }

  double quantile(double u) const {
    if (!(u > 0.0)) return std::exp(w_.front());
    if (!(u < 1.0)) return std::exp(w_.back());
    const auto it = std::upper_bound(f_.begin(), f_.end(), u);
    std::size_t j = static_cast<std::size_t>(it - f_.begin());
    j = std::clamp<std::size_t>(j, 1, f_.size() - 1) - 1;
    double a = w_[j];
    double b = w_[j + 1];
    // Bisection-safeguarded Newton on the monotone cubic.
    double x = a + (b - a) * (u - f_[j]) / std::max(f_[j + 1] - f_[j], 1e-300);
    for (int it_n = 0; it_n < 100; ++it_n) {
      const double v = hermite(j, x) - u;
      if (v > 0) b = x; else a = x;
      const double dv = hermite_slope(j, x);
      double nx = dv > 0 ? x - v / dv : 0.5 * (a + b);
      if (!(nx > a && nx < b)) nx = 0.5 * (a + b);
      if (std::abs(nx - x) <= 1e-15 * std::max(1.0, std::abs(x)) || b - a <= 1e-15 * std::max(1.0, std::abs(x))) {
        x = nx;
        break;
      }
      x = nx;
    }
    return std::exp(x);
  }

  std::span<const double> log_nodes() const { return w_; }
  std::span<const double> values() const { return f_; }
  double max_interpolation_error() const { return max_interp_error_; }
  double window_lo() const { return std::exp(w_.front()); }
  double window_hi() const { return std::exp(w_.back()); }
  double raw_total() const { return raw_total_; }  // mass before renormalization

 private:
  friend CdfTable build_cdf(const DensityModel& d, int resolution);

  std::size_t cell_of(double w) const {
    const auto it = std::upper_bound(w_.begin(), w_.end(), w);
    return std::min<std::size_t>(static_cast<std::size_t>(it - w_.begin()), w_.size() - 1) - 1;
  }
  double hermite(std::size_t j, double w) const {
    const double h = w_[j + 1] - w_[j];
    const double t = (w - w_[j]) / h;
    const double t2 = t * t, t3 = t2 * t;
    // Written as f_j plus a small increment so rounding cannot undo monotonicity.
    const double inc = (-2 * t3 + 3 * t2) * (f_[j + 1] - f_[j]) + (t3 - 2 * t2 + t) * h * m_[j] +
                       (t3 - t2) * h * m_[j + 1];
    return std::clamp(f_[j] + std::max(inc, 0.0), f_[j], f_[j + 1]);
  }
  double hermite_slope(std::size_t j, double w) const {
    const double h = w_[j + 1] - w_[j];
    const double t = (w - w_[j]) / h;
    const double t2 = t * t;
    return (6 * t2 - 6 * t) * f_[j] / h + (3 * t2 - 4 * t + 1) * m_[j] +
           (-6 * t2 + 6 * t) * f_[j + 1] / h + (3 * t2 - 2 * t) * m_[j + 1];
  }

  std::vector<double> w_;
  std::vector<double> f_;
  std::vector<double> m_;
  double max_interp_error_ = 0.0;
  double raw_total_ = 1.0;
};

inline CdfTable build_cdf(const DensityModel& d, int resolution = kDefaultCdfResolution) {
  if (resolution < 2) throw domain_error("CDF table needs at least 2 cells");
  auto log_g = [&](double w) { return w + d.log_pdf(std::exp(w)); };  // log of y f(y)
  const quad::Window win = quad::find_window(log_g);
  const double shift = win.log_peak;
  auto g = [&](double w) {
    const double v = log_g(w) - shift;
    return std::isnan(v) ? 0.0 : std::exp(v);
  };

  std::vector<double> nodes;
  for (int j = 0; j <= resolution; ++j)
    nodes.push_back(j == resolution ? win.hi : win.lo + (win.hi - win.lo) * j / resolution);
  const double min_gap = 1e-9 * (win.hi - win.lo);
  for (double b : d.breakpoints(win.lo, win.hi)) {
    // A breakpoint becomes a node unless one is already within min_gap.
    const auto it = std::lower_bound(nodes.begin(), nodes.end(), b);
    const bool near = (it != nodes.end() && *it - b < min_gap) ||
                      (it != nodes.begin() && b - *(it - 1) < min_gap);
    if (!near) nodes.insert(it, b);
  }

  CdfTable t;
  t.w_ = nodes;
  t.f_.assign(nodes.size(), 0.0);
  t.m_.assign(nodes.size(), 0.0);
  double cum = 0.0;
  for (std::size_t j = 0; j + 1 < nodes.size(); ++j) {
    cum += quad::integrate(g, nodes[j], nodes[j + 1], 1e-13, 4).value;
    t.f_[j + 1] = cum;
  }
  if (!(cum > 0.0) || !std::isfinite(cum))
    throw numeric_error("CDF table: density has no resolvable mass");
  t.raw_total_ = cum * std::exp(shift);
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    t.f_[j] /= cum;
    t.m_[j] = g(nodes[j]) / cum;
  }
  t.f_.back() = 1.0;

  for (std::size_t j = 0; j + 1 < nodes.size(); ++j) {
    const double secant = (t.f_[j + 1] - t.f_[j]) / (nodes[j + 1] - nodes[j]);
    if (secant <= 0.0) {
      t.m_[j] = t.m_[j + 1] = 0.0;
      continue;
    }
    const double a = t.m_[j] / secant;
    const double b = t.m_[j + 1] / secant;
    const double r2 = a * a + b * b;
    if (r2 > 9.0) {
      const double tau = 3.0 / std::sqrt(r2);
      t.m_[j] = tau * a * secant;
      t.m_[j + 1] = tau * b * secant;
    }
  }

  for (std::size_t j = 0; j + 1 < nodes.size(); ++j) {
    const double mid = 0.5 * (nodes[j] + nodes[j + 1]);
    const double exact = t.f_[j] + quad::integrate(g, nodes[j], mid, 1e-13, 4).value / cum;
    t.max_interp_error_ = std::max(t.max_interp_error_, std::abs(t.hermite(j, mid) - exact));
  }
  return t;
}

inline SampleBatch sample(const CdfTable& cdf, std::size_t n, std::uint64_t seed,
                          std::string family = {}) {
  if (n < 1) throw domain_error("sample size must be at least 1");
  Rng rng(seed);
  SampleBatch out{{}, seed, std::move(family)};
  out.values.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.values.push_back(cdf.quantile(rng.uniform()));
  return out;
}

inline SampleBatch sample(const DensityModel& d, std::size_t n, std::uint64_t seed,
                          int resolution = kDefaultCdfResolution) {
  return sample(build_cdf(d, resolution), n, seed, d.family());
}

// ---------------------------------------------------------------------------
// Exact sampler for the closed-form piecewise density.

struct PieceMass {
  long i = 0;
  double mass = 0.0;
  double cum_upper = 0.0;  // CDF at the upper end of the piece
};

/// Piece-mass table in increasing y (decreasing i), truncated with the
/// same three-consecutive-negligible rule as the normalization.
class PolyDsSampler {
 public:
  explicit PolyDsSampler(const SymmetryParams& p) : params_(p) {
    const double k = p.k();
    const double c = poly_ds_norm_const(k);
    const auto s = detail::sum_pieces_outward(
        [&](long i) { return quad::Estimate{poly_ds_piece_integral(i, k) / c, 0.0}; });
    i_max_ = s.i_max;
    double cum = 0.0;
    for (long i = i_max_; i >= -i_max_; --i) {
      const double m = poly_ds_piece_integral(i, k) / c;
      cum += m;
      pieces_.push_back({i, m, cum});
    }
    for (auto& pc : pieces_) {
      pc.mass /= cum;
      pc.cum_upper /= cum;
    }
    pieces_.back().cum_upper = 1.0;
  }

  long i_max() const { return i_max_; }
  const std::vector<PieceMass>& pieces() const { return pieces_; }
  const SymmetryParams& params() const { return params_; }

  /// Renormalized mass of piece i (0 outside the truncated range).
  double piece_mass(long i) const {
    if (i > i_max_ || i < -i_max_) return 0.0;
    return pieces_[static_cast<std::size_t>(i_max_ - i)].mass;
  }

  /// Exact CDF, consistent with the truncated piece table.
  double cdf(double y) const {
    if (!(y > 0.0)) return 0.0;
    const long i = grid_index(y, params_).i;
    if (i > i_max_) return 0.0;
    if (i < -i_max_) return 1.0;
    const auto& pc = pieces_[static_cast<std::size_t>(i_max_ - i)];
    return pc.cum_upper - pc.mass * (1.0 - within_piece_fraction(i, y / params_.theta()));
  }

  double draw(Rng& rng) const {
    const double u = rng.uniform();
    auto it = std::lower_bound(pieces_.begin(), pieces_.end(), u,
                               [](const PieceMass& pc, double v) { return pc.cum_upper < v; });
    if (it == pieces_.end()) --it;
    return params_.theta() * std::exp(invert_within_piece(it->i, rng.uniform()));
  }

  SampleBatch sample(std::size_t n, std::uint64_t seed) const {
    if (n < 1) throw domain_error("sample size must be at least 1");
    Rng rng(seed);
    SampleBatch out{{}, seed, "poly-exact"};
    out.values.reserve(n);
    for (std::size_t j = 0; j < n; ++j) out.values.push_back(draw(rng));
    return out;
  }

 private:
  // Fraction of piece i's mass below x (x in piece coordinates).
  double within_piece_fraction(long i, double x) const {
    const double L = params_.log_k();
    const double di = static_cast<double>(i);
    const double la = -2.0 * di * L;
    if (i == 0) return (std::log(x) - la) / (2.0 * L);
    return std::expm1(2.0 * di * (std::log(x) - la)) / std::expm1(4.0 * di * L);
  }

  // log x of the v-quantile within piece i.
  double invert_within_piece(long i, double v) const {
    const double L = params_.log_k();
    const double di = static_cast<double>(i);
    const double la = -2.0 * di * L;
    if (i == 0) return la + v * 2.0 * L;
    return la + std::log1p(v * std::expm1(4.0 * di * L)) / (2.0 * di);
  }

  SymmetryParams params_;
  long i_max_ = 0;
  std::vector<PieceMass> pieces_;
};

inline SampleBatch poly_ds_sample_exact(const SymmetryParams& p, std::size_t n, std::uint64_t seed) {
  return PolyDsSampler(p).sample(n, seed);
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov.

inline double ks_statistic(const SampleBatch& batch, const std::function<double(double)>& cdf) {
  if (batch.values.empty()) throw domain_error("KS statistic needs a nonempty batch");
  if (!cdf) throw domain_error("KS statistic needs a comparison CDF");
  std::vector<double> v = batch.values;
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = cdf(v[i]);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

inline double ks_statistic(const SampleBatch& batch, const CdfTable& cdf) {
  if (cdf.log_nodes().size() < 2) throw domain_error("KS statistic: empty comparison grid");
  return ks_statistic(batch, [&cdf](double y) { return cdf(y); });
}

inline double ks_two_sample(const SampleBatch& a, const SampleBatch& b) {
  if (a.values.empty() || b.values.empty()) throw domain_error("KS statistic needs nonempty batches");
  std::vector<double> x = a.values, y = b.values;
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double t = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= t) ++i;
    while (j < y.size() && y[j] <= t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

/// Asymptotic 1% critical values.
inline double ks_critical_1pct(std::size_t n) { return 1.63 / std::sqrt(static_cast<double>(n)); }
inline double ks_critical_1pct(std::size_t n, std::size_t m) {
  const double a = static_cast<double>(n), b = static_cast<double>(m);
  return 1.63 * std::sqrt((a + b) / (a * b));
}

}  // namespace dsym
