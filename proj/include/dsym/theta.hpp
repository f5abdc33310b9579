#pragma once

// Ramanujan's theta series L_k(y) = sum_n y^n k^{-n^2/2} and the Askey/Berg
// densities proportional to y^{gamma-1} / L_k(y).

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <vector>

#include "dsym/core.hpp"
#include "dsym/densities.hpp"

namespace dsym {

struct ThetaEval {
  double value = 0.0;      // may overflow to inf for extreme y; use log_value
  double log_value = 0.0;
  int n_terms = 0;
  double tail_bound = 0.0;  // absolute bound on the omitted terms
};

inline constexpr double kThetaTermRelTol = 1e-18;
inline constexpr double kThetaTailRelTol = 1e-16;

namespace detail {

/// Sums exp(m r - L m^2 / 2) for m = 1, 2, ... until the next term and the
/// geometric majorant of the rest are both negligible against `total`.
/// Returns the tail bound (same scale as the terms).
inline double theta_one_side(double r, double L, double& total, int& n_terms) {
  for (int m = 1;; ++m) {
    const double dm = m;
    const double term = std::exp(dm * r - 0.5 * L * dm * dm);
    total += term;
    ++n_terms;
    // Successive-term ratio exp(r - L (2m+1)/2) decreases in m.
    const double next = std::exp((dm + 1.0) * r - 0.5 * L * (dm + 1.0) * (dm + 1.0));
    const double q = std::exp(r - 0.5 * L * (2.0 * dm + 3.0));
    if (next < kThetaTermRelTol * total && q < 1.0) {
      const double tail = next / (1.0 - q);
      if (tail < kThetaTailRelTol * total) return tail;
    }
    if (m > 10'000'000) throw numeric_error("theta series failed to converge");
  }
}

}  // namespace detail

/// Sums outward from the peak index round(log y / log k), so terms are
/// scaled relative to the largest one and nothing overflows before the
/// final exponent is applied.
inline ThetaEval ramanujan_theta(double y, double k) {
  if (!(k > 1.0) || !std::isfinite(k)) throw domain_error("theta series requires k > 1");
  if (!(y > 0.0) || !std::isfinite(y)) throw domain_error("theta series requires finite y > 0");
  const double L = std::log(k);
  const double ly = std::log(y);
  const double peak = std::nearbyint(ly / L);
  const double r = ly - L * peak;  // |r| <= L/2
  const double log_peak_term = peak * ly - 0.5 * L * peak * peak;

  double total = 1.0;
  int n_terms = 1;
  const double tail_up = detail::theta_one_side(r, L, total, n_terms);
  const double tail_down = detail::theta_one_side(-r, L, total, n_terms);

  ThetaEval out;
  out.log_value = log_peak_term + std::log(total);
  out.value = std::exp(out.log_value);
  out.n_terms = n_terms;
  out.tail_bound = (tail_up + tail_down) * std::exp(log_peak_term);
  return out;
}

inline double log_ramanujan_theta(double y, double k) { return ramanujan_theta(y, k).log_value; }

/// Sup over the ratio grid of |L_k(k^c y) / (y^{2c} L_k(k^c / y)) - 1|.
inline ResidualReport theta_shift_identity_residual(double c, double k, const GridSpec& grid,
                                                    double tol = 1e-13) {
  if (!(k > 1.0)) throw domain_error("theta series requires k > 1");
  const double shift = c * std::log(k);
  double sup = 0.0;
  for (int j = 0; j < grid.n_points(); ++j) {
    const double w = grid.w(j);
    const double a = log_ramanujan_theta(std::exp(shift + w), k);
    const double b = log_ramanujan_theta(std::exp(shift - w), k);
    sup = std::max(sup, std::abs(std::expm1(a - b - 2.0 * c * w)));
  }
  ResidualReport r{"theta_shift", sup, 1.0, grid, tol, sup <= tol, {}};
  return r;
}

/// True when 2 gamma is an integer.
inline bool is_half_integer_multiple(double gamma) {
  const double t = 2.0 * gamma;
  return std::abs(t - std::nearbyint(t)) < 1e-12;
}

class AskeyBergDensity {
 public:
  static AskeyBergDensity make(double gamma, double k) {
    if (!(k > 1.0) || !std::isfinite(k)) throw domain_error("Askey/Berg density requires k > 1");
    if (!std::isfinite(gamma)) throw domain_error("Askey/Berg density requires finite gamma");
    return AskeyBergDensity(gamma, k);
  }

  double gamma() const { return gamma_; }
  double k() const { return k_; }
  const NormMeta& norm_meta() const { return norm_; }

  /// delta = k^gamma, theta = k^{gamma-1}; present only for integer or
  /// half-integer gamma.
  std::optional<SymmetryParams> symmetry() const {
    if (!is_half_integer_multiple(gamma_)) return std::nullopt;
    return SymmetryParams::make(std::pow(k_, gamma_ - 1.0), k_);
  }

  double log_pdf(double y) const {
    if (!(y > 0.0)) throw domain_error("density evaluated at nonpositive y");
    return (gamma_ - 1.0) * std::log(y) - log_ramanujan_theta(y, k_) - log_norm_;
  }
  double pdf(double y) const { return std::exp(log_pdf(y)); }

  DensityModel model() const {
    std::ostringstream tag;
    tag << "askeyberg(gamma=" << gamma_ << ", k=" << k_ << ")";
    return DensityModel(tag.str(), [self = *this](double y) { return self.log_pdf(y); }, norm_);
  }

 private:
  AskeyBergDensity(double gamma, double k) : gamma_(gamma), k_(k) {
    const auto est = quad::integrate_log(
        [gamma, k](double w) { return gamma * w - log_ramanujan_theta(std::exp(w), k); });
    if (!(est.rel_error() < 1e-10)) {
      std::ostringstream os;
      os << "Askey/Berg normalization did not converge (relative error " << est.rel_error() << ")";
      throw numeric_error(os.str());
    }
    log_norm_ = est.log_value();
    norm_ = {est.value(), est.rel_error()};
  }

  double gamma_;
  double k_;
  double log_norm_ = 0.0;
  NormMeta norm_;
};

inline AskeyBergDensity make_askey_berg(double gamma, double k) {
  return AskeyBergDensity::make(gamma, k);
}

/// Lognormal sharing median k^gamma and mode k^{gamma-1}: mu = gamma log k,
/// sigma^2 = log k.
inline LognormalParams askey_berg_matched_lognormal(double gamma, double k) {
  const double L = std::log(k);
  return lognormal_params(gamma * L, std::sqrt(L));
}

/// Sup over the grid of |f_gamma - f_0| / sup f_0.
inline double askey_berg_lognormal_gap(double gamma, double k, const GridSpec& grid) {
  const auto ab = make_askey_berg(gamma, k);
  const auto ln = askey_berg_matched_lognormal(gamma, k);
  double sup_gap = 0.0;
  double sup_ref = 0.0;
  for (int j = 0; j < grid.n_points(); ++j) {
    const double y = std::exp(grid.w(j));
    const double f0 = std::exp(lognormal_log_pdf(y, ln.mu, ln.sigma));
    sup_gap = std::max(sup_gap, std::abs(ab.pdf(y) - f0));
    sup_ref = std::max(sup_ref, f0);
  }
  if (!(sup_ref > 0.0)) throw degenerate_error("matched lognormal vanishes on the grid");
  return sup_gap / sup_ref;
}

/// Absolute grid spanning the Askey/Berg bulk for the given (gamma, k).
inline GridSpec askey_berg_grid(double gamma, double k, int n = kDefaultGridPoints) {
  return default_grid(SymmetryParams::make(std::pow(k, gamma - 1.0), k), n);
}

struct GridpointDefect {
  long p = 0;
  double defect = 0.0;
};

struct GridpointReport {
  std::vector<GridpointDefect> defects;
  bool exactness_claimed = false;  // gamma integer or half-integer
  double max_defect() const {
    double m = 0.0;
    for (const auto& d : defects) m = std::max(m, d.defect);
    return m;
  }
};

/// Relative differences |f_gamma(k^p) - f_0(k^p)| / f_0(k^p) for p in
/// [p_lo, p_hi].
inline GridpointReport gridpoint_equality_check(double gamma, double k, long p_lo, long p_hi) {
  if (p_lo > p_hi) throw domain_error("empty p range");
  const auto ab = make_askey_berg(gamma, k);
  const auto ln = askey_berg_matched_lognormal(gamma, k);
  GridpointReport out;
  out.exactness_claimed = is_half_integer_multiple(gamma);
  for (long p = p_lo; p <= p_hi; ++p) {
    const double y = std::pow(k, static_cast<double>(p));
    const double lf0 = lognormal_log_pdf(y, ln.mu, ln.sigma);
    out.defects.push_back({p, std::abs(std::expm1(ab.log_pdf(y) - lf0))});
  }
  return out;
}

}  // namespace dsym
