#pragma once

// Concrete families: the lognormal, its Stieltjes perturbations, the general
// doubly symmetric density built from psi, and the closed-form piecewise
// odd-power density obtained from constant psi.

#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>

#include "dsym/core.hpp"
#include "dsym/psi.hpp"

namespace dsym {

// ---------------------------------------------------------------------------
// Lognormal

struct LognormalParams {
  double mu = 0.0;
  double sigma = 1.0;

  double delta1() const { return std::exp(mu); }               // median
  double theta1() const { return std::exp(mu - sigma * sigma); }  // mode
  double k() const { return std::exp(sigma * sigma); }
  SymmetryParams symmetry() const { return SymmetryParams::make(theta1(), k()); }
};

inline LognormalParams lognormal_params(double mu, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw domain_error("lognormal requires sigma > 0");
  if (!std::isfinite(mu)) throw domain_error("lognormal requires finite mu");
  return {mu, sigma};
}

/// Lognormal with mode theta and median k theta.
inline LognormalParams matched_lognormal(const SymmetryParams& p) {
  return lognormal_params(std::log(p.theta()) + p.log_k(), std::sqrt(p.log_k()));
}

inline double lognormal_log_pdf(double y, double mu, double sigma) {
  const double z = (std::log(y) - mu) / sigma;
  return -0.5 * z * z - std::log(sigma * y) - 0.5 * std::log(2.0 * std::numbers::pi);
}

inline double lognormal_cdf(double y, double mu, double sigma) {
  if (!(y > 0.0)) return 0.0;
  return 0.5 * std::erfc(-(std::log(y) - mu) / (sigma * std::numbers::sqrt2));
}

inline DensityModel make_lognormal(double mu, double sigma) {
  const auto p = lognormal_params(mu, sigma);
  std::ostringstream tag;
  tag << "lognormal(mu=" << p.mu << ", sigma=" << p.sigma << ")";
  return DensityModel(tag.str(), [p](double y) { return lognormal_log_pdf(y, p.mu, p.sigma); });
}

inline DensityModel make_lognormal(const LognormalParams& p) { return make_lognormal(p.mu, p.sigma); }

// ---------------------------------------------------------------------------
// Stieltjes class: f0(y) [1 + eps sin(2 pi (log y - mu) / sigma^2)]

struct StieltjesParams {
  double mu = 0.0;
  double sigma = 1.0;
  double eps = 0.0;

  LognormalParams base() const { return {mu, sigma}; }
};

inline StieltjesParams stieltjes_params(double mu, double sigma, double eps) {
  lognormal_params(mu, sigma);
  if (!(std::abs(eps) <= 1.0)) throw domain_error("Stieltjes perturbation requires |eps| <= 1 (density would go negative)");
  return {mu, sigma, eps};
}

inline DensityModel make_stieltjes(const StieltjesParams& raw) {
  const auto p = stieltjes_params(raw.mu, raw.sigma, raw.eps);
  const double freq = 2.0 * std::numbers::pi / (p.sigma * p.sigma);
  std::ostringstream tag;
  tag << "stieltjes(mu=" << p.mu << ", sigma=" << p.sigma << ", eps=" << p.eps << ")";
  return DensityModel(tag.str(), [p, freq](double y) {
    const double l = std::log(y);
    const double z = (l - p.mu) / p.sigma;
    const double base = -0.5 * z * z - std::log(p.sigma * y) - 0.5 * std::log(2.0 * std::numbers::pi);
    return base + std::log1p(p.eps * std::sin(freq * (l - p.mu)));
  });
}

struct CrossResidual {
  ResidualReport log_pair;  // y^2 f_eps(delta1 y) = f_{-eps}(delta1 / y)
  ResidualReport r_pair;    // f_eps(theta1 y) = f_{-eps}(theta1 / y)
};

/// Residuals of the identities pairing f_eps with f_{-eps} across the median
/// and the mode of the base lognormal.
inline CrossResidual stieltjes_cross_residual(const StieltjesParams& p, const GridSpec& grid,
                                              double tol = 1e-12) {
  const auto plus = make_stieltjes(p);
  const auto minus = make_stieltjes({p.mu, p.sigma, -p.eps});
  const double delta = p.base().delta1();
  const double theta = p.base().theta1();

  double sup_log = 0.0, sup_r = 0.0, norm_log = 0.0, norm_r = 0.0;
  for (int j = 0; j < grid.n_points(); ++j) {
    const double y = std::exp(grid.w(j));
    const double a = plus.pdf(delta * y);
    const double b = minus.pdf(delta / y);
    sup_log = std::max(sup_log, std::abs(y * y * a - b));
    norm_log = std::max({norm_log, a, b});
    const double c = plus.pdf(theta * y);
    const double d = minus.pdf(theta / y);
    sup_r = std::max(sup_r, std::abs(c - d));
    norm_r = std::max({norm_r, c, d});
  }
  return {detail::finish_report("stieltjes_cross_log_symmetry", sup_log, norm_log, grid, tol),
          detail::finish_report("stieltjes_cross_r_symmetry", sup_r, norm_r, grid, tol)};
}

// ---------------------------------------------------------------------------
// Piece-sum normalization shared by the psi-built and closed-form densities.

inline constexpr double kPieceNegligible = 1e-16;
inline constexpr int kPieceRunLength = 3;
inline constexpr long kMaxPieces = 100000;

struct PieceSum {
  double total = 0.0;
  double abs_error = 0.0;
  long i_max = 0;
};

namespace detail {

/// Adds piece_integral(i) for i = 0, 1, -1, 2, -2, ... until three
/// consecutive contributions fall below 1e-16 of the running total.
template <class F>
PieceSum sum_pieces_outward(F&& piece_integral) {
  PieceSum out;
  int run = 0;
  for (long n = 0; n < kMaxPieces; ++n) {
    const long i = n % 2 == 0 ? -(n / 2) : (n + 1) / 2;
    const quad::Estimate e = piece_integral(i);
    out.total += e.value;
    out.abs_error += e.abs_error;
    out.i_max = std::max(out.i_max, std::abs(i));
    if (out.total > 0.0 && e.value < kPieceNegligible * out.total) {
      if (++run == kPieceRunLength) return out;
    } else {
      run = 0;
    }
  }
  throw numeric_error("piece normalization did not converge");
}

/// Integral over (exp(a), exp(b)] in y of exp(log_g(w)) where log_g already
/// includes the dy = y dw Jacobian.
template <class LogG>
quad::Estimate integrate_piece(LogG&& log_g, double a, double b) {
  const double shift = std::max({log_g(a), log_g(b), log_g(0.5 * (a + b))});
  if (!std::isfinite(shift)) return {};
  auto f = [&](double w) { return std::exp(log_g(w) - shift); };
  quad::Estimate total;
  const auto nodes = quad::chunk_nodes(a, b, {});
  for (std::size_t j = 0; j + 1 < nodes.size(); ++j) {
    const auto e = quad::integrate(f, nodes[j], nodes[j + 1]);
    total.value += e.value;
    total.abs_error += e.abs_error;
  }
  const double scale = std::exp(shift);
  return {total.value * scale, total.abs_error * scale};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Doubly symmetric density from psi.

inline constexpr double kPsiReflectionTol = 1e-10;

/// f(theta x) proportional to k^{2i(i-1)} x^{2i-1} psi(k^{4(i-1)} x^2) on
/// piece i, x in (k^{-2i}, k^{2-2i}].  A second evaluator works from
/// omega(u) = psi(u)/u in the original y coordinates and is normalized
/// independently.
class PakesDensity {
 public:
  static PakesDensity make(const PsiFunction& psi, const SymmetryParams& params) {
    if (std::abs(psi.k() - params.k()) > 1e-12 * params.k())
      throw domain_error("psi was built for a different k than the symmetry parameters");
    const double refl = psi_reflection_residual(psi);
    if (!(refl <= kPsiReflectionTol)) {
      std::ostringstream os;
      os << "psi fails the reflection identity (residual " << refl << ")";
      throw domain_error(os.str());
    }
    return PakesDensity(psi, params);
  }

  const PsiFunction& psi() const { return *psi_; }
  const SymmetryParams& params() const { return params_; }
  const NormMeta& norm_meta() const { return norm_; }
  double omega_form_norm() const { return norm_omega_; }
  long i_max() const { return i_max_; }

  /// Unnormalized log value at x = y / theta.
  double log_unnormalized(double x) const {
    const double L = params_.log_k();
    const long i = grid_index(x * params_.theta(), params_).i;
    const double di = static_cast<double>(i);
    const double lx = std::log(x);
    const double lu = 4.0 * (di - 1.0) * L + 2.0 * lx;
    return 2.0 * di * (di - 1.0) * L + (2.0 * di - 1.0) * lx + std::log((*psi_)(std::exp(lu)));
  }

  /// Unnormalized log value of the omega-form evaluator at y.
  double log_unnormalized_omega_form(double y) const {
    const double L = params_.log_k();
    const double lt = std::log(params_.theta());
    const long i = grid_index(y, params_).i;
    const double di = static_cast<double>(i);
    const double ly = std::log(y);
    const double u = std::exp(-2.0 * lt + 4.0 * (di - 1.0) * L + 2.0 * ly);
    return -2.0 * di * lt + 2.0 * di * (di + 1.0) * L + (2.0 * di + 1.0) * ly +
           std::log(psi_->omega(u));
  }

  double log_pdf(double y) const {
    if (!(y > 0.0)) throw domain_error("density evaluated at nonpositive y");
    return log_unnormalized(y / params_.theta()) - std::log(params_.theta()) - log_norm_;
  }
  double pdf(double y) const { return std::exp(log_pdf(y)); }
  double pdf_omega_form(double y) const {
    return std::exp(log_unnormalized_omega_form(y) - std::log(norm_omega_));
  }

  DensityModel model() const {
    auto self = std::make_shared<const PakesDensity>(*this);
    std::ostringstream tag;
    tag << "pakes(theta=" << params_.theta() << ", k=" << params_.k() << ", psi=" << psi_->provenance() << ")";
    return DensityModel(
        tag.str(), [self](double y) { return self->log_pdf(y); }, norm_,
        [p = params_](double lo, double hi) { return grid_endpoints_log(p, lo, hi); });
  }

 private:
  PakesDensity(const PsiFunction& psi, const SymmetryParams& params)
      : psi_(std::make_shared<const PsiFunction>(psi)), params_(params) {
    const double L = params_.log_k();
    // x-form: integrate over x, Jacobian dx = x dw.
    const auto xs = detail::sum_pieces_outward([&](long i) {
      const double a = -2.0 * static_cast<double>(i) * L;
      return detail::integrate_piece(
          [&](double w) { return log_unnormalized(std::exp(w)) + w; }, a, a + 2.0 * L);
    });
    if (!(xs.total > 0.0)) throw numeric_error("psi-built density has zero mass");
    norm_ = {xs.total, xs.abs_error / xs.total};
    log_norm_ = std::log(xs.total);
    i_max_ = xs.i_max;

    const double lt = std::log(params_.theta());
    const auto ys = detail::sum_pieces_outward([&](long i) {
      const double a = lt - 2.0 * static_cast<double>(i) * L;
      return detail::integrate_piece(
          [&](double w) { return log_unnormalized_omega_form(std::exp(w)) + w; }, a, a + 2.0 * L);
    });
    norm_omega_ = ys.total;
  }

  std::shared_ptr<const PsiFunction> psi_;
  SymmetryParams params_;
  NormMeta norm_;
  double log_norm_ = 0.0;
  double norm_omega_ = 1.0;
  long i_max_ = 0;
};

inline PakesDensity make_pakes_ds(const PsiFunction& psi, const SymmetryParams& params) {
  return PakesDensity::make(psi, params);
}

// ---------------------------------------------------------------------------
// Closed-form piecewise odd-power density.

inline constexpr double kSeriesRelTol = 1e-18;
inline constexpr double kPolyNormCrossTol = 1e-12;

/// C(k) = 2 log k + sum_{j>=1} j^{-1} k^{-2j^2} (k^{2j} - k^{-2j}).
inline double poly_ds_norm_const(double k) {
  if (!(k > 1.0) || !std::isfinite(k)) throw domain_error("normalizing constant requires k > 1");
  const double L = std::log(k);
  double sum = 2.0 * L;
  for (long j = 1;; ++j) {
    const double dj = static_cast<double>(j);
    const double term = std::exp(-2.0 * dj * dj * L) * 2.0 * std::sinh(2.0 * dj * L) / dj;
    sum += term;
    if (term < kSeriesRelTol * sum) break;
  }
  return sum;
}

/// Integral of the unnormalized numerator over piece i (x coordinates):
/// k^{-2i^2}(k^{2i} - k^{-2i}) / (2i), and 2 log k for i = 0.
inline double poly_ds_piece_integral(long i, double k) {
  const double L = std::log(k);
  if (i == 0) return 2.0 * L;
  const double di = static_cast<double>(i);
  return std::exp(-2.0 * di * di * L) * std::sinh(2.0 * di * L) / di;
}

/// Exponents, in units of log k, of the two one-sided limits of the
/// unnormalized numerator at x = k^{2-2i}: piece i (closed end) and piece
/// i-1 (open end).  Integer arithmetic, so equality is exact.
inline std::pair<long, long> poly_ds_boundary_exponents(long i) {
  const long left = 2 * i * (i - 1) + (2 * i - 1) * (2 - 2 * i);
  const long j = i - 1;
  const long right = 2 * j * (j - 1) + (2 * j - 1) * (2 - 2 * i);
  return {left, right};
}

class PolyDsDensity {
 public:
  static PolyDsDensity make(const SymmetryParams& params) { return PolyDsDensity(params); }

  const SymmetryParams& params() const { return params_; }
  double norm_const() const { return c_; }
  double quadrature_norm() const { return c_quad_; }

  /// log of k^{2i(i-1)} x^{2i-1}, x = y/theta.
  double log_numerator(double x) const {
    const long i = grid_index(x * params_.theta(), params_).i;
    const double di = static_cast<double>(i);
    return 2.0 * di * (di - 1.0) * params_.log_k() + (2.0 * di - 1.0) * std::log(x);
  }
  double log_pdf(double y) const {
    if (!(y > 0.0)) throw domain_error("density evaluated at nonpositive y");
    return log_numerator(y / params_.theta()) - std::log(params_.theta() * c_);
  }
  double pdf(double y) const { return std::exp(log_pdf(y)); }

  DensityModel model() const {
    std::ostringstream tag;
    tag << "poly(theta=" << params_.theta() << ", k=" << params_.k() << ")";
    return DensityModel(
        tag.str(), [self = *this](double y) { return self.log_pdf(y); }, {c_, 0.0},
        [p = params_](double lo, double hi) { return grid_endpoints_log(p, lo, hi); });
  }

 private:
  explicit PolyDsDensity(const SymmetryParams& params)
      : params_(params), c_(poly_ds_norm_const(params.k())) {
    const double L = params_.log_k();
    const auto s = detail::sum_pieces_outward([&](long i) {
      const double di = static_cast<double>(i);
      const double a = -2.0 * di * L;
      // numerator times Jacobian x: k^{2i(i-1)} x^{2i}.
      return detail::integrate_piece(
          [&](double w) { return 2.0 * di * (di - 1.0) * L + 2.0 * di * w; }, a, a + 2.0 * L);
    });
    c_quad_ = s.total;
    if (!(std::abs(c_quad_ - c_) <= kPolyNormCrossTol * c_)) {
      std::ostringstream os;
      os.precision(17);
      os << "normalizing constant series " << c_ << " disagrees with quadrature " << c_quad_;
      throw numeric_error(os.str());
    }
  }

  SymmetryParams params_;
  double c_;
  double c_quad_ = 0.0;
};

inline PolyDsDensity make_poly_ds(const SymmetryParams& params) { return PolyDsDensity::make(params); }

}  // namespace dsym
