#pragma once

// The function psi on (k^-4, 1] that parameterizes every doubly symmetric
// density, its construction from a seed on [k^-2, 1], and the smoothness and
// unimodality conditions it induces on the density.

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "dsym/core.hpp"

namespace dsym {

enum class PsiFamily { Alpha, Lognormal, Custom };

inline const char* to_string(PsiFamily f) {
  switch (f) {
    case PsiFamily::Alpha: return "alpha";
    case PsiFamily::Lognormal: return "lognormal";
    case PsiFamily::Custom: return "custom";
  }
  return "?";
}

/// Nonnegative function on [k^-2, 1], optionally with its derivative.
struct PsiSeed {
  std::function<double(double)> eval;
  std::function<double(double)> derivative;  // empty when not known
  double k = 2.0;
  PsiFamily family = PsiFamily::Custom;
  double alpha = std::numeric_limits<double>::quiet_NaN();  // Alpha family only

  double lower() const { return 1.0 / (k * k); }
};

inline PsiSeed make_psi_seed(std::function<double(double)> eval, double k,
                             std::function<double(double)> derivative = {}) {
  if (!(k > 1.0)) throw domain_error("psi seed requires k > 1");
  return PsiSeed{std::move(eval), std::move(derivative), k, PsiFamily::Custom, {}};
}

/// u^{alpha - 1/2}.  The unimodal range is 0 < alpha < 1.
inline PsiSeed make_psi_alpha(double alpha, double k) {
  if (!(k > 1.0)) throw domain_error("psi seed requires k > 1");
  const double e = alpha - 0.5;
  return PsiSeed{[e](double u) { return std::pow(u, e); },
                 [e](double u) { return e * std::pow(u, e - 1.0); }, k, PsiFamily::Alpha, alpha};
}

/// psi on the closed interval [k^-4, 1].  Arguments within a few ulps outside
/// the interval are clamped; anything further out is a domain error.
class PsiFunction {
 public:
  using Fn = std::function<double(double)>;

  PsiFunction(Fn eval, double k, std::string provenance, Fn derivative = {},
              PsiFamily family = PsiFamily::Custom)
      : eval_(std::move(eval)),
        deriv_(std::move(derivative)),
        k_(k),
        lower_(std::pow(k, -4.0)),
        provenance_(std::move(provenance)),
        family_(family) {
    if (!(k > 1.0)) throw domain_error("psi requires k > 1");
  }

  double operator()(double u) const { return eval_(clamp(u)); }
  bool has_derivative() const { return static_cast<bool>(deriv_); }
  double derivative(double u) const {
    if (!deriv_) throw domain_error("psi has no analytic derivative");
    return deriv_(clamp(u));
  }
  /// omega(u) = psi(u) / u.
  double omega(double u) const { return (*this)(u) / clamp(u); }

  double k() const { return k_; }
  double lower() const { return lower_; }
  const std::string& provenance() const { return provenance_; }
  PsiFamily family() const { return family_; }

 private:
  double clamp(double u) const {
    constexpr double slack = 1e-12;
    if (u > 1.0) {
      if (u <= 1.0 + slack) return 1.0;
    } else if (u < lower_) {
      if (u >= lower_ * (1.0 - slack)) return lower_;
    } else {
      return u;
    }
    std::ostringstream os;
    os << "psi evaluated at u=" << u << " outside [k^-4, 1] = [" << lower_ << ", 1]";
    throw domain_error(os.str());
  }

  Fn eval_;
  Fn deriv_;
  double k_;
  double lower_;
  std::string provenance_;
  PsiFamily family_;
};

/// u^{-1/2} exp(-log^2 u / (8 log k)), unnormalized.
inline PsiFunction make_psi_lognormal(double k) {
  if (!(k > 1.0)) throw domain_error("psi requires k > 1");
  const double lk = std::log(k);
  auto f = [lk](double u) {
    const double l = std::log(u);
    return std::exp(-0.5 * l - l * l / (8.0 * lk));
  };
  auto df = [lk, f](double u) {
    const double l = std::log(u);
    return f(u) * (-0.5 / u - l / (4.0 * u * lk));
  };
  return PsiFunction(f, k, "closed form: lognormal", df, PsiFamily::Lognormal);
}

inline constexpr int kSeedCheckPoints = 1001;

/// Extends a seed on [k^-2, 1] to [k^-4, 1] by psi(u) = seed(1/(k^4 u)) below
/// k^-2.  The result satisfies the reflection identity by construction.
inline PsiFunction extend_seed(const PsiSeed& seed) {
  if (!seed.eval) throw domain_error("psi seed has no evaluator");
  if (!(seed.k > 1.0)) throw domain_error("psi seed requires k > 1");
  const double lo = seed.lower();
  for (int j = 0; j < kSeedCheckPoints; ++j) {
    const double u = std::exp(std::log(lo) * (1.0 - double(j) / (kSeedCheckPoints - 1)));
    const double v = seed.eval(u);
    if (!(v >= 0.0) || !std::isfinite(v)) {
      std::ostringstream os;
      os << "psi seed is negative or non-finite at u=" << u << " (value " << v << ")";
      throw domain_error(os.str());
    }
  }

  const double k4 = std::pow(seed.k, 4.0);
  auto s = std::make_shared<const PsiSeed>(seed);
  auto f = [s, lo, k4](double u) {
    return u >= lo ? s->eval(u) : s->eval(1.0 / (k4 * u));
  };
  PsiFunction::Fn df;
  if (seed.derivative) {
    df = [s, lo, k4](double u) {
      if (u >= lo) return s->derivative(u);
      const double v = 1.0 / (k4 * u);
      return -s->derivative(v) * v / u;
    };
  }
  std::ostringstream prov;
  prov << "seed(" << to_string(seed.family);
  if (seed.family == PsiFamily::Alpha) prov << ", alpha=" << seed.alpha;
  prov << ") extended by reflection";
  return PsiFunction(f, seed.k, prov.str(), df, seed.family);
}

/// Reads a psi function's restriction to [k^-2, 1] back as a seed.
inline PsiSeed restrict_to_seed(const PsiFunction& psi) {
  auto p = std::make_shared<const PsiFunction>(psi);
  PsiSeed s{[p](double u) { return (*p)(u); }, {}, psi.k(), psi.family(), {}};
  if (psi.has_derivative()) s.derivative = [p](double u) { return p->derivative(u); };
  return s;
}

/// Sup over n log-spaced u in (k^-4, 1] of |psi(u) - psi(1/(k^4 u))| / sup psi.
inline double psi_reflection_residual(const PsiFunction& psi, int n_points = 2001) {
  if (n_points < 3) throw domain_error("reflection check needs at least 3 points");
  const double k4 = std::pow(psi.k(), 4.0);
  const double span = std::log(k4);
  double sup_defect = 0.0;
  double sup_value = 0.0;
  for (int j = 1; j <= n_points; ++j) {
    const double u = j == n_points ? 1.0 : std::exp(-span + span * j / n_points);
    const double a = psi(u);
    const double b = psi(1.0 / (k4 * u));
    sup_defect = std::max(sup_defect, std::abs(a - b));
    sup_value = std::max({sup_value, a, b});
  }
  if (!(sup_value > 0.0)) throw degenerate_error("psi vanishes identically");
  return sup_defect / sup_value;
}

struct SmoothnessReport {
  bool continuous = false;
  bool midpoint_smooth = false;
  bool endpoint_smooth = false;
  bool unimodal = false;
  double continuity_defect = 0.0;
  double midpoint_defect = 0.0;
  double endpoint_defect = 0.0;
};

inline constexpr double kSmoothnessTol = 1e-6;
inline constexpr double kFdRelStep = 1e-6;

namespace detail {

// Second-order one-sided differences; dir = +1 looks right, -1 looks left.
inline double one_sided_derivative(const PsiFunction& psi, double u, int dir) {
  const double h = kFdRelStep * u * dir;
  return (-3.0 * psi(u) + 4.0 * psi(u + h) - psi(u + 2.0 * h)) / (2.0 * h);
}

inline double psi_derivative(const PsiFunction& psi, double u, int side) {
  if (psi.has_derivative()) return psi.derivative(u);
  if (side != 0) return one_sided_derivative(psi, u, side);
  const double h = kFdRelStep * u;
  return (psi(u + h) - psi(u - h)) / (2.0 * h);
}

}  // namespace detail

struct UnimodalityResult {
  bool unimodal = false;
  std::optional<double> first_violation;  // u where a condition first fails
  std::string diagnostics;
};

inline constexpr int kMonotoneScanPoints = 10000;
inline constexpr double kMonotoneSlack = 1e-12;

/// Mode at theta requires sqrt(u) psi(u) increasing and psi(u)/sqrt(u)
/// decreasing.  With a derivative this is |(log psi)'(u)| < 1/(2u) on
/// (k^-2, 1); otherwise both products are scanned for strict monotonicity
/// over (k^-4, 1].
inline UnimodalityResult unimodality_check(const PsiFunction& psi) {
  UnimodalityResult out;
  const double k2inv = 1.0 / (psi.k() * psi.k());
  if (psi.has_derivative()) {
    const double span = -std::log(k2inv);
    for (int j = 1; j <= kMonotoneScanPoints; ++j) {
      const double u = std::exp(-span + span * j / (kMonotoneScanPoints + 1));
      const double v = psi(u);
      const double ratio = v > 0 ? 2.0 * u * std::abs(psi.derivative(u) / v)
                                 : std::numeric_limits<double>::infinity();
      if (!(ratio < 1.0 - kMonotoneSlack)) {
        std::ostringstream os;
        os << "2u |(log psi)'(u)| = " << ratio << " >= 1 at u=" << u;
        out.first_violation = u;
        out.diagnostics = os.str();
        return out;
      }
    }
    out.unimodal = true;
    return out;
  }

  const double span = std::log(std::pow(psi.k(), 4.0));
  double prev_inc = 0.0;
  double prev_dec = 0.0;
  for (int j = 1; j <= kMonotoneScanPoints; ++j) {
    const double u = j == kMonotoneScanPoints ? 1.0 : std::exp(-span + span * j / kMonotoneScanPoints);
    const double v = psi(u);
    const double inc = std::sqrt(u) * v;
    const double dec = v / std::sqrt(u);
    if (j > 1) {
      const char* which = nullptr;
      if (!(inc - prev_inc > kMonotoneSlack * std::abs(prev_inc))) which = "sqrt(u) psi(u) not increasing";
      else if (!(prev_dec - dec > kMonotoneSlack * std::abs(prev_dec))) which = "psi(u)/sqrt(u) not decreasing";
      if (which) {
        std::ostringstream os;
        os << which << " at u=" << u;
        out.first_violation = u;
        out.diagnostics = os.str();
        return out;
      }
    }
    prev_inc = inc;
    prev_dec = dec;
  }
  out.unimodal = true;
  return out;
}

inline SmoothnessReport smoothness_report(const PsiFunction& psi) {
  SmoothnessReport r;
  const double top = psi(1.0);
  if (!std::isfinite(top)) throw numeric_error("psi(1) is not finite");
  r.continuity_defect = top > 0 ? std::abs(top - psi(psi.lower())) / top
                                : std::abs(top - psi(psi.lower()));
  // At k^-2 the derivative is taken from the seed side; the reflected side
  // has the same magnitude with opposite sign.
  const double mid = 1.0 / (psi.k() * psi.k());
  r.midpoint_defect = std::abs(detail::psi_derivative(psi, mid, +1));
  r.endpoint_defect = std::abs(2.0 * detail::psi_derivative(psi, 1.0, -1) + top);
  if (!std::isfinite(r.midpoint_defect) || !std::isfinite(r.endpoint_defect))
    throw numeric_error("psi derivative evaluation failed");
  r.continuous = r.continuity_defect <= kSmoothnessTol;
  r.midpoint_smooth = r.midpoint_defect <= kSmoothnessTol;
  r.endpoint_smooth = r.endpoint_defect <= kSmoothnessTol;
  r.unimodal = unimodality_check(psi).unimodal;
  return r;
}

}  // namespace dsym
