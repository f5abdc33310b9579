#pragma once

// Moments, the two-step moment recursion shared by every doubly symmetric
// law, periodicity of moment ratios, identities of the log density, and a
// numerical probe of the power-transform characterization of the lognormal.

#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "dsym/core.hpp"

namespace dsym {

inline constexpr double kMomentRelTol = 1e-10;

struct MomentEstimate {
  double value = 0.0;
  double rel_error = 0.0;
};

/// E(Y^s) in log coordinates; the window follows the peak of y^{s+1} f(y).
inline MomentEstimate moment(const DensityModel& d, double s) {
  const auto est = raw_moment(d, s);
  const double v = est.value();
  if (!(est.rel_error() < kMomentRelTol) || !std::isfinite(v) || !(v > 0.0)) {
    std::ostringstream os;
    os << "moment s=" << s << " of " << d.family() << " did not converge (value " << v
       << ", relative error " << est.rel_error() << ")";
    throw numeric_error(os.str());
  }
  return {v, est.rel_error()};
}

/// delta^{2(s+2)} / theta^{2(s+1)}.
inline double recursion_factor(const SymmetryParams& p, double s) {
  return std::exp(2.0 * (s + 2.0) * std::log(p.delta()) - 2.0 * (s + 1.0) * std::log(p.theta()));
}

struct MomentReport {
  std::vector<double> s;
  std::vector<MomentEstimate> moments;  // E(Y^s)
  std::vector<double> defects;          // relative recursion defect per s

  double max_defect() const {
    double m = 0.0;
    for (double d : defects) m = std::max(m, d);
    return m;
  }
};

inline MomentReport moment_recursion_residual(const DensityModel& d, const SymmetryParams& p,
                                              const std::vector<double>& s_list) {
  MomentReport r;
  for (double s : s_list) {
    const auto lo = moment(d, s);
    const auto hi = moment(d, s + 2.0);
    r.s.push_back(s);
    r.moments.push_back(lo);
    r.defects.push_back(std::abs(hi.value - recursion_factor(p, s) * lo.value) / hi.value);
  }
  return r;
}

/// sup over s of |r(s + period) - r(s)| / r(s), r = E_d(Y^s) / E_ref(Y^s).
inline double moment_ratio_periodicity(const DensityModel& d, const DensityModel& reference,
                                       const std::vector<double>& s_grid, double period = 2.0) {
  if (s_grid.empty()) throw domain_error("periodicity check needs at least one s");
  auto ratio = [&](double s) { return moment(d, s).value / moment(reference, s).value; };
  double sup = 0.0;
  for (double s : s_grid) {
    const double r0 = ratio(s);
    sup = std::max(sup, std::abs(ratio(s + period) - r0) / r0);
  }
  return sup;
}

/// Smallest period in `candidates` whose periodicity defect is below tol,
/// or NaN when none qualifies.
inline double minimal_moment_ratio_period(const DensityModel& d, const DensityModel& reference,
                                          const std::vector<double>& s_grid,
                                          const std::vector<double>& candidates, double tol) {
  for (double t : candidates)
    if (moment_ratio_periodicity(d, reference, s_grid, t) < tol) return t;
  return std::numeric_limits<double>::quiet_NaN();
}

// ---------------------------------------------------------------------------
// Log-density identities, with h(w) = log f(e^w) and l(w) = h(w) - w:
//   shift:      h(w - 2 log k) = 2w - 2 log theta - 2 log k + h(w)
//   reflection: h(w) = h(2 log theta - w)
//   combined:   l(w - 2 log k) = l(2 log theta - w)

struct LogIdentityReport {
  double shift = 0.0;
  double reflection = 0.0;
  double combined = 0.0;
  int clipped_points = 0;  // grid points skipped where the density is zero
};

inline LogIdentityReport log_identities_report(const DensityModel& d, const SymmetryParams& p,
                                               const GridSpec& grid) {
  const double lt = std::log(p.theta());
  const double two_l = 2.0 * p.log_k();
  auto h = [&](double w) { return d.log_pdf(std::exp(w)); };
  LogIdentityReport r;
  for (int j = 0; j < grid.n_points(); ++j) {
    const double w = grid.w(j);
    const double h_w = h(w);
    const double h_shift = h(w - two_l);
    const double h_refl = h(2.0 * lt - w);
    if (!std::isfinite(h_w) || !std::isfinite(h_shift) || !std::isfinite(h_refl)) {
      ++r.clipped_points;
      continue;
    }
    r.shift = std::max(r.shift, std::abs(h_shift - (2.0 * w - 2.0 * lt - two_l + h_w)));
    r.reflection = std::max(r.reflection, std::abs(h_w - h_refl));
    const double l_shift = h_shift - (w - two_l);
    const double l_refl = h_refl - (2.0 * lt - w);
    r.combined = std::max(r.combined, std::abs(l_shift - l_refl));
  }
  if (r.clipped_points == grid.n_points())
    throw degenerate_error("log density is not finite anywhere on the grid");
  return r;
}

/// Grid in w covering six periods 2 log k either side of log theta.
inline GridSpec six_period_grid(const SymmetryParams& p, int n = kDefaultGridPoints) {
  const double c = std::log(p.theta());
  const double half = 6.0 * p.log_k();
  return GridSpec::make(c - half, c + half, n);
}

/// Max absolute residual of the least-squares quadratic fit to h(w) on the grid.
inline double quadratic_fit_residual(const DensityModel& d, const GridSpec& grid) {
  const double mid = 0.5 * (grid.w_min() + grid.w_max());
  const double half = 0.5 * (grid.w_max() - grid.w_min());
  std::vector<double> t(static_cast<std::size_t>(grid.n_points()));
  std::vector<double> v(t.size());
  std::array<std::array<double, 4>, 3> a{};  // augmented normal equations
  for (int j = 0; j < grid.n_points(); ++j) {
    const auto u = static_cast<std::size_t>(j);
    t[u] = (grid.w(j) - mid) / half;
    v[u] = d.log_pdf(std::exp(grid.w(j)));
    const std::array<double, 3> basis{1.0, t[u], t[u] * t[u]};
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) a[r][c] += basis[r] * basis[c];
      a[r][3] += basis[r] * v[u];
    }
  }
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (int r = 0; r < 3; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (int q = c; q < 4; ++q) a[r][q] -= f * a[c][q];
    }
  }
  const double c0 = a[0][3] / a[0][0];
  const double c1 = a[1][3] / a[1][1];
  const double c2 = a[2][3] / a[2][2];
  double sup = 0.0;
  for (std::size_t j = 0; j < t.size(); ++j)
    sup = std::max(sup, std::abs(v[j] - (c0 + c1 * t[j] + c2 * t[j] * t[j])));
  return sup;
}

// ---------------------------------------------------------------------------
// Power-transform probe.

inline constexpr double kProbeTol = 1e-8;

struct PowerProbe {
  double gamma = 1.0;
  double log_sym_residual = 0.0;  // at delta^gamma
  double r_sym_residual = 0.0;    // minimized over centers
  double r_sym_center = 0.0;
  bool used_dense_scan = false;
  bool doubly_symmetric = false;
};

struct Theorem2Probe {
  double input_log_sym = 0.0;
  double input_r_sym = 0.0;
  std::vector<PowerProbe> per_gamma;
};

/// For each gamma: log symmetry of Y^gamma at delta^gamma, and the best R
/// symmetry center searched within a factor k^{2|gamma|} e^2 of the mode of
/// the matching lognormal (delta^gamma k^{-gamma^2}).
inline Theorem2Probe theorem2_probe(const DensityModel& d, const SymmetryParams& p,
                                    const std::vector<double>& gammas, double tol = kProbeTol,
                                    int grid_points = kDefaultGridPoints) {
  Theorem2Probe out;
  const auto base_grid = default_ratio_grid(p.k(), grid_points);
  out.input_log_sym = symmetry_residual(d, Relation::LogSym, p.delta(), base_grid).residual;
  out.input_r_sym = symmetry_residual(d, Relation::RSym, p.theta(), base_grid).residual;
  if (!(out.input_log_sym <= tol) || !(out.input_r_sym <= tol)) {
    std::ostringstream os;
    os << "probe input is not doubly symmetric at the given parameters (residuals "
       << out.input_log_sym << ", " << out.input_r_sym << ")";
    throw domain_error(os.str());
  }
  for (double g : gammas) {
    if (!(g > 0.0)) throw domain_error("probe exponents must be positive");
    const auto dg = power_transform(d, g);
    const double kg = std::pow(p.k(), g);
    const auto grid = default_ratio_grid(std::max(kg, 1.0 + 1e-3), grid_points);
    PowerProbe pr;
    pr.gamma = g;
    const double delta_g = std::pow(p.delta(), g);
    pr.log_sym_residual = symmetry_residual(dg, Relation::LogSym, delta_g, grid).residual;
    const double guess = delta_g * std::pow(p.k(), -g * g);
    const double spread = std::exp(2.0) * std::pow(p.k(), 2.0 * g);
    const auto c = best_symmetry_center(dg, Relation::RSym, guess / spread, guess * spread, grid);
    pr.r_sym_residual = c.residual;
    pr.r_sym_center = c.center;
    pr.used_dense_scan = c.used_dense_scan;
    pr.doubly_symmetric = pr.log_sym_residual <= tol && pr.r_sym_residual <= tol;
    out.per_gamma.push_back(pr);
  }
  return out;
}

}  // namespace dsym
