#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "dsym/dsym.hpp"
#include "oracles.hpp"

using namespace dsym;

namespace {

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

double mean_of(const std::vector<double>& v, double (*f)(double)) {
  double s = 0.0;
  for (double x : v) s += f(x);
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST(Rng, DeterministicAndOpenInterval) {
  Rng a(5), b(5);
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(CdfTable, LognormalMedianAndTable) {
  const auto cdf = build_cdf(make_lognormal(0.0, 1.0));
  EXPECT_NEAR(cdf(1.0), 0.5, 1e-9);
  for (double y : {0.05, 0.4, 2.5, 9.0})
    EXPECT_NEAR(cdf(y), static_cast<double>(oracle::lognormal_cdf(y, 0, 1)), 1e-9) << y;
  EXPECT_LT(cdf.max_interpolation_error(), 1e-8);
  EXPECT_NEAR(cdf.raw_total(), 1.0, 1e-10);
}

TEST(CdfTable, PolyMedianAndExactCdf) {
  const auto sp = SymmetryParams::make(1.0, 2.0);
  const auto cdf = build_cdf(make_poly_ds(sp).model());
  EXPECT_NEAR(cdf(2.0), 0.5, 1e-9);
  for (double y : {0.1, 0.7, 1.0, 3.3, 4.0, 11.0})
    EXPECT_NEAR(cdf(y), static_cast<double>(oracle::poly_cdf(y, 1, 2)), 1e-9) << y;
}

TEST(CdfTable, MonotoneEverywhere) {
  const auto cdf = build_cdf(make_stieltjes(stieltjes_params(0.0, 1.0, 1.0)));
  double prev = 0.0;
  for (double w = -8.0; w <= 8.0; w += 1e-3) {
    const double f = cdf(std::exp(w));
    ASSERT_GE(f, prev) << w;
    prev = f;
  }
  EXPECT_EQ(cdf(0.0), 0.0);
}

TEST(CdfTable, QuantileInvertsCdf) {
  const auto cdf = build_cdf(make_askey_berg(0.5, 2.0).model());
  for (double u : {1e-6, 0.01, 0.3, 0.5, 0.77, 0.999999}) EXPECT_NEAR(cdf(cdf.quantile(u)), u, 1e-12) << u;
}

TEST(Sample, DeterministicPerSeed) {
  const auto d = make_lognormal(0.0, 1.0);
  const auto a = sample(d, 1000, 3);
  const auto b = sample(d, 1000, 3);
  const auto c = sample(d, 1000, 4);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, c.values);
  EXPECT_EQ(a.seed, 3u);
}

TEST(Sample, LognormalMedianAndKs) {
  const auto d = make_lognormal(0.0, 1.0);
  const auto b = sample(d, 100000, 42);
  const double m = median(b.values);
  EXPECT_GE(m, 0.99);
  EXPECT_LE(m, 1.01);
  EXPECT_LT(ks_statistic(b, [](double y) { return static_cast<double>(oracle::lognormal_cdf(y, 0, 1)); }),
            ks_critical_1pct(b.values.size()));
  const double lm = mean_of(b.values, [](double y) { return std::log(y); });
  EXPECT_LT(std::abs(lm), 3.0 / std::sqrt(1e5));
}

TEST(PolySampler, PieceMassesAndCdf) {
  const auto sp = SymmetryParams::make(1.0, 2.0);
  const PolyDsSampler s(sp);
  EXPECT_NEAR(s.piece_mass(0), 2.0 * std::log(2.0) / 2.355003666048625, 1e-12);
  EXPECT_NEAR(s.piece_mass(0), 0.5886591096, 1e-9);
  EXPECT_NEAR(s.piece_mass(1), s.piece_mass(-1), 1e-15);
  double total = 0.0;
  for (const auto& p : s.pieces()) total += p.mass;
  EXPECT_NEAR(total, 1.0, 1e-15);
  for (double y : {0.05, 0.5, 1.0, 2.0, 3.9, 4.0, 20.0})
    EXPECT_NEAR(s.cdf(y), static_cast<double>(oracle::poly_cdf(y, 1, 2)), 1e-13) << y;
}

TEST(PolySampler, ExactSampleStatistics) {
  const auto sp = SymmetryParams::make(1.0, 2.0);
  const PolyDsSampler s(sp);
  const auto b = poly_ds_sample_exact(sp, 100000, 7);
  EXPECT_LT(ks_statistic(b, [&](double y) { return s.cdf(y); }), 0.0061);
  EXPECT_NEAR(median(b.values) / sp.delta(), 1.0, 0.01);
  const double m2 = mean_of(b.values, [](double y) { return y * y; });
  EXPECT_GE(m2, 15.5);
  EXPECT_LE(m2, 16.5);
}

TEST(PolySampler, SupportStaysInsideTruncation) {
  const auto sp = SymmetryParams::make(1.0, 2.0);
  const PolyDsSampler s(sp);
  const auto b = s.sample(1000000, 19);
  const auto [lo, hi] = std::minmax_element(b.values.begin(), b.values.end());
  EXPECT_GT(*lo, piece_lower(s.i_max(), sp));
  EXPECT_LE(*hi, piece_upper(-s.i_max(), sp));
}

TEST(PolySampler, AgreesWithNumericSampler) {
  const auto sp = SymmetryParams::make(1.0, 2.0);
  const auto a = poly_ds_sample_exact(sp, 100000, 101);
  const auto b = sample(make_poly_ds(sp).model(), 100000, 202);
  EXPECT_LT(ks_two_sample(a, b), ks_critical_1pct(100000, 100000));
}

TEST(PolySampler, ModeBinTouchesTheta) {
  const auto sp = SymmetryParams::make(1.0, 1.5);
  const auto b = poly_ds_sample_exact(sp, 200000, 5);
  const double width = 0.05;
  std::vector<int> bins(100, 0);
  for (double y : b.values)
    if (y < 5.0) ++bins[static_cast<std::size_t>(y / width)];
  const auto top = static_cast<double>(std::max_element(bins.begin(), bins.end()) - bins.begin());
  EXPECT_LE(top * width, sp.theta() + 1e-12);
  EXPECT_GE((top + 1.0) * width, sp.theta() - 1e-12);
}

TEST(Ks, DegenerateBatch) {
  SampleBatch b{std::vector<double>(100, 1.0), 0, "const"};
  EXPECT_GE(ks_statistic(b, [](double y) { return static_cast<double>(oracle::lognormal_cdf(y, 0, 1)); }), 0.5);
  SampleBatch empty{{}, 0, "empty"};
  EXPECT_THROW(ks_statistic(empty, [](double) { return 0.0; }), domain_error);
}
