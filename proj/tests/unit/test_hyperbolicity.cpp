#include <gtest/gtest.h>

#include <algorithm>

#include "common.hpp"
#include "dalab/hyperbolicity.hpp"
#include "dalab/stats.hpp"

using namespace dalab;
using dalab::test::kL;

TEST(Lyapunov, LinearMapMatchesEigenvalues) {
  const auto& m = dalab::test::linear_map();
  const LyapunovResult r = lyapunov_spectrum(m, wrap({0.123, 0.456, 0.789, 0.321}), 20000);
  ASSERT_EQ(r.exponents.size(), 4u);
  const double expect[] = {2 * kL, kL, -kL, -2 * kL};
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(r.exponents[i], expect[i], 1e-3) << i;
  double sum = 0;
  for (double e : r.exponents) sum += e;
  EXPECT_NEAR(sum, r.log_det_average, 1e-8);
  EXPECT_NEAR(r.log_det_average, 0.0, 1e-10);
  ASSERT_FALSE(r.history.empty());
  EXPECT_EQ(r.history.back().k, 20000);
}

TEST(Lyapunov, DeformedSumMatchesDeterminant) {
  const auto& m = dalab::test::deformed_map();
  const LyapunovResult r = lyapunov_spectrum(m, wrap({0.123, 0.456, 0.789, 0.321}), 5000);
  double sum = 0;
  for (double e : r.exponents) sum += e;
  EXPECT_NEAR(sum, r.log_det_average, 1e-8);
  EXPECT_TRUE(std::is_sorted(r.exponents.rbegin(), r.exponents.rend()));
  EXPECT_LT(r.exponents[2], 0.0);
  EXPECT_GT(r.exponents[1], 0.0);
}

TEST(OrbitStats, LinearCenterNorms) {
  const auto& m = dalab::test::linear_map();
  const OrbitStats s = orbit_stats(m, wrap({0.3, 0.6, 0.1, 0.9}), 50);
  ASSERT_EQ(s.size(), 50u);
  for (std::size_t j = 0; j < s.size(); ++j) {
    EXPECT_NEAR(s.log_cs_norm[j], -kL, 1e-9);
    EXPECT_NEAR(s.log_cu_inv_norm[j], -kL, 1e-9);
    EXPECT_NEAR(s.log_det_cs[j], -3 * kL, 1e-9);
    EXPECT_NEAR(s.log_det_cu[j], 3 * kL, 1e-9);
  }
}

TEST(OrbitStats, FixedPointMatchesOrbit) {
  const auto& m = dalab::test::deformed_map();
  const TorusPoint q = m.distinguished_point();
  const OrbitStats a = fixed_point_stats(MapView::forward(m), q, 10);
  const OrbitStats b = orbit_stats(m, q, 10);
  for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(a.log_cs_norm[j], b.log_cs_norm[j], 1e-8);
}

TEST(Birkhoff, RunningAverage) {
  const std::vector<double> c = running_average({1.0, 3.0, 5.0, -1.0});
  ASSERT_EQ(c.size(), 4u);
  EXPECT_DOUBLE_EQ(c[0], 1.0);
  EXPECT_DOUBLE_EQ(c[1], 2.0);
  EXPECT_DOUBLE_EQ(c[2], 3.0);
  EXPECT_DOUBLE_EQ(c[3], 2.0);
  EXPECT_TRUE(running_average({}).empty());
}

TEST(Birkhoff, LinearAveragesAreConstant) {
  const auto& m = dalab::test::linear_map();
  for (double v : cs_birkhoff(m, wrap({0.2, 0.7, 0.4, 0.5}), 30)) EXPECT_NEAR(v, -kL, 1e-9);
  for (double v : cu_birkhoff(m, wrap({0.2, 0.7, 0.4, 0.5}), 30)) EXPECT_NEAR(v, -kL, 1e-9);
}

TEST(Volume, LinearRates) {
  const VolumeRates r = volume_decay_rates(dalab::test::linear_map(), wrap({0.2, 0.7, 0.4, 0.5}), 60);
  EXPECT_NEAR(r.rate_cs, -3 * kL, 1e-8);
  EXPECT_NEAR(r.rate_cu, -3 * kL, 1e-8);
  EXPECT_NEAR(r.rate_cu_forward, 3 * kL, 1e-8);
  EXPECT_NEAR(r.log_sigma1(), 3 * kL, 1e-8);
}

TEST(Occupation, CountsTimeOutsideTheSites) {
  const auto& m = dalab::test::deformed_map();
  // the site center is a saddle fixed point; roundoff pushes it out after about 19 steps
  EXPECT_DOUBLE_EQ(occupation_fraction(m, m.sites()[0].center, 10), 0.0);
  EXPECT_DOUBLE_EQ(occupation_fraction(m, m.distinguished_point(), 100), 1.0);
  // a generic orbit spends almost all its time outside (two balls of 4-volume ~3e-5)
  EXPECT_GT(occupation_fraction(m, wrap({0.123, 0.456, 0.789, 0.321}), 20000), 0.99);
}

TEST(Occupation, TailAtTheFixedPoint) {
  const auto& m = dalab::test::deformed_map();
  const CuDisk disk = make_cu_disk(MapView::forward(m), m.sites()[0].center, 1e-9);
  ItineraryOptions o;
  o.samples = 20;
  const ItineraryTail t = itinerary_tail(m, disk, 5, o);
  EXPECT_EQ(t.hits, 20);
  EXPECT_DOUBLE_EQ(t.fraction, 1.0);
  EXPECT_TRUE(std::isnan(t.log_envelope));
}

TEST(C0, SyntheticRecords) {
  std::vector<StartRecord> recs;
  for (int i = 0; i < 100; ++i) {
    StartRecord r;
    r.cs_terminal = -0.5 - 0.01 * i;  // max -0.5
    r.cu_terminal = -0.6;
    r.occupation = 0.98;
    recs.push_back(r);
  }
  const C0Estimate e = estimate_c0(recs, 0.9, 0.1, 1.0);
  EXPECT_NEAR(e.c0, 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(e.fraction_below, 1.0);
  EXPECT_DOUBLE_EQ(e.eps, 0.98);
  EXPECT_NEAR(e.bound, -(0.98 * std::log(0.9) + 0.02 * std::log(1.1)), 1e-15);
  EXPECT_THROW(estimate_c0({}, 0.9, 0.1), Error);
}

TEST(C0, EnsembleIsThreadInvariant) {
  const auto& m = dalab::test::deformed_map();
  const auto a = birkhoff_ensemble(m, 8, 200, 11, 1);
  const auto b = birkhoff_ensemble(m, 8, 200, 11, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].cs_terminal, b[i].cs_terminal);
    EXPECT_EQ(a[i].occupation, b[i].occupation);
  }
  const C0Estimate e = estimate_c0(a, 0.9, 0.1, 0.99);
  EXPECT_GT(e.c0, 0.0);
}

TEST(Stats, FitLineExact) {
  const LinearFit f = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
  EXPECT_NEAR(f.slope, 2.0, 1e-14);
  EXPECT_NEAR(f.intercept, 1.0, 1e-14);
  EXPECT_NEAR(f.slope_se, 0.0, 1e-12);
  EXPECT_DOUBLE_EQ(quantile({3, 1, 2}, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(quantile({0, 1}, 0.25), 0.25);
}
