#include <gtest/gtest.h>

#include <numbers>
#include <set>

#include "common.hpp"
#include "dalab/measures.hpp"
#include "dalab/rng.hpp"
#include "dalab/scenarios.hpp"

using namespace dalab;

namespace {

// coordinates an observable depends on, by perturbing each one
std::set<int> support_of(const Observable& o, int dim) {
  Vec x(dim);
  for (int i = 0; i < dim; ++i) x(i) = 0.1 + 0.17 * i;
  std::set<int> s;
  for (int i = 0; i < dim; ++i) {
    Vec y = x;
    y(i) += 0.123;
    if (std::abs(o.eval(y) - o.eval(x)) > 1e-12) s.insert(i);
  }
  return s;
}

}  // namespace

TEST(Observables, FourierCountAndOrder) {
  const ObservableSet all = ObservableSet::fourier(4);
  EXPECT_EQ(all.size(), 80u);  // (3^4 - 1)/2 frequencies, cos and sin
  // |m|_1 = 1 comes first: 4 frequencies, 8 functions of one coordinate
  for (std::size_t i = 0; i < 8; ++i) EXPECT_EQ(support_of(all[i], 4).size(), 1u) << all[i].name;
  EXPECT_EQ(support_of(all[8], 4).size(), 2u);
  for (std::size_t i = 0; i < all.size(); ++i) {
    EXPECT_EQ(all[i].lebesgue_integral, 0.0);
    EXPECT_EQ(all[i].sup_norm, 1.0);
  }
  EXPECT_EQ(ObservableSet::fourier(4, 7).size(), 7u);
  EXPECT_EQ(ObservableSet::standard(dalab::test::deformed_map(), 8).size(), 8u);
}

TEST(Observables, FourierIsPeriodic) {
  const ObservableSet f = ObservableSet::fourier(4, 20);
  Vec x(4), y(4);
  x << 0.31, 0.72, 0.05, 0.44;
  y = x + Vec::Constant(4, 3.0);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(f[i].eval(x), f[i].eval(y), 1e-12);
}

// int_{|x|<r} (1 - |x|^2/r^2)^3 dx in R^4 = 2 pi^2 r^4 int_0^1 t^3 (1-t^2)^3 dt = pi^2 r^4 / 20
TEST(Observables, BumpIntegral) {
  const auto& m = dalab::test::deformed_map();
  const Observable b = ObservableSet::site_bump(m, 0);
  const double r = m.sites()[0].radius;
  EXPECT_NEAR(b.lebesgue_integral, std::numbers::pi * std::numbers::pi * std::pow(r, 4) / 20.0, 1e-18);
  EXPECT_DOUBLE_EQ(b.eval(m.sites()[0].center.coords()), 1.0);
  // Monte Carlo over the bounding box
  auto gen = stream(9, 0, 0);
  const int n = 200000;
  double acc = 0;
  for (int i = 0; i < n; ++i) {
    Vec x = m.sites()[0].center.coords();
    for (int k = 0; k < 4; ++k) x(k) += r * (2 * uniform01(gen) - 1);
    acc += b.eval(x);
  }
  const double mc = acc / n * std::pow(2 * r, 4);
  EXPECT_NEAR(mc, b.lebesgue_integral, 0.03 * b.lebesgue_integral);
}

TEST(TotalVariation, Extremes) {
  const std::vector<double> p{0.5, 0.5, 0, 0}, q{0, 0, 0.5, 0.5}, r{0.25, 0.25, 0.25, 0.25};
  EXPECT_DOUBLE_EQ(tv_distance(p, p), 0.0);
  EXPECT_DOUBLE_EQ(tv_distance(p, q), 1.0);
  EXPECT_DOUBLE_EQ(tv_distance(p, r), 0.5);
  EXPECT_DOUBLE_EQ(tv_distance(r, p), 0.5);
}

TEST(Pushforward, MassAndConstantObservable) {
  const auto& m = dalab::test::deformed_map();
  ObservableSet obs = ObservableSet::constant(4, 2.5);
  PushforwardOptions o;
  o.grid = 16;
  o.groups = 5;
  const CuDisk d = make_cu_disk(MapView::forward(m), dalab::test::annulus_point(m), 0.02);
  const EmpiricalMeasure mu = pushforward_average(m, d, 20, 100, 3, obs, o);
  EXPECT_EQ(mu.total_points(), 2000u);
  EXPECT_NEAR(mu.total_weight(), 1.0, 1e-12);
  EXPECT_NEAR(mu.integrals()[0], 2.5, 1e-12);
  double mass = 0;
  for (double v : mu.histogram(0)) mass += v;
  EXPECT_NEAR(mass, 1.0, 1e-12);
  EXPECT_EQ(mu.pairs.size(), 6u);
  EXPECT_EQ(mu.cloud.size(), 100u);
  EXPECT_EQ(measure_distance(mu, mu).total(), 0.0);
}

TEST(Pushforward, BootstrapWeightsSumToGroups) {
  const auto& m = dalab::test::deformed_map();
  PushforwardOptions o;
  o.grid = 8;
  o.groups = 10;
  const EmpiricalMeasure mu = pushforward_volume(m, 5, 100, 1, ObservableSet::fourier(4, 4), o);
  auto gen = stream(1, 0, 0);
  const std::vector<int> w = mu.bootstrap_weights(gen);
  ASSERT_EQ(w.size(), 10u);
  int total = 0;
  for (int v : w) total += v;
  EXPECT_EQ(total, 10);
  const NoiseEstimate ne = bootstrap_noise(mu, 10, 2);
  EXPECT_EQ(ne.replicates.size(), 10u);
  EXPECT_GE(ne.stddev, 0.0);
}

TEST(Pushforward, VolumeIsNearUniform) {
  const auto& m = dalab::test::deformed_map();
  PushforwardOptions o;
  o.grid = 4;
  o.groups = 5;
  const ObservableSet obs = ObservableSet::fourier(4, 8);
  const EmpiricalMeasure mu = pushforward_volume(m, 10, 4000, 5, obs, o);
  const MeasureDistance d = distance_to_uniform(mu, obs);
  EXPECT_LT(d.observable_max, 0.05);
  EXPECT_LT(d.tv_max, 0.05);
}

TEST(Srb, SameDiskHasZeroDistance) {
  const auto& m = dalab::test::dissipative_map();
  const auto disks = distant_disks(m, 4);
  EXPECT_GE(torus_distance(disks.first.center, disks.second.center), 0.3);
  UniquenessOptions o;
  o.pushforward.grid = 8;
  o.pushforward.groups = 5;
  o.bootstrap = 5;
  const UniquenessResult r = srb_uniqueness_distance(m, disks.first, disks.first, 20, 200, 7,
                                                     ObservableSet::fourier(4, 4), o);
  EXPECT_EQ(r.distance.total(), 0.0);
  EXPECT_TRUE(r.pass());
  EXPECT_GT(r.baseline.total(), 0.0);
}

TEST(Ergodicity, DispersionIsThreadInvariant) {
  const auto& m = dalab::test::deformed_map();
  const ObservableSet obs = ObservableSet::standard(m, 4);
  const DispersionResult a = ergodicity_dispersion(m, 6, 2000, obs, 3, 1);
  const DispersionResult b = ergodicity_dispersion(m, 6, 2000, obs, 3, 4);
  EXPECT_NEAR(a.dispersion, b.dispersion, 1e-12);
  EXPECT_NEAR(a.envelope, 5.0 / std::sqrt(2000.0), 1e-12);
  EXPECT_TRUE(a.within_envelope());
  ASSERT_EQ(a.averages.size(), 6u);
}

TEST(Ergodicity, BirkhoffOfConstant) {
  const auto avg = birkhoff_average(dalab::test::deformed_map(), wrap({0.1, 0.2, 0.3, 0.4}), 100,
                                    ObservableSet::constant(4, -1.5));
  ASSERT_EQ(avg.size(), 1u);
  EXPECT_NEAR(avg[0], -1.5, 1e-14);
}

TEST(Srb, LinearCloudIsAllNegative) {
  const auto& m = dalab::test::linear_map();
  std::vector<TorusPoint> pts;
  auto gen = stream(2, 0, 0);
  for (int i = 0; i < 20; ++i) pts.push_back(wrap({uniform01(gen), uniform01(gen), uniform01(gen), uniform01(gen)}));
  EXPECT_DOUBLE_EQ(negative_cs_fraction(m, pts, 50), 1.0);
}

TEST(Scan, UnprobedRowsFail) {
  ConditionOptions c;
  c.samples = 200;
  c.boundary_samples = 100;
  ScanProbe p;
  p.starts = 4;
  p.n = 1000;
  p.observables = 4;
  const auto rows = stability_scan(dalab::test::linear_map(), {0.0, 1.0}, p, c);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_TRUE(rows[0].pass());
  EXPECT_FALSE(rows[1].conditions_pass);
  EXPECT_FALSE(rows[1].probed);
  EXPECT_FALSE(rows[1].pass());
}
