#include <gtest/gtest.h>

#include "common.hpp"
#include "dalab/cones.hpp"
#include "dalab/conditions.hpp"
#include "dalab/measures.hpp"
#include "dalab/rng.hpp"

using namespace dalab;

namespace {

// Random points concentrated near the sites, where the map differs from A.
class NearSites : public ::testing::TestWithParam<std::uint64_t> {
 protected:
  TorusPoint draw(std::mt19937_64& gen) const {
    const auto& m = dalab::test::deformed_map();
    const int site = static_cast<int>(gen() % m.sites().size());
    return sample_point(m, gen, uniform01(gen) < 0.8, site);
  }
};

}  // namespace

TEST_P(NearSites, InverseAndDeterminant) {
  const auto& m = dalab::test::deformed_map();
  auto gen = stream(GetParam(), 0, 100);
  for (int i = 0; i < 50; ++i) {
    const TorusPoint x = draw(gen);
    EXPECT_LT(torus_distance(m.apply_inverse(m.apply(x)), x), 1e-12);
    const Mat j = m.jacobian(x);
    EXPECT_NEAR(std::abs(j.determinant()), 1.0, 1e-8);
    EXPECT_LT((j * m.jacobian_inverse(m.apply(x)) - Mat::Identity(4, 4)).norm(), 1e-8);
  }
}

TEST_P(NearSites, JacobianMatchesDifferences) {
  const auto& m = dalab::test::deformed_map();
  auto gen = stream(GetParam(), 0, 101);
  for (int i = 0; i < 20; ++i) {
    const TorusPoint x = draw(gen);
    const Mat j = m.jacobian(x);
    const double h = 1e-6;
    for (int c = 0; c < 4; ++c) {
      Vec e = Vec::Zero(4);
      e(c) = h;
      const Vec fd = (m.apply_lift(x.coords() + e) - m.apply_lift(x.coords() - e)) / (2 * h);
      EXPECT_LT((fd - j.col(c)).norm(), 1e-6);
    }
  }
}

TEST_P(NearSites, ConeInvarianceAndDomination) {
  const auto& m = dalab::test::deformed_map();
  const MapView fwd = MapView::forward(m);
  auto gen = stream(GetParam(), 0, 102);
  for (int i = 0; i < 10; ++i) {
    const TorusPoint x = draw(gen);
    const SplittingFrame f = estimate_invariant_splitting(fwd, x, 30);
    const SplittingFrame g = estimate_invariant_splitting(fwd, m.apply(x), 30);
    EXPECT_LT(domination_ratio(fwd, f), 1.0);
    const Cone cone = make_cone(f, ConeKind::center_unstable, 0.1);
    const Mat j = m.jacobian(x);
    const Cone image = make_cone(g, ConeKind::center_unstable, 0.1);
    for (int k = 0; k < 5; ++k) {
      const Mat s = random_cone_subspace(cone, f, gen, true);
      const Mat t = push_subspace(j, s);
      for (int c = 0; c < t.cols(); ++c) EXPECT_TRUE(cone_contains(image, g, t.col(c)));
    }
  }
}

TEST_P(NearSites, TotalVariationIsAMetric) {
  auto gen = stream(GetParam(), 0, 103);
  auto draw_hist = [&] {
    std::vector<double> p(16);
    double s = 0;
    for (double& v : p) s += (v = uniform01(gen));
    for (double& v : p) v /= s;
    return p;
  };
  for (int i = 0; i < 20; ++i) {
    const auto p = draw_hist(), q = draw_hist(), r = draw_hist();
    EXPECT_DOUBLE_EQ(tv_distance(p, q), tv_distance(q, p));
    EXPECT_LE(tv_distance(p, r), tv_distance(p, q) + tv_distance(q, r) + 1e-15);
    EXPECT_GE(tv_distance(p, q), 0.0);
    EXPECT_LE(tv_distance(p, q), 1.0);
  }
}

TEST_P(NearSites, PushforwardMass) {
  const auto& m = dalab::test::deformed_map();
  auto gen = stream(GetParam(), 0, 104);
  const CuDisk d = make_cu_disk(MapView::forward(m), draw(gen), 0.01);
  PushforwardOptions o;
  o.grid = 8;
  o.groups = 4;
  const EmpiricalMeasure mu = pushforward_average(m, d, 7, 40, GetParam(), ObservableSet::constant(4, 1.0), o);
  EXPECT_NEAR(mu.total_weight(), 1.0, 1e-12);
  for (std::size_t p = 0; p < mu.pairs.size(); ++p) {
    double s = 0;
    for (double v : mu.histogram(p)) s += v;
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, NearSites, ::testing::Values(1u, 2u, 3u, 4u, 5u));
