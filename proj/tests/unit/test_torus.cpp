#include <gtest/gtest.h>

#include <algorithm>
#include <complex>

#include "common.hpp"
#include "dalab/rng.hpp"
#include "dalab/torus.hpp"

using namespace dalab;
using dalab::test::kMu;

TEST(Torus, WrapLandsInUnitCube) {
  const TorusPoint p = wrap({-0.25, 1.5, 3.0, -1e-20});
  EXPECT_DOUBLE_EQ(p[0], 0.75);
  EXPECT_DOUBLE_EQ(p[1], 0.5);
  EXPECT_DOUBLE_EQ(p[2], 0.0);
  for (int i = 0; i < 4; ++i) {
    EXPECT_GE(p[i], 0.0);
    EXPECT_LT(p[i], 1.0);
  }
}

TEST(Torus, CenteredDifferenceIsShortest) {
  Vec x(2), y(2);
  x << 0.95, 0.1;
  y << 0.05, 0.9;
  const Vec d = centered_difference(x, y);
  EXPECT_NEAR(d(0), -0.1, 1e-15);
  EXPECT_NEAR(d(1), 0.2, 1e-15);
  EXPECT_NEAR(torus_distance(wrap(x), wrap(y)), std::sqrt(0.05), 1e-15);
}

TEST(Torus, NearestLift) {
  Vec v(2), near(2);
  v << 0.1, 0.9;
  near << 3.05, -1.95;
  const Vec l = nearest_lift(v, near);
  EXPECT_NEAR(l(0), 3.1, 1e-14);
  EXPECT_NEAR(l(1), -2.1, 1e-14);
}

// Eigenvalues of block-diag(C^2, C), C = [[2,1],[1,1]]: mu^2, mu, 1/mu, 1/mu^2.
TEST(LinearMap, DefaultMatrixSpectrum) {
  const LinearToralMap a(default_matrix(4));
  std::vector<double> ev;
  for (const auto& z : a.eigenvalues()) {
    EXPECT_NEAR(z.imag(), 0.0, 1e-12);
    ev.push_back(std::abs(z));
  }
  std::sort(ev.begin(), ev.end());
  EXPECT_NEAR(ev[0], 1.0 / (kMu * kMu), 1e-12);
  EXPECT_NEAR(ev[1], 1.0 / kMu, 1e-12);
  EXPECT_NEAR(ev[2], kMu, 1e-12);
  EXPECT_NEAR(ev[3], kMu * kMu, 1e-12);
  EXPECT_EQ(a.stable_dim(), 2);
  EXPECT_EQ(a.unstable_dim(), 2);
}

TEST(LinearMap, InvariantBundles) {
  const LinearToralMap a(default_matrix(4));
  const Mat& es = a.stable_basis();
  const Mat& eu = a.unstable_basis();
  // A E^s lies in E^s: the residual of the projection vanishes
  const Mat ps = es * es.transpose();
  const Mat pu = eu * eu.transpose();
  EXPECT_LT((a.matrix() * es - ps * a.matrix() * es).norm(), 1e-12);
  EXPECT_LT((a.matrix() * eu - pu * a.matrix() * eu).norm(), 1e-12);
  EXPECT_LT((a.matrix() * a.inverse() - Mat::Identity(4, 4)).norm(), 1e-12);
}

TEST(LinearMap, FixedPointsIncludeOrigin) {
  const LinearToralMap a(default_matrix(4));
  const auto fp = a.fixed_points();
  ASSERT_FALSE(fp.empty());
  bool origin = false;
  for (const auto& p : fp) {
    EXPECT_LT(torus_distance(a.apply(p), p), 1e-12);
    if (p.coords().norm() < 1e-12) origin = true;
  }
  EXPECT_TRUE(origin);
}

TEST(DeformedMap, StrengthZeroIsLinear) {
  const auto& m = dalab::test::linear_map();
  auto gen = stream(3, 0, 1);
  for (int i = 0; i < 200; ++i) {
    Vec v(4);
    for (int k = 0; k < 4; ++k) v(k) = uniform01(gen);
    const TorusPoint x = wrap(v);
    EXPECT_LT(torus_distance(m.apply(x), m.base().apply(x)), 1e-13);
    EXPECT_LT((m.jacobian(x) - m.base().matrix()).norm(), 1e-12);
  }
}

TEST(DeformedMap, InverseRoundTrip) {
  const auto& m = dalab::test::deformed_map();
  for (std::size_t s = 0; s < m.sites().size(); ++s) {
    auto gen = stream(4, s, 2);
    for (int i = 0; i < 100; ++i) {
      Vec v = m.sites()[s].center.coords();
      for (int k = 0; k < 4; ++k) v(k) += 0.06 * (2.0 * uniform01(gen) - 1.0);
      const TorusPoint x = wrap(v);
      EXPECT_LT(torus_distance(m.apply_inverse(m.apply(x)), x), 1e-12);
      EXPECT_LT(torus_distance(m.apply(m.apply_inverse(x)), x), 1e-12);
    }
  }
}

TEST(DeformedMap, JacobianMatchesFiniteDifferences) {
  const auto& m = dalab::test::deformed_map();
  const TorusPoint x = dalab::test::annulus_point(m);
  const Mat j = m.jacobian(x);
  const double h = 1e-6;
  for (int c = 0; c < 4; ++c) {
    Vec e = Vec::Zero(4);
    e(c) = h;
    const Vec fd = (m.apply_lift(x.coords() + e) - m.apply_lift(x.coords() - e)) / (2 * h);
    EXPECT_LT((fd - j.col(c)).norm(), 1e-7) << "column " << c;
  }
}

TEST(DeformedMap, ConservativeDeterminant) {
  const auto& m = dalab::test::deformed_map();
  EXPECT_NEAR(std::abs(m.jacobian(dalab::test::annulus_point(m)).determinant()), 1.0, 1e-8);
  EXPECT_NEAR(std::abs(m.jacobian(m.sites()[0].center).determinant()), 1.0, 1e-8);
}

TEST(DeformedMap, DistinguishedPointIsFixed) {
  const auto& m = dalab::test::deformed_map();
  const TorusPoint q = m.distinguished_point();
  EXPECT_LT(torus_distance(m.apply(q), q), 1e-12);
}

TEST(DeformedMap, ImageSeparationMatchesDirectDifference) {
  const auto& m = dalab::test::deformed_map();
  const TorusPoint x = dalab::test::annulus_point(m);
  for (double s : {1e-3, 1e-7}) {
    Vec e(4);
    e << 0.3, -0.2, 0.5, 0.1;
    e *= s;
    const Vec direct = m.apply_lift(x.coords() + e) - m.apply_lift(x.coords());
    EXPECT_LT((m.image_separation(x, e) - direct).norm(), 1e-9 * s + 1e-15);
  }
}

TEST(DeformedMap, LinearInsideSiteCore) {
  // the bump equals 1 on the inner half ball, so the flow is linear there
  const auto& m = dalab::test::deformed_map();
  const auto& s = m.sites()[0];
  Vec a = s.center.coords(), b = s.center.coords();
  a(0) += 0.1 * s.radius;
  b(1) -= 0.2 * s.radius;
  EXPECT_LT((m.jacobian(wrap(a)) - m.jacobian(wrap(b))).norm(), 1e-9);
}

TEST(MapSpec, SerializeRoundTrip) {
  const auto& m = dalab::test::deformed_map();
  const std::string text = serialize_map(m);
  const DeformedMap back = parse_map(text);
  EXPECT_EQ(serialize_map(back), text);
  EXPECT_EQ(map_hash(back), map_hash(m));
  const TorusPoint x = dalab::test::annulus_point(m);
  EXPECT_EQ(back.apply(x).coords(), m.apply(x).coords());
}

TEST(MapSpec, HashSeparatesStrengths) {
  EXPECT_NE(map_hash(dalab::test::linear_map()), map_hash(dalab::test::deformed_map()));
}

TEST(MapSpec, RejectsWrongStrengthCount) {
  EXPECT_THROW(build_example(4, 0.05, 0.1, {0.1, 0.2, 0.3}), std::exception);
}
