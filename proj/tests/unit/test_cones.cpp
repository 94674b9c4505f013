#include <gtest/gtest.h>

#include "common.hpp"
#include "dalab/cones.hpp"
#include "dalab/rng.hpp"

using namespace dalab;
using dalab::test::kMu;

TEST(SubspaceAngle, LinesInThePlane) {
  Mat e(2, 1), f(2, 1);
  e << 1, 0;
  const double t = 0.3;
  f << std::cos(t), std::sin(t);
  EXPECT_NEAR(subspace_angle(e, f), std::tan(t), 1e-14);
  EXPECT_NEAR(subspace_angle(f, e), std::tan(t), 1e-14);
  EXPECT_NEAR(subspace_angle(e, e), 0.0, 1e-15);
}

TEST(SubspaceAngle, SymmetricForPlanes) {
  auto gen = stream(1, 0, 3);
  Mat a(4, 2), b(4, 2);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 2; ++j) {
      a(i, j) = normal01(gen);
      b(i, j) = a(i, j) + 0.1 * normal01(gen);
    }
  orthonormalize(a);
  orthonormalize(b);
  EXPECT_NEAR(subspace_angle(a, b), subspace_angle(b, a), 1e-12);
}

TEST(Splitting, LinearMapRecoversEigenspaces) {
  const auto& m = dalab::test::linear_map();
  const SplittingFrame f = estimate_invariant_splitting(m, wrap({0.3, 0.1, 0.7, 0.2}), 30);
  EXPECT_LT(subspace_angle(f.cs, m.base().stable_basis()), 1e-10);
  EXPECT_LT(subspace_angle(f.cu, m.base().unstable_basis()), 1e-10);
}

TEST(Splitting, InvariantUnderTheDerivative) {
  const auto& m = dalab::test::deformed_map();
  const MapView fwd = MapView::forward(m);
  const TorusPoint x = dalab::test::annulus_point(m);
  const SplittingFrame f = estimate_invariant_splitting(fwd, x, 40);
  const SplittingFrame g = estimate_invariant_splitting(fwd, m.apply(x), 40);
  const Mat j = m.jacobian(x);
  EXPECT_LT(subspace_angle(push_subspace(j, f.cu), g.cu), 1e-8);
  EXPECT_LT(subspace_angle(push_subspace(j, f.cs), g.cs), 1e-8);
}

// ||Df|E^cs|| ||(Df|E^cu)^-1|| = mu^-1 * mu^-1 for the linear map
TEST(Domination, LinearRatio) {
  const auto& m = dalab::test::linear_map();
  const SplittingFrame f = estimate_invariant_splitting(m, wrap({0.3, 0.1, 0.7, 0.2}), 30);
  EXPECT_NEAR(domination_ratio_of(m.base().matrix(), f), 1.0 / (kMu * kMu), 1e-10);
}

TEST(Cones, RandomSubspacesStayInside) {
  const auto& m = dalab::test::deformed_map();
  const SplittingFrame f = estimate_invariant_splitting(m, dalab::test::annulus_point(m), 30);
  const Cone cone = make_cone(f, ConeKind::center_unstable, 0.1);
  auto gen = stream(2, 0, 4);
  for (int i = 0; i < 50; ++i) {
    const Mat s = random_cone_subspace(cone, f, gen);
    for (int c = 0; c < s.cols(); ++c) EXPECT_TRUE(cone_contains(cone, f, s.col(c)));
  }
  // the center-stable bundle is outside the cu cone
  EXPECT_FALSE(cone_contains(cone, f, f.cs.col(0)));
}

TEST(Cones, LinearApertureContraction) {
  // a cu-cone of aperture a is mapped into aperture a * mu^-2 at most (domination ratio)
  const auto& m = dalab::test::linear_map();
  const MapView fwd = MapView::forward(m);
  const TorusPoint x = wrap({0.3, 0.1, 0.7, 0.2});
  const SplittingFrame f = estimate_invariant_splitting(fwd, x, 30);
  const SplittingFrame g = estimate_invariant_splitting(fwd, m.apply(x), 30);
  const Cone cone = make_cone(f, ConeKind::center_unstable, 0.1);
  const ApertureResult r = image_aperture(fwd, x, cone, f, g);
  EXPECT_LE(r.ratio, 1.0 / (kMu * kMu) + 1e-9);
  EXPECT_GT(r.ratio, 0.0);
}

TEST(Disks, CuDiskIsCertified) {
  const auto& m = dalab::test::deformed_map();
  const MapView fwd = MapView::forward(m);
  const CuDisk d = make_cu_disk(fwd, dalab::test::annulus_point(m), 0.02);
  EXPECT_EQ(d.basis.cols(), 2);
  EXPECT_TRUE(disk_in_cu_cone(fwd, d, 0.1));
  Vec xi(2);
  xi << 0.5, -0.5;
  EXPECT_LT(torus_distance(disk_point(d, xi), wrap(Vec(d.center.coords() + d.basis * xi))), 1e-15);
}

TEST(Disks, UniformBallInsideUnitBall) {
  auto gen = stream(5, 0, 6);
  double mean_r2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const Vec v = uniform_ball(2, gen);
    ASSERT_LE(v.norm(), 1.0);
    mean_r2 += v.squaredNorm() / n;
  }
  // E|v|^2 = d/(d+2) = 1/2 for the uniform disk
  EXPECT_NEAR(mean_r2, 0.5, 0.01);
}
