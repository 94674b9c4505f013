#include <gtest/gtest.h>

#include <sstream>

#include "common.hpp"
#include "dalab/manifolds.hpp"

using namespace dalab;
using dalab::test::kMu;

namespace {

Mat diag2(double a, double b) {
  Mat m = Mat::Zero(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

Mat join_cols(const Mat& a, const Mat& b) {
  Mat t(a.rows(), a.cols() + b.cols());
  t << a, b;
  return t;
}

// Largest deviation of points of `p` (pushed by f) from the graph of `q`.
double invariance_defect(const DeformedMap& m, const GraphPatch& p, const GraphPatch& q, double frac) {
  const Mat t = join_cols(q.domain_basis(), q.value_basis());
  const int d = p.graph.domain_dim;
  double worst = 0;
  for (int s = -2; s <= 2; ++s)
    for (int c = 0; c < d; ++c) {
      Vec xi = Vec::Zero(d);
      xi(c) = frac * p.radius() * s / 2.0;
      const Vec e = m.image_separation(p.base_point, p.offset(xi));
      const Vec disp = e + m.apply_lift(p.base_point.coords()) - q.base_point.coords();
      const Vec z = t.partialPivLu().solve(centered_difference(disp, Vec::Zero(disp.size())));
      const Vec dom = z.head(d);
      const Vec val = z.tail(z.size() - d);
      worst = std::max(worst, (val - q.graph.value_at(dom)).norm());
    }
  return worst;
}

}  // namespace

// For diag(2, 1/2) a graph eta = 0.3 xi goes to eta = 0.3/4 xi.
TEST(GraphTransform, LinearSaddle) {
  const GraphChart chart = GraphChart::linear(diag2(2.0, 0.5), 1);
  Mat k(1, 1);
  k(0, 0) = 0.3;
  const GraphData h = GraphData::linear(k, 0.1, 33);
  GraphOptions o;
  o.refine = false;
  const ChartTransform t = transform_graph(chart, h, o);
  EXPECT_NEAR(t.gamma, 2.0, 1e-12);
  EXPECT_NEAR(t.theta, 0.25, 1e-12);
  Vec xi(1);
  xi << 0.05;
  EXPECT_NEAR(t.graph.value_at(xi)(0), 0.3 / 4 * 0.05, 1e-14);
  EXPECT_NEAR(t.graph.slope_bound(), 0.075, 1e-12);
}

TEST(GraphTransform, FlatInputStaysFlat) {
  const GraphChart chart = GraphChart::linear(diag2(3.0, 0.2), 1);
  const GraphData h = GraphData::zero(1, 1, 0.1, 17);
  const ChartTransform t = transform_graph(chart, h, {});
  EXPECT_EQ(t.theta, 0.0);
  EXPECT_LT(t.graph.slope_bound(), 1e-15);
}

TEST(GraphData, InterpolatesLinearGraphsExactly) {
  Mat k(2, 2);
  k << 0.1, -0.2, 0.05, 0.3;
  const GraphData g = GraphData::linear(k, 0.02, 9);
  Vec xi(2);
  xi << 0.0137, -0.0051;
  EXPECT_LT((g.value_at(xi) - k * xi).norm(), 1e-15);
  EXPECT_LT((g.slope_at(xi) - k).norm(), 1e-14);
  EXPECT_NEAR(g.fd_slope_bound(), k.norm() > 0 ? g.slope_bound() : 0, 1e-12);
}

TEST(StableManifold, LinearPatchIsFlat) {
  const auto& m = dalab::test::linear_map();
  const GraphPatch p = local_stable_manifold(m, wrap({0.3, 0.6, 0.1, 0.9}), 0.01, 20);
  EXPECT_LE(p.k_bound, 1e-10);
  EXPECT_LT(subspace_angle(p.domain_basis(), m.base().stable_basis()), 1e-10);
  EXPECT_EQ(p.flavor, GraphFlavor::cs_graph);
}

TEST(StableManifold, LinearContractionRate) {
  const auto& m = dalab::test::linear_map();
  const GraphPatch p = local_stable_manifold(m, wrap({0.3, 0.6, 0.1, 0.9}), 0.01, 20);
  ContractionOptions o;
  o.samples = 20;
  const ContractionResult r = contraction_verify(m, p, 30, o);
  EXPECT_NEAR(r.rate, 1.0 / kMu, 1e-9);
  EXPECT_LT(r.ratio, 1.0);
  EXPECT_EQ(r.max_ratio.size(), 31u);
}

TEST(StableManifold, DeformedPatchIsInvariant) {
  const auto& m = dalab::test::deformed_map();
  const TorusPoint x = dalab::test::annulus_point(m);
  const GraphPatch p = local_stable_manifold(m, x, 0.01, 30);
  const GraphPatch q = local_stable_manifold(m, m.apply(x), 0.01, 30);
  EXPECT_GT(p.k_bound, 1e-6);  // the deformation bends the leaf
  EXPECT_LT(invariance_defect(m, p, q, 0.5), 1e-6);
}

TEST(StableManifold, DeformedContractionBelowOne) {
  const auto& m = dalab::test::deformed_map();
  const TorusPoint x = dalab::test::annulus_point(m);
  const GraphPatch p = local_stable_manifold(m, x, 0.01, 20);
  ContractionOptions o;
  o.samples = 10;
  const ContractionResult r = contraction_verify(m, p, 30, o);
  EXPECT_LT(r.rate, lambda_bar(m, x, 30));
  EXPECT_LT(r.rate, 1.0);
}

TEST(Patch, RebaseRoundTrip) {
  const auto& m = dalab::test::deformed_map();
  const TorusPoint x = dalab::test::annulus_point(m);
  const GraphPatch p = local_stable_manifold(m, x, 0.01, 20);
  SplittingFrame other = p.frame;
  other.cs = p.frame.cs + 0.05 * p.frame.cu;
  orthonormalize(other.cs);
  GraphOptions o;
  o.refine = false;
  const GraphPatch there = rebase_patch(p, other, o);
  const GraphPatch back = rebase_patch(there, p.frame, o);
  Vec xi = Vec::Zero(2);
  xi(0) = 0.3 * p.radius();
  // two rounds of multilinear interpolation on the unrefined grid
  EXPECT_LT((back.offset(xi) - p.offset(xi)).norm(), 1e-6);
}

TEST(Patch, BinaryRoundTrip) {
  const auto& m = dalab::test::deformed_map();
  const GraphPatch p = local_stable_manifold(m, dalab::test::annulus_point(m), 0.01, 15);
  std::stringstream ss;
  write_patch(ss, p);
  const GraphPatch q = read_patch(ss);
  EXPECT_EQ(q.flavor, p.flavor);
  EXPECT_EQ(q.base_point.coords(), p.base_point.coords());
  EXPECT_EQ(q.frame.cs, p.frame.cs);
  ASSERT_EQ(q.graph.node_count(), p.graph.node_count());
  for (std::size_t i = 0; i < p.graph.node_count(); ++i) EXPECT_EQ(q.graph.values[i], p.graph.values[i]);
  EXPECT_EQ(q.k_bound, p.k_bound);
  std::stringstream bad("not a patch");
  EXPECT_THROW(read_patch(bad), std::exception);
}

TEST(Probe, LinearSlopeContraction) {
  const auto& m = dalab::test::linear_map();
  const TransformProbe r = probe_graph_transform(m, wrap({0.3, 0.6, 0.1, 0.9}), 5, 0.1, 0.01);
  ASSERT_EQ(r.theta.size(), 5u);
  EXPECT_LE(r.theta_max, 1.0 / (kMu * kMu) + 1e-9);
  EXPECT_NEAR(r.gamma_min, kMu, 1e-9);
}

TEST(Probe, DeformedBelowOne) {
  const auto& m = dalab::test::deformed_map();
  const TransformProbe r = probe_graph_transform(m, dalab::test::annulus_point(m), 5, 0.1, 0.01);
  EXPECT_LT(r.theta_max, 1.0);
  EXPECT_GT(r.gamma_min, 1.0);
}

TEST(Sheets, LinearUnstableManifoldIsPlanar) {
  const auto& m = dalab::test::linear_map();
  const TorusPoint q = m.distinguished_point();
  SheetOptions o;
  o.resolution = 0.05;
  const CurveSegment c = grow_unstable_manifold(m, q, 0.3, o);
  ASSERT_EQ(c.dim, 2);
  ASSERT_GT(c.size(), 4u);
  const Mat& es = m.base().stable_basis();
  double worst = 0;
  for (const Vec& l : c.lift) worst = std::max(worst, (es.transpose() * (l - q.coords())).norm());
  EXPECT_LT(worst, 1e-8);
  EXPECT_TRUE(c.certified);
}

TEST(Flatness, LinearAreaMatchesDeterminant) {
  // area of the image of a flat cu-disk of radius r is pi r^2 mu^{3n}
  const auto& m = dalab::test::linear_map();
  const MapView fwd = MapView::forward(m);
  const Vec center = dalab::test::annulus_point(m).coords();
  for (int n : {3, 6}) {
    const double r = 4.0 / std::pow(kMu, 2.0 * n);
    const CuDisk disk = make_cu_disk(fwd, wrap(center), r);
    const FlatnessResult f = dynamical_flatness(fwd, center, disk_offset(disk), 2, n, 1.0);
    const double expect = M_PI * 16.0 * std::pow(kMu, -static_cast<double>(n));
    EXPECT_NEAR(f.total_area, expect, 0.01 * expect) << n;
    EXPECT_LE(f.max_area, cube_projection_area(m.base().unstable_basis()));
  }
}

TEST(Flatness, CubeProjectionArea) {
  Mat p = Mat::Zero(4, 2);
  p(0, 0) = 1;
  p(1, 1) = 1;
  EXPECT_NEAR(cube_projection_area(p), 1.0, 1e-15);
  p.setZero();
  p(0, 0) = p(1, 0) = 1 / std::sqrt(2.0);
  p(2, 1) = 1;
  EXPECT_NEAR(cube_projection_area(p), std::sqrt(2.0), 1e-14);
  EXPECT_THROW(cube_projection_area(Mat::Identity(4, 3)), Error);
}
