#include <gtest/gtest.h>

#include <sstream>

#include "common.hpp"
#include "dalab/holonomy.hpp"
#include "dalab/scenarios.hpp"

using namespace dalab;
using dalab::test::kMu;

TEST(Hull, Polygons) {
  EXPECT_DOUBLE_EQ(hull_area({{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}}), 1.0);
  EXPECT_DOUBLE_EQ(hull_area({{0, 0}, {2, 0}, {0, 3}}), 3.0);
  EXPECT_DOUBLE_EQ(hull_area({{0, 0}, {1, 1}, {2, 2}}), 0.0);
  EXPECT_DOUBLE_EQ(hull_area({{0, 0}, {1, 1}}), 0.0);
}

TEST(Holonomy, GridSourceStaysInDisk) {
  const auto& m = dalab::test::linear_map();
  const HolonomySetup s = holonomy_setup(m);
  const auto pts = grid_source(s.source, 0.002);
  ASSERT_GT(pts.size(), 50u);
  for (const Vec& p : pts) EXPECT_LE(p.norm(), s.source.radius + 1e-15);
}

TEST(Holonomy, SetupPicksTheAnnulus) {
  const auto& m = dalab::test::deformed_map();
  const HolonomySetup s = holonomy_setup(m);
  EXPECT_EQ(s.site, 1);
  EXPECT_TRUE(m.in_perturbation(s.anchor));
  EXPECT_GT(torus_distance(s.anchor, s.target.center), 0.0);
}

TEST(Holonomy, LinearRatioIsTheProjectionDeterminant) {
  const auto& m = dalab::test::linear_map();
  const HolonomySetup s = holonomy_setup(m);
  HolonomyOptions o;
  o.polish_steps = 4;
  o.shooting_steps = 4;
  const HolonomyPair pair = stable_holonomy(m, s.source, grid_source(s.source, 0.0014), s.target, o);
  EXPECT_EQ(pair.match_fraction(), 1.0);
  const MeasureRatio r = holonomy_measure_ratio(pair, 0.004, 5, 1);
  ASSERT_FALSE(r.ratios.empty());
  const double det = linear_holonomy_jacobian(m, s.source, s.target);
  for (double v : r.ratios) EXPECT_NEAR(v, det, 1e-8);
}

TEST(Holonomy, IdentityWhenTargetIsSource) {
  const auto& m = dalab::test::deformed_map();
  const HolonomySetup s = holonomy_setup(m);
  HolonomyOptions o;
  o.polish_steps = 4;
  o.shooting_steps = 4;
  const auto params = grid_source(s.source, 0.004);
  const HolonomyPair pair = stable_holonomy(m, s.source, params, s.source, o);
  ASSERT_EQ(pair.matched_count(), params.size());
  for (const auto& mt : pair.matches) {
    EXPECT_LT((mt.target_param - mt.source_param).norm(), 1e-9);
    EXPECT_LT(torus_distance(mt.image, mt.x), 1e-9);
  }
  EXPECT_NEAR(linear_holonomy_jacobian(m, s.source, s.source), 1.0, 1e-12);
}

TEST(Holonomy, CsvHasOneRowPerPoint) {
  const auto& m = dalab::test::linear_map();
  const HolonomySetup s = holonomy_setup(m);
  HolonomyOptions o;
  o.polish_steps = 2;
  o.shooting_steps = 2;
  const HolonomyPair pair = stable_holonomy(m, s.source, grid_source(s.source, 0.005), s.target, o);
  std::ostringstream os;
  write_holonomy_csv(os, pair);
  const std::string text = os.str();
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), pair.matches.size() + 1);
}

TEST(Distortion, LinearGapVanishesForEqualSubspaces) {
  const auto& m = dalab::test::linear_map();
  StablePairOptions po;
  po.count = 2;
  po.anchors = 1;
  const auto pairs = stable_pairs(m, holonomy_setup(m).anchor, po);
  ASSERT_EQ(pairs.size(), 2u);
  for (const auto& pr : pairs) {
    const DistortionRecord r = distortion_ratio(m, pr.x, pr.y_offset, pr.s1, pr.s1, 10);
    ASSERT_FALSE(r.gap.empty());
    for (double g : r.gap) EXPECT_LT(g, 1e-12);
    EXPECT_FALSE(r.truncated);
  }
}

TEST(Distortion, PushedSlopeIsFlat) {
  const auto& m = dalab::test::deformed_map();
  StablePairOptions po;
  po.count = 3;
  po.anchors = 1;
  const auto pairs = stable_pairs(m, holonomy_setup(m).anchor, po);
  for (const auto& pr : pairs) {
    EXPECT_NEAR(pr.y_offset.norm(), po.offset, 1e-3);
    const DistortionRecord r = distortion_ratio(m, pr.x, pr.y_offset, pr.s1, pr.s2, 20);
    EXPECT_LT(std::abs(r.slope), 0.01);
  }
}

TEST(Distortion, RestrictedJacobian) {
  Mat j = Mat::Identity(3, 3);
  j(0, 0) = 2;
  j(1, 1) = 3;
  Mat a = Mat::Zero(3, 2);
  a(0, 0) = 1;
  a(1, 1) = 1;
  EXPECT_NEAR(log_restricted_jacobian(j, a), std::log(6.0), 1e-14);
}

TEST(Holder, LinearDominationRatio) {
  const auto& m = dalab::test::linear_map();
  StablePairOptions po;
  po.count = 10;
  po.anchors = 2;
  const auto pairs = stable_pairs(m, holonomy_setup(m).anchor, po);
  const HolderFit f = angle_holder_fit(m, pairs, 12);
  EXPECT_NEAR(f.lambda_dom, 1.0 / (kMu * kMu), 1e-8);
  EXPECT_GT(f.pairs, 0);
}

TEST(Holder, SubdiskSchedule) {
  // each branch can be the minimum
  EXPECT_DOUBLE_EQ(subdisk_radius_schedule(0.5, 0.9, 0.5, 2.0, 1.0, 2), std::pow(0.5 / 0.9, 2));
  EXPECT_DOUBLE_EQ(subdisk_radius_schedule(0.5, 0.1, 0.5, 2.0, 1.0, 2), std::pow(0.5, 1.0));
  EXPECT_DOUBLE_EQ(subdisk_radius_schedule(0.5, 0.1, 0.5, 2.0, 1e-3, 2), 4e-3);
}
