#include <gtest/gtest.h>

#include "common.hpp"
#include "dalab/conditions.hpp"
#include "dalab/measures.hpp"

using namespace dalab;
using dalab::test::kMu;

namespace {

ConditionOptions small(int samples = 400) {
  ConditionOptions o;
  o.samples = samples;
  o.boundary_samples = 200;
  return o;
}

}  // namespace

TEST(Conditions, LinearMapPasses) {
  const ConditionReport r = verify_map_conditions(dalab::test::linear_map(), small());
  EXPECT_TRUE(r.pass()) << format_condition_table(r);
  // center values are the eigenvalue moduli 1/mu
  EXPECT_NEAR(r.outside_center_value(), 1.0 / kMu, 1e-8);
  EXPECT_LT(r.det_error_max, 1e-12);
  EXPECT_NEAR(r.domination_max, 1.0 / (kMu * kMu), 1e-8);
}

TEST(Conditions, DeformedMapPasses) {
  const ConditionReport r = verify_map_conditions(dalab::test::deformed_map(), small());
  EXPECT_TRUE(r.pass()) << format_condition_table(r);
  EXPECT_GT(r.samples_inside, 0);
  EXPECT_LT(r.domination_max, 1.0);
  EXPECT_GT(condition_margin(r), 0.0);
}

TEST(Conditions, TightSigmaFails) {
  ConditionOptions o = small();
  o.sigma = 0.3;  // below 1/mu
  const ConditionReport r = verify_map_conditions(dalab::test::linear_map(), o);
  EXPECT_FALSE(r.outside_pass());
  EXPECT_FALSE(r.pass());
  EXPECT_LT(condition_margin(r), 0.0);
}

TEST(Conditions, FullStrengthBreaksTheInsideBound) {
  const DeformedMap m = with_strengths(dalab::test::linear_map(), {1.0});
  const ConditionReport r = verify_map_conditions(m, small());
  EXPECT_FALSE(r.pass());
}

TEST(Conditions, DissipativeMapIsNotConservative) {
  const DeformedMap m = dalab::test::dissipative_map();
  const ConditionReport r = verify_map_conditions(m, small());
  EXPECT_FALSE(r.conservative);
  EXPECT_TRUE(r.pass()) << format_condition_table(r);
}

TEST(Conditions, Deterministic) {
  const ConditionReport a = verify_map_conditions(dalab::test::deformed_map(), small(200));
  ConditionOptions o = small(200);
  o.threads = 3;
  const ConditionReport b = verify_map_conditions(dalab::test::deformed_map(), o);
  EXPECT_EQ(a.cu_cone_ratio_max, b.cu_cone_ratio_max);
  EXPECT_EQ(a.inside_cs_cone, b.inside_cs_cone);
  EXPECT_EQ(a.domination_max, b.domination_max);
}

TEST(Conditions, StrengthSearchBracketsHalfStrength) {
  ConditionOptions o = small(300);
  const StrengthSearch s = find_max_strength(dalab::test::linear_map(), o, 8);
  EXPECT_GT(s.t_max, 2.0 * dalab::test::kHalfStrength * 0.9);
  EXPECT_LT(s.t_max, 1.0);
  EXPECT_GT(s.evaluations, 0);
}
