#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "dalab/torus.hpp"

namespace dalab {

struct ConditionOptions {
  double sigma = 0.9;
  double delta0 = 0.1;
  double aperture = 0.1;
  int samples = 10000;
  std::uint64_t seed = 1;
  int frame_iterations = 30;
  int planes_per_point = 8;
  int boundary_samples = 1000;
  double det_tolerance = 1e-8;
  int threads = 1;
};

// Sup-norm measurements behind the three defining conditions of the class.
// "center" values use the estimated invariant bundles; "cone" values are sups
// over sampled planes tangent to the cones.
struct ConditionReport {
  ConditionOptions options;
  int samples_outside = 0;
  int samples_inside = 0;
  double cu_cone_ratio_max = 0.0;  // a'/a for C^cu under Df
  double cs_cone_ratio_max = 0.0;  // a'/a for C^cs under Df^{-1}
  double domination_max = 0.0;
  double frame_convergence_max = 0.0;
  double outside_cu_inv_center = 0.0;
  double outside_cs_center = 0.0;
  double outside_cu_inv_cone = 0.0;
  double outside_cs_cone = 0.0;
  double inside_cu_inv_center = 0.0;
  double inside_cs_center = 0.0;
  double inside_cu_inv_cone = 0.0;
  double inside_cs_cone = 0.0;
  double det_error_max = 0.0;
  bool conservative = true;

  double outside_center_value() const;
  double outside_cone_value() const;
  double inside_cone_value() const;
  bool cone_invariance_pass() const;
  bool outside_pass() const;
  bool inside_pass() const;
  bool volume_pass() const;
  bool pass() const { return cone_invariance_pass() && outside_pass() && inside_pass() && volume_pass(); }
};

ConditionReport verify_map_conditions(const DeformedMap& m, const ConditionOptions& opt);
std::string format_condition_table(const ConditionReport& r);

// Uniformly random point of the torus, or of the site balls when `inside`.
TorusPoint sample_point(const DeformedMap& m, std::mt19937_64& gen, bool inside, int site);

struct StrengthSearch {
  double t_max = 0.0;  // largest passing common strength
  int evaluations = 0;
};

// Bisection on a common site strength t in [0,1].
StrengthSearch find_max_strength(const DeformedMap& m, const ConditionOptions& opt, int iterations = 12);

}  // namespace dalab
