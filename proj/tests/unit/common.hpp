#pragma once

#include <cmath>

#include "dalab/torus.hpp"

namespace dalab::test {

inline const double kMu = (3.0 + std::sqrt(5.0)) / 2.0;
inline const double kL = std::log(kMu);
// half of the largest strength passing the conditions on the default map
inline constexpr double kHalfStrength = 0.066;

inline const DeformedMap& linear_map() {
  static const DeformedMap m = build_example(4, 0.05, 0.1, {0.0});
  return m;
}

inline const DeformedMap& deformed_map() {
  static const DeformedMap m = build_example(4, 0.05, 0.1, {kHalfStrength});
  return m;
}

inline DeformedMap dissipative_map(double strength = kHalfStrength) {
  ExampleParams p;
  p.strengths = {strength};
  p.options.conservative = false;
  return build_example(p);
}

// Point in the transition annulus of the unstable_flip site (index 1),
// where the deformation bends the stable foliation.
inline TorusPoint annulus_point(const DeformedMap& m, double fraction = 0.75) {
  const auto& s = m.sites()[1];
  return wrap(Vec(s.center.coords() + fraction * s.radius * s.plane.col(0) + 0.002 * Vec::Constant(m.dim(), 1.0)));
}

}  // namespace dalab::test
