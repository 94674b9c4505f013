#pragma once

#include <cstdint>
#include <vector>

#include "dalab/cones.hpp"
#include "dalab/holonomy.hpp"
#include "dalab/torus.hpp"

// Standard geometric setups shared by the command line tool, the tests and
// the benchmarks.
namespace dalab {

struct HolonomySetupOptions {
  int site = -1;                  // -1: first unstable_flip site, else site 0
  double offset_fraction = 0.75;  // of the site radius, along the first plane direction
  double source_radius = 0.01;
  double target_distance = 0.008;  // along the stable directions
  double target_radius = 0.015;
  double tilt = 0.04;  // cs component added to the target basis
};

struct HolonomySetup {
  int site = -1;
  TorusPoint anchor;
  CuDisk source;
  CuDisk target;
};

// Two transversals in the transition annulus of a site, where the stable
// foliation bends. At strength 0 everything is affine.
HolonomySetup holonomy_setup(const DeformedMap& m, const HolonomySetupOptions& opt = {});

// |det| of the affine holonomy between the two disk planes along E^s of the
// linear part; exact for the undeformed map.
double linear_holonomy_jacobian(const DeformedMap& m, const CuDisk& source, const CuDisk& target);

struct StablePairOptions {
  int count = 100;
  int anchors = 5;         // base points; pairs are spread evenly over them
  double spread = 0.004;   // anchors: uniform within this sup distance of the setup anchor
  double offset = 0.005;   // |y - x| on the stable patch
  double aperture = 0.05;  // cu-cone aperture of the random subspaces
  std::uint64_t seed = 1;
  int frame_iterations = 30;
};

// x, y on a common local stable patch with random u-dim subspaces of the
// cu-cones at x and y.
std::vector<StablePairSample> stable_pairs(const DeformedMap& m, const TorusPoint& anchor,
                                           const StablePairOptions& opt = {});

// Two cu-disks far apart (torus distance >= min_distance), centers drawn from the seed.
std::pair<CuDisk, CuDisk> distant_disks(const DeformedMap& m, std::uint64_t seed, double radius = 0.02,
                                        double min_distance = 0.3);

}  // namespace dalab
