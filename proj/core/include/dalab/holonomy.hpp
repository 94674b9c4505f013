#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "dalab/cones.hpp"
#include "dalab/manifolds.hpp"
#include "dalab/torus.hpp"

namespace dalab {

struct HolonomyMatch {
  std::size_t index = 0;  // into the source parameters
  bool matched = false;
  Vec source_param;       // coordinates on the source disk
  Vec target_param;       // coordinates on the target disk (when matched)
  TorusPoint x;
  TorusPoint image;       // pi(x)
  Vec stable_param;       // graph coordinate of pi(x) on the stable patch of x
  double stable_arc = 0.0;  // length of the patch path from x to pi(x)
  double angle = 0.0;       // between the patch tangent and the target plane at pi(x)
  double residual = 0.0;    // distance from pi(x) to the target plane
  double contraction = 0.0;  // per-step separation factor of (x, pi(x)) over the shooting check
  double polish_shift = 0.0;  // change of the target coordinates from the shooting polish
};

struct HolonomyPair {
  CuDisk source;
  CuDisk target;
  std::vector<HolonomyMatch> matches;
  std::size_t matched_count() const;
  double match_fraction() const;
};

struct HolonomyOptions {
  double patch_radius = 0.02;
  int hadamard_steps = 12;
  int patch_grid = 9;
  bool patch_refine = false;
  double angle_guard = 1e-4;
  int max_newton = 50;
  // The patch intersection is moved onto the true leaf by requiring the cu
  // part of f^k(y) - f^k(x) to vanish, k = 1..polish_steps (0 disables).
  int polish_steps = 12;
  // Steps of the forward check that pi(x) shadows x (0 disables).
  int shooting_steps = 8;
  int frame_iterations = 30;
  int threads = 1;
};

// Points of the source disk sitting on a square grid of the given spacing.
std::vector<Vec> grid_source(const CuDisk& source, double spacing);

// pi(x): intersection of the local stable patch of each source point with the
// target plane, by Newton on the patch coordinates and the target coordinates,
// then polished by shooting. Points whose intersection leaves the patch or the
// disk are unmatched.
HolonomyPair stable_holonomy(const DeformedMap& m, const CuDisk& source, const std::vector<Vec>& source_params,
                             const CuDisk& target, const HolonomyOptions& opt = {});

struct MeasureRatio {
  std::vector<double> ratios;
  std::vector<Vec> centers;
  double max_ratio = 0.0;  // K
  int skipped = 0;         // sub-disks with fewer than min_points matches
};

// Target coordinates eta with disk_point(target, eta) on the stable leaf of x:
// for k = 1..steps, Newton on the cu part of f^k(y) - f^k(x) from the previous k.
Vec polish_on_stable_leaf(const DeformedMap& m, const TorusPoint& x, const CuDisk& target, const Vec& eta0, int steps,
                          int frame_iterations = 30);

// Leb(pi(D)) / Leb(D) for `count` random sub-disks D of radius r on the source,
// from convex hull areas of the matched points (u = 1 or 2).
MeasureRatio holonomy_measure_ratio(const HolonomyPair& pair, double r, int count, std::uint64_t seed,
                                    int min_points = 10);

// Area of the convex hull of planar points (monotone chain).
double hull_area(std::vector<std::pair<double, double>> pts);

enum class SubspaceMode { pushed, fixed };

struct DistortionRecord {
  std::vector<int> n;
  std::vector<double> gap;  // |log J(x, A1, n) - log J(y, A2, n)|
  double slope = 0.0;
  double slope_se = 0.0;
  bool truncated = false;
  int safe_n = 0;
};

// Stable graphs for following y: coarse grid, no refinement.
ContractionOptions coarse_chain_options();

struct DistortionOptions {
  SubspaceMode mode = SubspaceMode::pushed;
  ContractionOptions chain = coarse_chain_options();
  double patch_radius = 0.02;
};

// Restricted log-Jacobians of f^n along the orbits of x and y (y on the local
// stable graph of x, followed on the graphs along the orbit), with A1, A2
// pushed by Df each step (or held fixed in the contrast mode). The inverse
// Jacobian of f^n on the pushed subspace is the reciprocal, so the gap is the
// same as for f^{-n} from the image points.
DistortionRecord distortion_ratio(const DeformedMap& m, const TorusPoint& x, const Vec& y_offset, const Mat& a1,
                                  const Mat& a2, int n_max, const DistortionOptions& opt = {});
// log |det(jac restricted to span(a))| with a orthonormal.
double log_restricted_jacobian(const Mat& jac, const Mat& a);

struct HolderFit {
  double alpha = 0.0;
  double constant = 0.0;
  double theta = 0.0;
  double lambda_dom = 0.0;  // measured domination ratio along the pairs
  int pairs = 0;
};

struct StablePairSample {
  TorusPoint x;
  Vec y_offset;  // y - x along the stable graph of x
  Mat s1, s2;    // u-dim subspaces at x and y
};

// Fits angle(Df^k S1, Df^k S2) <= C (theta^k + d_k^alpha) over k = 0..n.
HolderFit angle_holder_fit(const DeformedMap& m, const std::vector<StablePairSample>& pairs, int n,
                           const ContractionOptions& chain = coarse_chain_options());

// a_n = min(lbar^n theta^-n, lbar^{n(1-alpha)}, gamma^n delta)
double subdisk_radius_schedule(double lambda_bar, double theta, double alpha, double gamma, double delta, int n);

void write_holonomy_csv(std::ostream& os, const HolonomyPair& p);
void write_distortion_csv(std::ostream& os, const DistortionRecord& r);

}  // namespace dalab
