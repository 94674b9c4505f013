#pragma once

#include <random>

#include "dalab/linalg.hpp"
#include "dalab/torus.hpp"

namespace dalab {

// Estimated invariant splitting at a point. Bases are orthonormal within each
// bundle; the bundles themselves need not be orthogonal.
struct SplittingFrame {
  TorusPoint point;
  Mat cs;  // n x s
  Mat cu;  // n x u
  double convergence = 0.0;  // subspace distance between the k and k-1 estimates
};

enum class ConeKind { center_unstable, center_stable };

struct Cone {
  Mat center_basis;
  double aperture = 0.1;
  ConeKind kind = ConeKind::center_unstable;
};

Cone make_cone(const SplittingFrame& frame, ConeKind kind, double aperture);

// Norm of L : E -> E^perp whose graph is F. For equal dimensions this is the
// tangent of the largest principal angle, so it is symmetric in E and F.
double subspace_angle(const Mat& e, const Mat& f);
// max of the two bundle angles
double frame_distance(const SplittingFrame& a, const SplittingFrame& b);

// Coefficients of v in the (cs, cu) basis of the frame.
struct FrameComponents {
  Vec cs, cu;
};
FrameComponents decompose(const SplittingFrame& frame, const Vec& v);

bool cone_contains(const Cone& cone, const SplittingFrame& frame, const Vec& v);

// Orthonormal basis of jac * span(basis).
Mat push_subspace(const Mat& jac, const Mat& basis);

struct ApertureResult {
  double aperture = 0.0;  // a'
  double ratio = 0.0;     // a' / a
};

// Smallest a' with Dg(C_a(x)) inside C_{a'} at the image point, where g is the
// view for center-unstable cones and its inverse for center-stable cones.
// `target` must be the frame at the image point.
ApertureResult image_aperture(const MapView& view, const TorusPoint& x, const Cone& cone,
                              const SplittingFrame& source, const SplittingFrame& target, int samples = 1024);
ApertureResult image_aperture_of(const Mat& jac, const Cone& cone, const SplittingFrame& source,
                                 const SplittingFrame& target, int samples = 1024);

// cu by forward power iteration from g^{-k}(x), cs by backward iteration
// from g^k(x). cu_dim overrides the bundle dimension (n means no cs part).
SplittingFrame estimate_invariant_splitting(const MapView& view, const TorusPoint& x, int k, int cu_dim = -1);
SplittingFrame estimate_invariant_splitting(const DeformedMap& m, const TorusPoint& x, int k);

// Frame at g(x) obtained by pushing both bundles with Dg(x).
SplittingFrame push_frame(const MapView& view, const SplittingFrame& frame);

// ||Dg|E^cs(x)|| * ||(Dg|E^cu(x))^{-1}||.
double domination_ratio(const MapView& view, const SplittingFrame& frame);
double domination_ratio_of(const Mat& jac, const SplittingFrame& frame);

// Random u-dimensional subspace inside the cu-cone (kind picks the center).
Mat random_cone_subspace(const Cone& cone, const SplittingFrame& frame, std::mt19937_64& gen,
                         bool on_boundary = false);

// Aperture of the smallest cone of the given kind containing span(plane);
// infinity when the plane is not a graph over the cone center.
double plane_aperture(const SplittingFrame& frame, const Mat& plane, ConeKind kind);

// Flat disk through `center` spanned by an orthonormal basis.
struct CuDisk {
  TorusPoint center;
  Mat basis;  // n x u
  double radius = 0.02;
};

// Disk along the estimated center-unstable bundle at `center`.
CuDisk make_cu_disk(const MapView& view, const TorusPoint& center, double radius, int frame_iterations = 30);
// True when the disk plane lies in the cu-cone of the given aperture.
bool disk_in_cu_cone(const MapView& view, const CuDisk& disk, double aperture, int frame_iterations = 30);
// Uniform point of the closed unit ball in R^d.
Vec uniform_ball(int d, std::mt19937_64& gen);
TorusPoint disk_point(const CuDisk& disk, const Vec& xi);

}  // namespace dalab
