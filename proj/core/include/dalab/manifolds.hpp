#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "dalab/cones.hpp"
#include "dalab/torus.hpp"

namespace dalab {

// Local map between splitting coordinates z = (xi, eta): xi along the graph
// domain, eta along the values. map(0) = 0.
struct GraphChart {
  int domain_dim = 0;
  int value_dim = 0;
  std::function<Vec(const Vec&)> map;
  std::function<Mat(const Vec&)> jacobian;

  static GraphChart linear(const Mat& m, int domain_dim);
};

// Chart of the view from x, with coordinates x + [dom_x val_x] z, to the
// point y with coordinates y + [dom_y val_y] w. y is assumed to be g(x).
GraphChart make_chart(const MapView& view, const TorusPoint& x, const Mat& dom_x, const Mat& val_x, const Mat& dom_y,
                      const Mat& val_y);

// Graph over the sup-norm ball [-radius, radius]^d sampled on a regular grid
// with multilinear interpolation. Slopes are carried alongside the values.
struct GraphData {
  int domain_dim = 0;
  int value_dim = 0;
  double radius = 0.0;
  int grid = 33;  // nodes per axis, odd
  std::vector<Vec> values;
  std::vector<Mat> slopes;  // value_dim x domain_dim

  static GraphData zero(int domain_dim, int value_dim, double radius, int grid);
  static GraphData linear(const Mat& k, double radius, int grid);
  std::size_t node_count() const { return values.size(); }
  Vec node(std::size_t i) const;
  Vec value_at(const Vec& xi) const;
  Mat slope_at(const Vec& xi) const;
  // max ||Dh|| over the nodes
  double slope_bound() const;
  // max ||Dh|| from finite differences of the values
  double fd_slope_bound() const;
};

struct GraphOptions {
  int grid = 33;
  bool refine = true;
  int max_grid = 129;
  double refine_tolerance = 1e-7;
  int max_newton = 100;
  double cap = 0.0;  // output radius cap; 0 keeps the input radius
};

struct ChartTransform {
  GraphData graph;
  double gamma = 0.0;  // min ||alpha(xi)|| / ||xi|| (sup norms) over the input grid
  double theta = 0.0;  // output slope bound / input slope bound (0 when the input is flat)
  int newton_iterations = 0;  // worst case
};

// h~(alpha(xi)) = beta(xi) with (alpha, beta)(xi) = chart(xi, h(xi)).
ChartTransform transform_graph(const GraphChart& chart, const GraphData& h, const GraphOptions& opt);

enum class GraphFlavor { cu_graph, cs_graph };
std::string to_string(GraphFlavor f);

struct GraphPatch {
  TorusPoint base_point;
  SplittingFrame frame;  // bundles of the map (not of a reversed view)
  GraphFlavor flavor = GraphFlavor::cu_graph;
  GraphData graph;
  double k_bound = 0.0;
  double convergence = 0.0;  // local_stable_manifold: sup distance between the m and m-1 results

  const Mat& domain_basis() const { return flavor == GraphFlavor::cu_graph ? frame.cu : frame.cs; }
  const Mat& value_basis() const { return flavor == GraphFlavor::cu_graph ? frame.cs : frame.cu; }
  double radius() const { return graph.radius; }
  // Point of the graph over xi as a displacement from the base point.
  Vec offset(const Vec& xi) const;
  TorusPoint point(const Vec& xi) const { return wrap(base_point.coords() + offset(xi)); }
};

GraphPatch make_patch(const TorusPoint& x, const SplittingFrame& frame, GraphFlavor flavor, GraphData graph);

struct PatchTransform {
  GraphPatch patch;
  double gamma = 0.0;
  double theta = 0.0;
};

// Transform of the patch by one step of the view. The new frame is estimated
// at the image unless supplied.
PatchTransform graph_transform(const MapView& view, const GraphPatch& p, const GraphOptions& opt = {},
                               const SplittingFrame* target_frame = nullptr, int frame_iterations = 30);
// cu-graph pushed by the map.
PatchTransform graph_transform_cu(const DeformedMap& m, const GraphPatch& p, const GraphOptions& opt = {});

// Re-expresses the graph over the domain bundle of another frame at the same point.
GraphPatch rebase_patch(const GraphPatch& p, const SplittingFrame& frame, const GraphOptions& opt = {});

struct StableManifoldOptions {
  GraphOptions graph;
  int frame_iterations = 30;
  double tolerance = 1e-8;
};

// Graph along the cs bundle of the view through x, by pulling the flat graph at
// g^m(x) back m times. For the backward view this is the local unstable manifold.
GraphPatch local_stable_manifold(const MapView& view, const TorusPoint& x, double radius, int m,
                                 const StableManifoldOptions& opt = {});
GraphPatch local_stable_manifold(const DeformedMap& m, const TorusPoint& x, double radius, int steps,
                                 const StableManifoldOptions& opt = {});

struct ContractionResult {
  double ratio = 1.0;             // max over samples of d(g^n x, g^n y) / d(x, y)
  double rate = 0.0;              // fitted per-step factor over k in [n/2, n]
  std::vector<double> max_ratio;  // k = 0..n
  int samples = 0;
};

struct ContractionOptions {
  int samples = 100;
  std::uint64_t seed = 1;
  int hadamard_steps = 12;
  int frame_iterations = 30;
  GraphOptions graph;
};

// Sampled points of the patch are followed along the orbit of its base point.
// After each step the image is put back on the local stable graph at the new
// base point (built by one long pull-back pass), since forward iteration alone
// loses stable points to rounding within a few dozen steps.
ContractionResult contraction_verify(const MapView& view, const GraphPatch& patch, int n,
                                     const ContractionOptions& opt = {});
ContractionResult contraction_verify(const DeformedMap& m, const GraphPatch& patch, int n,
                                     const ContractionOptions& opt = {});

// Orbit of x under the view with the local stable graph at every step
// (one pull-back pass from step n + hadamard_steps).
struct StableChain {
  GraphFlavor flavor = GraphFlavor::cs_graph;
  int domain_dim = 0;
  std::vector<TorusPoint> points;  // k = 0..n
  std::vector<SplittingFrame> frames;
  std::vector<Mat> bases;           // [domain value] per step
  std::vector<GraphData> graphs;    // k = 0..n
  std::vector<GraphChart> charts;   // k -> k+1

  int steps() const { return static_cast<int>(charts.size()); }
  GraphPatch patch(int k) const;
  // Displacements from points[k] of the images of points[0] + e0, put back on
  // the stable graph after every step. e0 should lie on graph 0.
  std::vector<Vec> follow(const Vec& e0) const;
};

StableChain stable_chain(const MapView& view, const TorusPoint& x, const SplittingFrame& frame, int n, double radius,
                         const ContractionOptions& opt = {});

struct TransformProbe {
  std::vector<double> theta;  // per step: output slope bound / input slope bound k
  std::vector<double> gamma;
  std::vector<double> chain_bound;  // slope bound of the patch carried along the orbit
  double theta_max = 0.0;
  double gamma_min = 0.0;
};

// Along `steps` points of the forward orbit of x, transforms cu-graphs whose
// slope has norm exactly k (several directions per step), and also carries one
// such graph along the orbit.
TransformProbe probe_graph_transform(const DeformedMap& m, const TorusPoint& x, int steps, double k, double radius,
                                     int directions = 4, const GraphOptions& opt = {});

// (1 + c) * exp(mean log ||Df|E^cs||) over n steps from x.
double lambda_bar(const DeformedMap& m, const TorusPoint& x, int n, double c = 0.05);

struct SheetOptions {
  double seed_radius = 1e-4;
  double resolution = 0.02;
  std::size_t max_nodes = 2'000'000;
  int initial_nodes = 3;
  int hadamard_steps = 12;
  bool certify = true;
  double aperture = 0.1;
  int frame_iterations = 20;
  int threads = 1;
};

// Sampled piece of an invariant manifold of dimension 1 or 2 on a parameter grid.
struct CurveSegment {
  TorusPoint anchor;
  int dim = 0;
  std::vector<int> shape;   // nodes per parameter axis
  std::vector<Vec> lift;    // row-major over the grid, first axis slowest
  std::vector<Mat> tangent;  // orthonormal n x dim, filled when certified
  std::vector<double> arc;  // arc length along the curve (dim 1)
  double resolution = 0.0;
  int iterations = 0;
  std::vector<double> seed_radii;
  Mat seed_axes;  // domain directions (columns) of the seed box
  double max_aperture = 0.0;  // largest tangent aperture in the certificate
  bool certified = false;

  std::size_t size() const { return lift.size(); }
  TorusPoint point(std::size_t i) const { return wrap(lift[i]); }
  double max_gap() const;
};

// Grows the unstable manifold of the view at the fixed point q until the
// boundary of the lifted piece is at distance >= target_length from q. The
// seed box is anisotropic so that all directions reach the target together.
CurveSegment grow_unstable_manifold(const MapView& view, const TorusPoint& q, double target_length,
                                    const SheetOptions& opt = {});
CurveSegment grow_unstable_manifold(const DeformedMap& m, const TorusPoint& q, double target_length,
                                    const SheetOptions& opt = {});
// W^s(q): growth under the inverse map.
CurveSegment grow_stable_manifold(const DeformedMap& m, const TorusPoint& q, double target_length,
                                  const SheetOptions& opt = {});

struct DensityOptions {
  int trials = 1000;
  std::uint64_t seed = 1;
  int frame_iterations = 20;
  int threads = 1;
};

struct DensityResult {
  double fraction = 0.0;
  int hits = 0;
  int trials = 0;
  double eps0 = 0.0;
  std::vector<double> nearest;  // per trial: smallest disk radius reaching the sheet (inf if none within 1/2)
};

// Fraction of random cu-disks of radius eps0 meeting the sheet (a W^s piece).
DensityResult density_check(const DeformedMap& m, const CurveSegment& ws, double eps0, const DensityOptions& opt);

// Largest radius of a cu-disk missing the sheet, estimated over random centers.
double measure_max_gap(const DeformedMap& m, const CurveSegment& ws, const DensityOptions& opt);

struct FlatnessOptions {
  double resolution_fraction = 0.05;  // mesh spacing relative to the cube edge
  std::size_t max_nodes = 4'000'000;
  int initial_nodes = 9;
};

struct FlatnessResult {
  double max_area = 0.0;    // max over cubes of contained dim-volume
  double total_area = 0.0;
  std::size_t cubes = 0;
  std::size_t nodes = 0;
};

// Seed sheet: parameters a in [-1,1]^dim mapped to a lifted point.
using SheetSeed = std::function<Vec(const Vec&)>;

// Seed covering the flat disk (concentric square-to-disk map).
SheetSeed disk_seed(const CuDisk& disk, const Vec& lift_center);

// Displacements b * r * xi of the same disk, for the anchored form below.
SheetSeed disk_offset(const CuDisk& disk);

FlatnessResult dynamical_flatness(const MapView& view, const SheetSeed& seed, int dim, int n, double cube_edge = 1.0,
                                  const FlatnessOptions& opt = {});
// Seed given as displacements from `anchor` (a lift). Nodes are carried as
// separations along the anchor orbit, so tiny seeds keep their shape under
// strong expansion.
FlatnessResult dynamical_flatness(const MapView& view, const Vec& anchor, const SheetSeed& offset, int dim, int n,
                                  double cube_edge = 1.0, const FlatnessOptions& opt = {});

// Area of the orthogonal projection of the unit cube onto span(plane) (n x 2, orthonormal),
// which bounds every planar section of a unit cube.
double cube_projection_area(const Mat& plane);

// Binary round trip with exact doubles.
void write_patch(std::ostream& os, const GraphPatch& p);
GraphPatch read_patch(std::istream& is);
// CSV with domain coordinates, values and torus point per node.
void write_patch_csv(std::ostream& os, const GraphPatch& p);
void write_segment_csv(std::ostream& os, const CurveSegment& c);

}  // namespace dalab
