#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include "dalab/linalg.hpp"

namespace dalab {

// Point of the n-torus; every coordinate lies in [0,1).
class TorusPoint {
 public:
  TorusPoint() = default;
  // Caller guarantees coordinates already lie in [0,1).
  static TorusPoint from_wrapped(const Vec& c) {
    TorusPoint p;
    p.c_ = c;
    return p;
  }
  int dim() const { return static_cast<int>(c_.size()); }
  double operator[](int i) const { return c_(i); }
  const Vec& coords() const { return c_; }

 private:
  Vec c_;
};

TorusPoint wrap(const Vec& v);
TorusPoint wrap(std::initializer_list<double> v);
// Representative of x - y in [-1/2, 1/2)^n.
Vec centered_difference(const Vec& x, const Vec& y);
double torus_distance(const TorusPoint& x, const TorusPoint& y);
// Lattice translate of `v` closest to `near`.
Vec nearest_lift(const Vec& v, const Vec& near);

using IntMatrix = std::vector<std::vector<long long>>;

struct EigenDirection {
  double value = 0.0;
  Vec vector;  // unit length
};

class LinearToralMap {
 public:
  explicit LinearToralMap(IntMatrix rows);
  // Skips the hyperbolicity check and calls the first `stable_dim` directions
  // (by modulus) stable. Used for diagnostics such as the identity map.
  static LinearToralMap diagnostic(IntMatrix rows, int stable_dim);

  int dim() const { return n_; }
  const IntMatrix& integer_matrix() const { return rows_; }
  const Mat& matrix() const { return a_; }
  const Mat& inverse() const { return ainv_; }
  int stable_dim() const { return static_cast<int>(es_.cols()); }
  int unstable_dim() const { return static_cast<int>(eu_.cols()); }
  const Mat& stable_basis() const { return es_; }
  const Mat& unstable_basis() const { return eu_; }
  // Sorted by modulus, ascending.
  const std::vector<std::complex<double>>& eigenvalues() const { return eig_; }
  bool real_spectrum() const { return real_; }
  // Real eigen-directions sorted by |value| ascending; empty if the spectrum is complex.
  const std::vector<EigenDirection>& directions() const { return dirs_; }

  Vec apply_lift(const Vec& v) const { return a_ * v; }
  TorusPoint apply(const TorusPoint& x) const { return wrap(a_ * x.coords()); }
  std::vector<TorusPoint> fixed_points(std::size_t limit = 4096) const;

 private:
  int n_ = 0;
  IntMatrix rows_;
  Mat a_, ainv_, es_, eu_;
  std::vector<std::complex<double>> eig_;
  std::vector<EigenDirection> dirs_;
  bool real_ = false;
  LinearToralMap(IntMatrix rows, int forced_stable_dim);
  void init(int forced_stable_dim);
};

// block-diag(C^m, ..., C^2, C) with C = [[2,1],[1,1]], n = 2m.
IntMatrix default_matrix(int n);

enum class SiteMode { flip, mix, unstable_flip };
std::string to_string(SiteMode m);
SiteMode site_mode_from_string(const std::string& s);

struct DeformationSite {
  TorusPoint center;
  double radius = 0.05;
  Mat plane;  // n x 2, orthonormal
  SiteMode mode = SiteMode::flip;
  double strength = 0.0;  // in [0,1]
  double rate = 0.0;      // squeeze exponent (flip modes) or rotation angle (mix)
};

struct MapOptions {
  bool conservative = true;
  double integrator_step = 0.05;
  double dissipation = 0.3;  // in-plane expansion rate when not conservative
  double delta0 = 0.1;
  double max_radius_fraction = 0.25;  // of the injectivity radius 1/2
};

// Base linear map composed with localized planar flows: f = A o phi.
class DeformedMap {
 public:
  DeformedMap(LinearToralMap base, std::vector<DeformationSite> sites, MapOptions options = {},
              std::optional<TorusPoint> q = std::nullopt);

  int dim() const { return base_.dim(); }
  const LinearToralMap& base() const { return base_; }
  const std::vector<DeformationSite>& sites() const { return sites_; }
  const MapOptions& options() const { return opt_; }
  const TorusPoint& distinguished_point() const { return q_; }
  int flow_steps() const { return steps_; }

  TorusPoint apply(const TorusPoint& x) const;
  TorusPoint apply_inverse(const TorusPoint& y) const;
  Mat jacobian(const TorusPoint& x) const;
  // Derivative of the inverse map at y.
  Mat jacobian_inverse(const TorusPoint& y) const;
  // Image and derivative in one pass.
  TorusPoint apply(const TorusPoint& x, Mat& jac) const;
  TorusPoint apply_inverse(const TorusPoint& y, Mat& jac) const;

  // Lifted maps on R^n commuting with integer translations.
  Vec apply_lift(const Vec& z) const;
  Vec apply_inverse_lift(const Vec& w) const;
  // f(x+e) - f(x) in the lift, accurate for tiny e.
  Vec image_separation(const TorusPoint& x, const Vec& e) const;
  Vec preimage_separation(const TorusPoint& y, const Vec& e) const;

  // Index of the site whose ball contains x, or -1.
  int site_index(const Vec& x) const;
  bool in_perturbation(const TorusPoint& x) const { return site_index(x.coords()) >= 0; }
  // Lebesgue measure of the deformation region.
  double perturbation_volume() const;

  // Local flow of one site applied to a displacement d from its center.
  Vec site_flow(int site, const Vec& d, double direction, Mat* jac) const;

 private:
  struct SiteData {
    Mat quad;   // 2x2 quadratic form of the profile
    Mat poisson;  // P J P^T
    Mat proj;   // P P^T
    Mat plane_quad;  // P S P^T
  };
  void field(int site, const Vec& y, Vec& x, Mat* dx) const;
  Vec displacement(const Vec& z, bool inverse, int* site_out) const;

  LinearToralMap base_;
  std::vector<DeformationSite> sites_;
  std::vector<SiteData> data_;
  MapOptions opt_;
  TorusPoint q_;
  int steps_ = 1;
};

// Time-reversible view: forward runs f, backward runs f^{-1}. Bundles swap
// roles under reversal so cs always means the dominated side of the view.
class MapView {
 public:
  static MapView forward(const DeformedMap& m) { return MapView(m, false); }
  static MapView backward(const DeformedMap& m) { return MapView(m, true); }
  MapView reversed() const { return MapView(*map_, !inv_); }

  const DeformedMap& map() const { return *map_; }
  bool is_backward() const { return inv_; }
  int dim() const { return map_->dim(); }
  int cs_dim() const { return inv_ ? map_->base().unstable_dim() : map_->base().stable_dim(); }
  int cu_dim() const { return inv_ ? map_->base().stable_dim() : map_->base().unstable_dim(); }
  const Mat& base_cs() const { return inv_ ? map_->base().unstable_basis() : map_->base().stable_basis(); }
  const Mat& base_cu() const { return inv_ ? map_->base().stable_basis() : map_->base().unstable_basis(); }

  TorusPoint step(const TorusPoint& x) const { return inv_ ? map_->apply_inverse(x) : map_->apply(x); }
  TorusPoint step(const TorusPoint& x, Mat& jac) const {
    return inv_ ? map_->apply_inverse(x, jac) : map_->apply(x, jac);
  }
  TorusPoint step_back(const TorusPoint& x) const { return inv_ ? map_->apply(x) : map_->apply_inverse(x); }
  Mat jacobian(const TorusPoint& x) const { return inv_ ? map_->jacobian_inverse(x) : map_->jacobian(x); }
  // Derivative of the reversed view at x.
  Mat jacobian_back(const TorusPoint& x) const { return inv_ ? map_->jacobian(x) : map_->jacobian_inverse(x); }
  Vec step_lift(const Vec& z) const { return inv_ ? map_->apply_inverse_lift(z) : map_->apply_lift(z); }
  Vec separation(const TorusPoint& x, const Vec& e) const {
    return inv_ ? map_->preimage_separation(x, e) : map_->image_separation(x, e);
  }
  bool in_perturbation(const TorusPoint& x) const { return map_->in_perturbation(x); }
  // Derivative of the view away from the sites, and its inverse.
  const Mat& base_matrix() const { return inv_ ? map_->base().inverse() : map_->base().matrix(); }
  const Mat& base_matrix_inverse() const { return inv_ ? map_->base().matrix() : map_->base().inverse(); }

 private:
  MapView(const DeformedMap& m, bool inv) : map_(&m), inv_(inv) {}
  const DeformedMap* map_;
  bool inv_;
};

struct ExampleParams {
  int n = 4;
  double delta = 0.05;
  double delta0 = 0.1;
  std::vector<double> strengths;  // one per site, or a single value broadcast
  MapOptions options;
  std::optional<IntMatrix> matrix;
};

// Number of sites build_example places for a base map.
int example_site_count(const LinearToralMap& base);
DeformedMap build_example(const ExampleParams& params);
DeformedMap build_example(int n, double delta, double delta0, std::vector<double> strengths);

// Same map with every site strength multiplied by `factor` (result clamped to [0,1]).
DeformedMap with_scaled_strengths(const DeformedMap& m, double factor);
DeformedMap with_strengths(const DeformedMap& m, const std::vector<double>& strengths);

// Key-value map specification.
std::string serialize_map(const DeformedMap& m);
DeformedMap parse_map(const std::string& text);
DeformedMap load_map(const std::string& path);
void save_map(const DeformedMap& m, const std::string& path);
// FNV-1a of the canonical serialization, as 16 hex digits.
std::string map_hash(const DeformedMap& m);

}  // namespace dalab
