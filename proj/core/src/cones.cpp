#include "dalab/cones.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "dalab/rng.hpp"

namespace dalab {

namespace {

double radical_inverse(std::uint64_t i, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
    i /= static_cast<std::uint64_t>(base);
    f *= inv;
  }
  return r;
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

// Number of unit-cube coordinates used to parametrize S^{d-1}.
int sphere_params(int d) { return d <= 2 ? 1 : 2 * ((d + 1) / 2); }

Vec sphere_point(int d, const double* u) {
  Vec v(d);
  if (d == 1) {
    v(0) = u[0] < 0.5 ? 1.0 : -1.0;
    return v;
  }
  if (d == 2) {
    const double t = 2.0 * std::numbers::pi * u[0];
    v << std::cos(t), std::sin(t);
    return v;
  }
  for (int i = 0; i < d; i += 2) {
    const double r = std::sqrt(-2.0 * std::log(std::max(u[i], 1e-300)));
    const double t = 2.0 * std::numbers::pi * u[i + 1];
    v(i) = r * std::cos(t);
    if (i + 1 < d) v(i + 1) = r * std::sin(t);
  }
  const double nv = v.norm();
  if (nv == 0.0) v(0) = 1.0;
  return v / std::max(nv, 1e-300);
}

struct ConeSides {
  const Mat* center;
  const Mat* off;
};

ConeSides sides(const SplittingFrame& f, ConeKind kind) {
  if (kind == ConeKind::center_unstable) return {&f.cu, &f.cs};
  return {&f.cs, &f.cu};
}

}  // namespace

Cone make_cone(const SplittingFrame& frame, ConeKind kind, double aperture) {
  if (!(aperture > 0.0)) throw Error("make_cone: aperture must be positive");
  Cone c;
  c.kind = kind;
  c.aperture = aperture;
  c.center_basis = kind == ConeKind::center_unstable ? frame.cu : frame.cs;
  return c;
}

double subspace_angle(const Mat& e_in, const Mat& f_in) {
  if (e_in.rows() != f_in.rows() || e_in.cols() != f_in.cols())
    throw Error("subspace_angle: subspaces must have equal dimension");
  const int n = static_cast<int>(e_in.rows());
  const int k = static_cast<int>(e_in.cols());
  if (k == 0 || k == n) return 0.0;
  Mat e = e_in, f = f_in;
  orthonormalize(e);
  orthonormalize(f);
  const Mat perp = orthogonal_complement(e);
  const Mat x = e.transpose() * f;
  const Mat y = perp.transpose() * f;
  Eigen::JacobiSVD<Mat> svd(x);
  if (svd.singularValues()(k - 1) < 1e-8) throw Error("angle undefined: F is not a graph over E");
  const Mat l = y * x.inverse();
  if (l.rows() >= l.cols()) return singular_values(l).max;
  const Mat lt = l.transpose();
  return singular_values(lt).max;
}

double frame_distance(const SplittingFrame& a, const SplittingFrame& b) {
  double d = 0.0;
  if (a.cs.cols() > 0) d = std::max(d, subspace_angle(a.cs, b.cs));
  if (a.cu.cols() > 0) d = std::max(d, subspace_angle(a.cu, b.cu));
  return d;
}

FrameComponents decompose(const SplittingFrame& frame, const Vec& v) {
  const int n = static_cast<int>(v.size());
  const int s = static_cast<int>(frame.cs.cols());
  Mat t(n, n);
  t.leftCols(s) = frame.cs;
  t.rightCols(n - s) = frame.cu;
  const Vec c = t.partialPivLu().solve(v);
  return {c.head(s), c.tail(n - s)};
}

bool cone_contains(const Cone& cone, const SplittingFrame& frame, const Vec& v) {
  if (!(v.norm() > 0.0)) throw Error("cone_contains: zero vector");
  const auto c = decompose(frame, v);
  const double ncs = c.cs.norm(), ncu = c.cu.norm();
  const double on = cone.kind == ConeKind::center_unstable ? ncu : ncs;
  const double off = cone.kind == ConeKind::center_unstable ? ncs : ncu;
  // relative slack admits boundary vectors up to rounding
  return off <= cone.aperture * on * (1.0 + 1e-12) + 1e-15 * v.norm();
}

Mat push_subspace(const Mat& jac, const Mat& basis) {
  Mat b = jac * basis;
  orthonormalize(b);
  return b;
}

ApertureResult image_aperture_of(const Mat& jac, const Cone& cone, const SplittingFrame& source,
                                 const SplittingFrame& target, int samples) {
  const auto src = sides(source, cone.kind);
  const auto dst = sides(target, cone.kind);
  const int n = static_cast<int>(jac.rows());
  const int kc = static_cast<int>(src.center->cols());
  const int ko = static_cast<int>(src.off->cols());
  if (ko == 0) return {0.0, 0.0};
  const double a = cone.aperture;
  // coefficients of the image in the target (off, center) basis
  Mat t(n, n);
  t.leftCols(ko) = *dst.off;
  t.rightCols(kc) = *dst.center;
  Mat in(n, n);
  in.leftCols(ko) = a * (*src.off);
  in.rightCols(kc) = *src.center;
  const Mat b = t.partialPivLu().solve(jac * in);
  const Mat b_off = b.topRows(ko);
  const Mat b_on = b.bottomRows(kc);

  const int po = sphere_params(ko), pc = sphere_params(kc);
  const int p = po + pc;
  auto ratio_at = [&](const std::vector<double>& u) {
    Vec w(n);
    w.head(ko) = sphere_point(ko, u.data());
    w.tail(kc) = sphere_point(kc, u.data() + po);
    const double on = (b_on * w).norm();
    const double off = (b_off * w).norm();
    return on > 0.0 ? off / on : std::numeric_limits<double>::infinity();
  };
  samples = std::max(samples, 1000);
  std::vector<double> u(p), best_u(p);
  double best = -1.0;
  for (int i = 0; i < samples; ++i) {
    for (int j = 0; j < p; ++j) u[j] = radical_inverse(static_cast<std::uint64_t>(i + 1), kPrimes[j % 16]);
    const double r = ratio_at(u);
    if (r > best) {
      best = r;
      best_u = u;
    }
  }
  // coordinate hill climb around the best sample
  double step = 1.0 / std::sqrt(static_cast<double>(samples));
  u = best_u;
  while (step > 1e-12) {
    bool improved = false;
    for (int j = 0; j < p; ++j) {
      for (double sgn : {1.0, -1.0}) {
        std::vector<double> trial = u;
        trial[j] += sgn * step;
        trial[j] -= std::floor(trial[j]);
        const double r = ratio_at(trial);
        if (r > best) {
          best = r;
          u = trial;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return {best * a, best};
}

ApertureResult image_aperture(const MapView& view, const TorusPoint& x, const Cone& cone,
                              const SplittingFrame& source, const SplittingFrame& target, int samples) {
  const Mat jac = cone.kind == ConeKind::center_unstable ? view.jacobian(x) : view.jacobian_back(x);
  return image_aperture_of(jac, cone, source, target, samples);
}

SplittingFrame estimate_invariant_splitting(const MapView& view, const TorusPoint& x, int k, int cu_dim) {
  if (k < 1) throw Error("estimate_invariant_splitting: k must be >= 1");
  const int n = view.dim();
  const int u = cu_dim < 0 ? view.cu_dim() : cu_dim;
  const int s = n - u;
  if (u < 0 || s < 0) throw Error("estimate_invariant_splitting: bad bundle dimension");
  SplittingFrame out;
  out.point = x;
  auto iterate = [&](int dim, bool unstable, double& conv) -> Mat {
    if (dim == 0) return Mat(n, 0);
    std::vector<TorusPoint> pts{x};
    for (int j = 0; j < k; ++j) pts.push_back(unstable ? view.step_back(pts.back()) : view.step(pts.back()));
    const Mat seed = generic_frame(n, dim, unstable ? 1 : 2);
    Mat g = seed, h;
    Mat jac;
    for (int j = k; j >= 1; --j) {
      if (j == k - 1) h = seed;
      if (unstable) {
        // pts[j] maps to pts[j-1] under the view
        view.step(pts[j], jac);
        g = jac * g;
        if (j <= k - 1) h = jac * h;
      } else {
        // pts[j-1] maps to pts[j]; pull back with the inverse derivative
        view.step(pts[j - 1], jac);
        const auto lu = jac.partialPivLu();
        g = lu.solve(g);
        if (j <= k - 1) h = lu.solve(h);
      }
      if (!g.allFinite()) throw Error("estimate_invariant_splitting: non-finite frame");
      orthonormalize(g);
      if (j <= k - 1) orthonormalize(h);
    }
    conv = (k >= 2 && dim < n) ? subspace_angle(g, h) : 0.0;
    return g;
  };
  double c1 = 0.0, c2 = 0.0;
  out.cu = iterate(u, true, c1);
  out.cs = iterate(s, false, c2);
  out.convergence = std::max(c1, c2);
  return out;
}

SplittingFrame estimate_invariant_splitting(const DeformedMap& m, const TorusPoint& x, int k) {
  return estimate_invariant_splitting(MapView::forward(m), x, k);
}

SplittingFrame push_frame(const MapView& view, const SplittingFrame& frame) {
  Mat jac;
  SplittingFrame out;
  out.point = view.step(frame.point, jac);
  out.cs = frame.cs.cols() ? push_subspace(jac, frame.cs) : frame.cs;
  out.cu = frame.cu.cols() ? push_subspace(jac, frame.cu) : frame.cu;
  return out;
}

double domination_ratio_of(const Mat& jac, const SplittingFrame& frame) {
  if (frame.cs.cols() == 0 || frame.cu.cols() == 0) return 0.0;
  const double cs = singular_values(jac * frame.cs).max;
  const double cu_min = singular_values(jac * frame.cu).min;
  return cs / cu_min;
}

double domination_ratio(const MapView& view, const SplittingFrame& frame) {
  return domination_ratio_of(view.jacobian(frame.point), frame);
}

Mat random_cone_subspace(const Cone& cone, const SplittingFrame& frame, std::mt19937_64& gen, bool on_boundary) {
  const auto sd = sides(frame, cone.kind);
  const int kc = static_cast<int>(sd.center->cols());
  const int ko = static_cast<int>(sd.off->cols());
  Mat l(ko, kc);
  for (int i = 0; i < ko; ++i)
    for (int j = 0; j < kc; ++j) l(i, j) = normal01(gen);
  if (ko > 0) {
    const double norm = ko >= kc ? singular_values(l).max : singular_values(Mat(l.transpose())).max;
    const double scale = on_boundary ? cone.aperture : cone.aperture * uniform01(gen);
    l *= scale / std::max(norm, 1e-300);
  }
  Mat s = *sd.center + (*sd.off) * l;
  orthonormalize(s);
  return s;
}

CuDisk make_cu_disk(const MapView& view, const TorusPoint& center, double radius, int frame_iterations) {
  if (!(radius >= 0.0)) throw Error("make_cu_disk: radius must be non-negative");
  CuDisk d;
  d.center = center;
  d.radius = radius;
  d.basis = estimate_invariant_splitting(view, center, frame_iterations).cu;
  return d;
}

double plane_aperture(const SplittingFrame& frame, const Mat& plane, ConeKind kind) {
  const auto sd = sides(frame, kind);
  const int n = static_cast<int>(frame.cs.rows());
  const int kc = static_cast<int>(sd.center->cols());
  const int ko = static_cast<int>(sd.off->cols());
  const double inf = std::numeric_limits<double>::infinity();
  if (plane.rows() != n || plane.cols() != kc) throw Error("plane_aperture: dimension mismatch");
  if (ko == 0) return 0.0;
  // coefficients in the (center, off) basis; the plane is the graph of
  // off = G * center and its aperture is ||G||
  Mat t(n, n);
  t.leftCols(kc) = *sd.center;
  t.rightCols(ko) = *sd.off;
  const Mat c = t.partialPivLu().solve(plane);
  const Mat on = c.topRows(kc);
  if (Eigen::JacobiSVD<Mat>(on).singularValues()(kc - 1) < 1e-12) return inf;
  const Mat g = c.bottomRows(ko) * on.inverse();
  return g.rows() >= g.cols() ? singular_values(g).max : singular_values(Mat(g.transpose())).max;
}

bool disk_in_cu_cone(const MapView& view, const CuDisk& disk, double aperture, int frame_iterations) {
  const SplittingFrame f = estimate_invariant_splitting(view, disk.center, frame_iterations);
  if (disk.basis.rows() != f.cu.rows() || disk.basis.cols() != f.cu.cols()) return false;
  return plane_aperture(f, disk.basis, ConeKind::center_unstable) <= aperture;
}

Vec uniform_ball(int d, std::mt19937_64& gen) {
  Vec v(d);
  if (d == 0) return v;
  for (int i = 0; i < d; ++i) v(i) = normal01(gen);
  const double nv = v.norm();
  if (nv == 0.0) return Vec::Zero(d);
  return v * (std::pow(uniform01(gen), 1.0 / d) / nv);
}

TorusPoint disk_point(const CuDisk& disk, const Vec& xi) { return wrap(disk.center.coords() + disk.basis * xi); }

}  // namespace dalab
