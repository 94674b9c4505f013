#include "dalab/torus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <Eigen/Eigenvalues>

namespace dalab {

namespace {

double wrap_coord(double v) {
  double r = v - std::floor(v);
  if (r >= 1.0) r = 0.0;  // -tiny rounds up to 1
  return r;
}

// Quintic smoothstep bump: 1 on [0,1/2], 0 on [1,inf), C^2.
struct Bump {
  double v, d1, d2;
};
Bump bump(double s) {
  if (s <= 0.5) return {1.0, 0.0, 0.0};
  if (s >= 1.0) return {0.0, 0.0, 0.0};
  const double t = 2.0 * s - 1.0;
  const double t2 = t * t, t3 = t2 * t;
  const double v = 1.0 - (6.0 * t3 * t2 - 15.0 * t2 * t2 + 10.0 * t3);
  const double d1 = -2.0 * (30.0 * t2 * t2 - 60.0 * t3 + 30.0 * t2);
  const double d2 = -4.0 * (120.0 * t3 - 180.0 * t2 + 60.0 * t);
  return {v, d1, d2};
}

Mat to_double(const IntMatrix& rows) {
  const int n = static_cast<int>(rows.size());
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = static_cast<double>(rows[i][j]);
  return a;
}

}  // namespace

TorusPoint wrap(const Vec& v) {
  if (v.size() > kMaxDim) throw Error("wrap: dimension exceeds supported maximum");
  if (!v.allFinite()) throw Error("wrap: non-finite coordinate");
  Vec c(v.size());
  for (int i = 0; i < v.size(); ++i) c(i) = wrap_coord(v(i));
  return TorusPoint::from_wrapped(c);
}

TorusPoint wrap(std::initializer_list<double> v) {
  Vec c(static_cast<int>(v.size()));
  int i = 0;
  for (double x : v) c(i++) = x;
  return wrap(c);
}

Vec centered_difference(const Vec& x, const Vec& y) {
  Vec d = x - y;
  for (int i = 0; i < d.size(); ++i) d(i) -= std::round(d(i));
  return d;
}

double torus_distance(const TorusPoint& x, const TorusPoint& y) {
  if (x.dim() != y.dim()) throw Error("torus_distance: dimension mismatch");
  return centered_difference(x.coords(), y.coords()).norm();
}

Vec nearest_lift(const Vec& v, const Vec& near) { return near + centered_difference(v, near); }

// ---------------------------------------------------------------------------

LinearToralMap::LinearToralMap(IntMatrix rows) : rows_(std::move(rows)) { init(-1); }

LinearToralMap::LinearToralMap(IntMatrix rows, int forced_stable_dim) : rows_(std::move(rows)) {
  init(forced_stable_dim);
}

LinearToralMap LinearToralMap::diagnostic(IntMatrix rows, int stable_dim) {
  if (stable_dim < 0 || stable_dim > static_cast<int>(rows.size()))
    throw Error("LinearToralMap: stable dimension out of range");
  return LinearToralMap(std::move(rows), stable_dim);
}

void LinearToralMap::init(int forced) {
  n_ = static_cast<int>(rows_.size());
  if (n_ < 1 || n_ > kMaxDim) throw Error("LinearToralMap: dimension must be in [1, 8]");
  for (const auto& r : rows_)
    if (static_cast<int>(r.size()) != n_) throw Error("LinearToralMap: matrix must be square");
  a_ = to_double(rows_);
  const double det = a_.determinant();
  if (std::abs(std::abs(det) - 1.0) > 1e-9) throw Error("LinearToralMap: |det| must be 1");
  Mat inv = a_.inverse();
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) inv(i, j) = std::round(inv(i, j));
  if (((a_ * inv) - Mat::Identity(n_, n_)).cwiseAbs().maxCoeff() != 0.0)
    throw Error("LinearToralMap: inverse is not integral");
  ainv_ = inv;

  Eigen::EigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(a_), true);
  const auto vals = es.eigenvalues();
  const auto vecs = es.eigenvectors();
  std::vector<int> order(n_);
  for (int i = 0; i < n_; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    const double mi = std::abs(vals(i)), mj = std::abs(vals(j));
    if (mi != mj) return mi < mj;
    return vals(i).imag() < vals(j).imag();
  });
  real_ = true;
  std::vector<Vec> stable, unstable;
  int rank = 0;
  for (int idx : order) {
    const auto lam = vals(idx);
    eig_.push_back(lam);
    const double mod = std::abs(lam);
    if (forced < 0 && std::abs(mod - 1.0) < 1e-9)
      throw Error("LinearToralMap: eigenvalue on the unit circle (not Anosov)");
    const bool is_stable = forced < 0 ? mod < 1.0 : rank++ < forced;
    Vec re(n_), im(n_);
    for (int i = 0; i < n_; ++i) {
      re(i) = vecs(i, idx).real();
      im(i) = vecs(i, idx).imag();
    }
    auto& bucket = is_stable ? stable : unstable;
    if (std::abs(lam.imag()) > 1e-12) {
      real_ = false;
      if (lam.imag() > 0) {
        bucket.push_back(re);
        bucket.push_back(im);
      }
    } else {
      // fix the sign so the largest component is positive
      int k = 0;
      re.cwiseAbs().maxCoeff(&k);
      if (re(k) < 0) re = -re;
      re.normalize();
      bucket.push_back(re);
      dirs_.push_back({lam.real(), re});
    }
  }
  if (!real_) dirs_.clear();
  if (forced < 0 && (stable.empty() || unstable.empty()))
    throw Error("LinearToralMap: needs both stable and unstable directions");
  auto stack = [&](const std::vector<Vec>& vs) {
    Mat b(n_, static_cast<int>(vs.size()));
    for (std::size_t j = 0; j < vs.size(); ++j) b.col(static_cast<int>(j)) = vs[j];
    if (b.cols() > 0) orthonormalize(b);
    return b;
  };
  es_ = stack(stable);
  eu_ = stack(unstable);
  // consistency of eigen data with the matrix
  for (const auto& d : dirs_)
    if ((a_ * d.vector - d.value * d.vector).norm() > 1e-10 * std::max(1.0, std::abs(d.value)))
      throw Error("LinearToralMap: inconsistent eigen data");
}

std::vector<TorusPoint> LinearToralMap::fixed_points(std::size_t limit) const {
  // Solutions of (A - I) x in Z^n, represented as (A - I)^{-1} k mod 1.
  const Mat b = a_ - Mat::Identity(n_, n_);
  const Mat binv = b.inverse();
  const long long d = std::llround(std::abs(b.determinant()));
  if (d <= 0) throw Error("fixed_points: A - I is singular");
  std::set<std::vector<long long>> seen;
  std::vector<TorusPoint> out;
  std::vector<long long> k(n_, 0);
  const long long scale = d;
  // D Z^n is contained in (A-I) Z^n, so k in [0, d)^n covers every class.
  for (;;) {
    Vec kv(n_);
    for (int i = 0; i < n_; ++i) kv(i) = static_cast<double>(k[i]);
    const TorusPoint x = wrap(binv * kv);
    std::vector<long long> key(n_);
    for (int i = 0; i < n_; ++i) key[i] = std::llround(x[i] * static_cast<double>(scale)) % scale;
    if (seen.insert(key).second) {
      Vec c(n_);
      for (int i = 0; i < n_; ++i) c(i) = static_cast<double>(key[i]) / static_cast<double>(scale);
      out.push_back(TorusPoint::from_wrapped(c));
      if (out.size() >= limit || out.size() >= static_cast<std::size_t>(d)) break;
    }
    int i = 0;
    while (i < n_ && ++k[i] == d) k[i++] = 0;
    if (i == n_) break;
  }
  std::sort(out.begin(), out.end(), [](const TorusPoint& x, const TorusPoint& y) {
    return std::lexicographical_compare(x.coords().data(), x.coords().data() + x.dim(), y.coords().data(),
                                        y.coords().data() + y.dim());
  });
  return out;
}

IntMatrix default_matrix(int n) {
  if (n < 2 || n % 2 != 0 || n > kMaxDim) throw Error("default_matrix: n must be even, 2 <= n <= 8");
  const int m = n / 2;
  IntMatrix a(n, std::vector<long long>(n, 0));
  for (int b = 0; b < m; ++b) {
    // C^p = [[F(2p+1), F(2p)], [F(2p), F(2p-1)]] with Fibonacci F
    const int p = m - b;
    long long f[20] = {0, 1};
    for (int i = 2; i < 20; ++i) f[i] = f[i - 1] + f[i - 2];
    const int o = 2 * b;
    a[o][o] = f[2 * p + 1];
    a[o][o + 1] = f[2 * p];
    a[o + 1][o] = f[2 * p];
    a[o + 1][o + 1] = f[2 * p - 1];
  }
  return a;
}

std::string to_string(SiteMode m) {
  switch (m) {
    case SiteMode::flip: return "flip";
    case SiteMode::mix: return "mix";
    case SiteMode::unstable_flip: return "unstable_flip";
  }
  return "flip";
}

SiteMode site_mode_from_string(const std::string& s) {
  if (s == "flip") return SiteMode::flip;
  if (s == "mix") return SiteMode::mix;
  if (s == "unstable_flip") return SiteMode::unstable_flip;
  throw Error("unknown site mode '" + s + "'");
}

// ---------------------------------------------------------------------------

DeformedMap::DeformedMap(LinearToralMap base, std::vector<DeformationSite> sites, MapOptions options,
                         std::optional<TorusPoint> q)
    : base_(std::move(base)), sites_(std::move(sites)), opt_(options) {
  const int n = base_.dim();
  q_ = q ? *q : TorusPoint::from_wrapped(Vec::Zero(n));
  if (q_.dim() != n) throw Error("DeformedMap: distinguished point has wrong dimension");
  if (!(opt_.integrator_step > 0.0) || opt_.integrator_step > 1.0)
    throw Error("DeformedMap: integrator_step must be in (0, 1]");
  if (!(opt_.delta0 > 0.0)) throw Error("DeformedMap: delta0 must be positive");
  if (!std::isfinite(opt_.dissipation)) throw Error("DeformedMap: dissipation must be finite");
  steps_ = static_cast<int>(std::ceil(1.0 / opt_.integrator_step - 1e-12));
  const double rmax = opt_.max_radius_fraction * 0.5;
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    auto& s = sites_[i];
    if (s.center.dim() != n) throw Error("DeformedMap: site center has wrong dimension");
    if (!(s.radius > 0.0) || s.radius > rmax) throw Error("DeformedMap: site radius outside (0, " + std::to_string(rmax) + "]");
    if (!(s.strength >= 0.0 && s.strength <= 1.0)) throw Error("DeformedMap: site strength outside [0,1]");
    if (s.plane.rows() != n || s.plane.cols() != 2) throw Error("DeformedMap: site plane must be n x 2");
    if (orthonormality_defect(s.plane) > 1e-14) orthonormalize(s.plane);
    if (torus_distance(base_.apply(s.center), s.center) > 1e-9)
      throw Error("DeformedMap: site center is not a fixed point of the base map");
    if (torus_distance(s.center, q_) <= s.radius) throw Error("DeformedMap: site ball contains the distinguished point");
    for (std::size_t j = 0; j < i; ++j)
      if (torus_distance(s.center, sites_[j].center) <= s.radius + sites_[j].radius)
        throw Error("DeformedMap: site balls overlap");
    SiteData d;
    d.quad = Mat::Zero(2, 2);
    if (s.mode == SiteMode::mix) {
      d.quad(0, 0) = d.quad(1, 1) = s.rate;
    } else {
      d.quad(0, 1) = d.quad(1, 0) = -s.rate;
    }
    Mat j2(2, 2);
    j2 << 0.0, 1.0, -1.0, 0.0;
    d.poisson = s.plane * j2 * s.plane.transpose();
    d.proj = s.plane * s.plane.transpose();
    d.plane_quad = s.plane * d.quad * s.plane.transpose();
    data_.push_back(d);
  }
}

void DeformedMap::field(int site, const Vec& y, Vec& out, Mat* dx) const {
  const auto& s = sites_[site];
  const auto& d = data_[site];
  const int n = dim();
  const double r = y.norm();
  const double sr = r / s.radius;
  if (sr >= 1.0 || s.strength == 0.0) {
    out = Vec::Zero(n);
    if (dx) *dx = Mat::Zero(n, n);
    return;
  }
  const Bump b = bump(sr);
  const Eigen::Vector2d z = s.plane.transpose() * y;
  // inner-ball shortcut: field is exactly linear there
  double c1 = 0.0, c2 = 0.0;
  if (sr > 0.5) {
    c1 = b.d1 / (s.radius * r);
    c2 = b.d2 / (s.radius * s.radius * r * r) - b.d1 / (s.radius * r * r * r);
  }
  const Eigen::Matrix2d quad = d.quad;
  const Eigen::Vector2d sz = quad * z;
  const double qv = 0.5 * z.dot(sz);
  const Vec g = s.plane * sz;
  Vec grad = c1 * qv * y + b.v * g;
  out = s.strength * (d.poisson * grad);
  const bool dissipative = !opt_.conservative && opt_.dissipation != 0.0;
  Vec gz;
  double qd = 0.0;
  if (dissipative) {
    qd = 0.5 * z.squaredNorm();
    gz = s.plane * z;
    const Vec gradd = c1 * qd * y + b.v * gz;
    out += s.strength * opt_.dissipation * (d.proj * gradd);
  }
  if (!dx) return;
  Mat h = b.v * d.plane_quad;
  if (sr > 0.5) {
    h += c2 * qv * (y * y.transpose());
    h.diagonal().array() += c1 * qv;
    h += c1 * (y * g.transpose() + g * y.transpose());
  }
  *dx = s.strength * (d.poisson * h);
  if (dissipative) {
    Mat hd = b.v * d.proj;
    if (sr > 0.5) {
      hd += c2 * qd * (y * y.transpose());
      hd.diagonal().array() += c1 * qd;
      hd += c1 * (y * gz.transpose() + gz * y.transpose());
    }
    *dx += s.strength * opt_.dissipation * (d.proj * hd);
  }
}

Vec DeformedMap::site_flow(int site, const Vec& d0, double direction, Mat* jac) const {
  const int n = dim();
  const double h = direction / steps_;
  Vec y = d0;
  if (jac) *jac = Mat::Identity(n, n);
  if (sites_[site].strength == 0.0) return y;
  const double tol = 1e-15 * sites_[site].radius;
  Vec x0(n), xm(n);
  Mat dxm(n, n);
  Eigen::PartialPivLU<Mat> lu;
  for (int k = 0; k < steps_; ++k) {
    field(site, y, x0, nullptr);
    Vec y1 = y + h * x0;
    bool converged = false;
    for (int it = 0; it < 60; ++it) {
      const Vec m = 0.5 * (y + y1);
      field(site, m, xm, &dxm);
      const Vec f = y1 - y - h * xm;
      Mat jm = Mat::Identity(n, n) - (0.5 * h) * dxm;
      lu.compute(jm);
      const Vec delta = lu.solve(f);
      y1 -= delta;
      if (delta.norm() <= tol) {
        converged = true;
        break;
      }
    }
    if (!converged) throw Error("site_flow: implicit midpoint solve did not converge");
    if (jac) {
      const Vec m = 0.5 * (y + y1);
      field(site, m, xm, &dxm);
      const Mat minus = Mat::Identity(n, n) - (0.5 * h) * dxm;
      const Mat plus = Mat::Identity(n, n) + (0.5 * h) * dxm;
      lu.compute(minus);
      const Mat stepj = lu.solve(plus);
      *jac = stepj * (*jac);
    }
    y = y1;
  }
  return y;
}

int DeformedMap::site_index(const Vec& x) const {
  for (std::size_t i = 0; i < sites_.size(); ++i) {
    const auto& s = sites_[i];
    const double r2 = s.radius * s.radius;
    double acc = 0.0;
    bool out = false;
    for (int k = 0; k < x.size(); ++k) {
      double v = x(k) - s.center[k];
      v -= std::round(v);
      if (std::abs(v) >= s.radius) {
        out = true;
        break;
      }
      acc += v * v;
    }
    if (!out && acc < r2) return static_cast<int>(i);
  }
  return -1;
}

double DeformedMap::perturbation_volume() const {
  double total = 0.0;
  const int n = dim();
  for (const auto& s : sites_) {
    const double unit = std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
    total += unit * std::pow(s.radius, n);
  }
  return total;
}

TorusPoint DeformedMap::apply(const TorusPoint& x) const {
  const int s = site_index(x.coords());
  if (s < 0) return wrap(base_.matrix() * x.coords());
  const Vec& p = sites_[s].center.coords();
  const Vec d = centered_difference(x.coords(), p);
  const Vec d1 = site_flow(s, d, 1.0, nullptr);
  return wrap(base_.matrix() * (p + d1));
}

TorusPoint DeformedMap::apply(const TorusPoint& x, Mat& jac) const {
  const int s = site_index(x.coords());
  if (s < 0) {
    jac = base_.matrix();
    return wrap(base_.matrix() * x.coords());
  }
  const Vec& p = sites_[s].center.coords();
  const Vec d = centered_difference(x.coords(), p);
  Mat dphi;
  const Vec d1 = site_flow(s, d, 1.0, &dphi);
  jac = base_.matrix() * dphi;
  return wrap(base_.matrix() * (p + d1));
}

TorusPoint DeformedMap::apply_inverse(const TorusPoint& y) const {
  const TorusPoint w = wrap(base_.inverse() * y.coords());
  const int s = site_index(w.coords());
  if (s < 0) return w;
  const Vec& p = sites_[s].center.coords();
  const Vec d = centered_difference(w.coords(), p);
  return wrap(p + site_flow(s, d, -1.0, nullptr));
}

TorusPoint DeformedMap::apply_inverse(const TorusPoint& y, Mat& jac) const {
  const TorusPoint w = wrap(base_.inverse() * y.coords());
  const int s = site_index(w.coords());
  if (s < 0) {
    jac = base_.inverse();
    return w;
  }
  const Vec& p = sites_[s].center.coords();
  const Vec d = centered_difference(w.coords(), p);
  Mat dphi;
  const Vec d1 = site_flow(s, d, -1.0, &dphi);
  jac = dphi * base_.inverse();
  return wrap(p + d1);
}

Mat DeformedMap::jacobian(const TorusPoint& x) const {
  Mat j;
  apply(x, j);
  return j;
}

Mat DeformedMap::jacobian_inverse(const TorusPoint& y) const {
  Mat j;
  apply_inverse(y, j);
  return j;
}

Vec DeformedMap::displacement(const Vec& z, bool inverse, int* site_out) const {
  const TorusPoint x = wrap(z);
  const int s = site_index(x.coords());
  if (site_out) *site_out = s;
  if (s < 0) return Vec::Zero(dim());
  const Vec d = centered_difference(x.coords(), sites_[s].center.coords());
  return site_flow(s, d, inverse ? -1.0 : 1.0, nullptr) - d;
}

Vec DeformedMap::apply_lift(const Vec& z) const { return base_.matrix() * (z + displacement(z, false, nullptr)); }

Vec DeformedMap::apply_inverse_lift(const Vec& w) const {
  const Vec u = base_.inverse() * w;
  return u + displacement(u, true, nullptr);
}

Vec DeformedMap::image_separation(const TorusPoint& x, const Vec& e) const {
  const Vec& xc = x.coords();
  const Vec y = xc + e;
  const int sx = site_index(xc);
  const int sy = site_index(wrap(y).coords());
  if (sx < 0 && sy < 0) return base_.matrix() * e;
  if (e.norm() < 1e-6) {
    // midpoint derivative: third-order accurate
    const TorusPoint mid = wrap(xc + 0.5 * e);
    return jacobian(mid) * e;
  }
  return base_.matrix() * (e + displacement(y, false, nullptr) - displacement(xc, false, nullptr));
}

Vec DeformedMap::preimage_separation(const TorusPoint& y, const Vec& e) const {
  const Vec w = base_.inverse() * y.coords();
  const Vec we = base_.inverse() * e;
  const int sw = site_index(wrap(w).coords());
  const int sv = site_index(wrap(w + we).coords());
  if (sw < 0 && sv < 0) return we;
  if (e.norm() < 1e-6) {
    const TorusPoint mid = wrap(y.coords() + 0.5 * e);
    return jacobian_inverse(mid) * e;
  }
  return we + displacement(w + we, true, nullptr) - displacement(w, true, nullptr);
}

// ---------------------------------------------------------------------------

int example_site_count(const LinearToralMap& base) {
  const int s = base.stable_dim();
  const int u = base.unstable_dim();
  return std::max(0, s - 1) + (u >= 2 ? 1 : 0);
}

DeformedMap build_example(const ExampleParams& prm) {
  const IntMatrix rows = prm.matrix ? *prm.matrix : default_matrix(prm.n);
  LinearToralMap base(rows);
  if (base.dim() != prm.n) throw Error("build_example: matrix dimension does not match n");
  if (!(prm.delta > 0.0 && prm.delta <= 0.125)) throw Error("build_example: delta must be in (0, 0.125]");
  if (!(prm.delta0 > 0.0 && prm.delta0 <= 0.5)) throw Error("build_example: delta0 must be in (0, 0.5]");
  const int count = example_site_count(base);
  if (count > 0 && !base.real_spectrum()) throw Error("build_example: sites need a real spectrum");
  std::vector<double> strengths = prm.strengths;
  if (strengths.empty()) strengths.assign(count, 0.0);
  if (strengths.size() == 1) strengths.assign(count, strengths[0]);
  if (static_cast<int>(strengths.size()) != count)
    throw Error("build_example: expected " + std::to_string(count) + " strengths");

  MapOptions opt = prm.options;
  opt.delta0 = prm.delta0;
  const TorusPoint q = TorusPoint::from_wrapped(Vec::Zero(prm.n));
  std::vector<TorusPoint> centers;
  if (count > 0) {
    for (const auto& p : base.fixed_points()) {
      if (torus_distance(p, q) <= prm.delta) continue;
      bool clash = false;
      for (const auto& c : centers) clash = clash || torus_distance(p, c) <= 2 * prm.delta;
      if (!clash) centers.push_back(p);
      if (static_cast<int>(centers.size()) == count) break;
    }
    if (static_cast<int>(centers.size()) < count) throw Error("build_example: not enough separated fixed points");
  }
  const auto& dirs = base.directions();
  const int s = base.stable_dim();
  std::vector<DeformationSite> sites;
  for (int i = 0; i + 1 < s; ++i) {
    DeformationSite site;
    site.center = centers[sites.size()];
    site.radius = prm.delta;
    site.mode = SiteMode::flip;
    site.plane = Mat(prm.n, 2);
    site.plane.col(0) = dirs[i].vector;
    site.plane.col(1) = dirs[i + 1].vector;
    site.rate = std::log((1.0 + prm.delta0) / std::abs(dirs[i + 1].value));
    site.strength = strengths[sites.size()];
    sites.push_back(site);
  }
  if (base.unstable_dim() >= 2) {
    DeformationSite site;
    site.center = centers[sites.size()];
    site.radius = prm.delta;
    site.mode = SiteMode::unstable_flip;
    site.plane = Mat(prm.n, 2);
    site.plane.col(0) = dirs[s].vector;
    site.plane.col(1) = dirs[s + 1].vector;
    site.rate = std::log(std::abs(dirs[s].value) * (1.0 + prm.delta0));
    site.strength = strengths[sites.size()];
    sites.push_back(site);
  }
  return DeformedMap(base, sites, opt, q);
}

DeformedMap build_example(int n, double delta, double delta0, std::vector<double> strengths) {
  ExampleParams p;
  p.n = n;
  p.delta = delta;
  p.delta0 = delta0;
  p.strengths = std::move(strengths);
  return build_example(p);
}

DeformedMap with_scaled_strengths(const DeformedMap& m, double factor) {
  auto sites = m.sites();
  for (auto& s : sites) s.strength = std::clamp(s.strength * factor, 0.0, 1.0);
  return DeformedMap(m.base(), sites, m.options(), m.distinguished_point());
}

DeformedMap with_strengths(const DeformedMap& m, const std::vector<double>& strengths) {
  auto sites = m.sites();
  if (strengths.size() != sites.size() && strengths.size() != 1)
    throw Error("with_strengths: strength count does not match sites");
  for (std::size_t i = 0; i < sites.size(); ++i) sites[i].strength = strengths.size() == 1 ? strengths[0] : strengths[i];
  return DeformedMap(m.base(), sites, m.options(), m.distinguished_point());
}

}  // namespace dalab
