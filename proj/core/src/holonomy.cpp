#include "dalab/holonomy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "dalab/parallel.hpp"
#include "dalab/rng.hpp"
#include "dalab/stats.hpp"

namespace dalab {

namespace {

Vec clamp_box(const Vec& xi, double r) {
  Vec c = xi;
  for (int i = 0; i < c.size(); ++i) c(i) = std::clamp(c(i), -r, r);
  return c;
}

double sup(const Vec& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

Mat orthonormal(Mat b) {
  orthonormalize(b);
  return b;
}

// Smallest principal angle between two subspaces of complementary dimension.
double min_principal_angle(const Mat& a, const Mat& b) {
  const Mat qa = orthonormal(a);
  const Mat qb = orthonormal(b);
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(Eigen::MatrixXd(qa.transpose() * qb));
  const double c = std::min(1.0, svd.singularValues().size() ? svd.singularValues()(0) : 0.0);
  return std::acos(c);
}

}  // namespace

ContractionOptions coarse_chain_options() {
  ContractionOptions o;
  o.graph.grid = 9;
  o.graph.refine = false;
  return o;
}

std::size_t HolonomyPair::matched_count() const {
  std::size_t c = 0;
  for (const auto& mt : matches) c += mt.matched ? 1 : 0;
  return c;
}

double HolonomyPair::match_fraction() const {
  return matches.empty() ? 0.0 : static_cast<double>(matched_count()) / static_cast<double>(matches.size());
}

std::vector<Vec> grid_source(const CuDisk& source, double spacing) {
  if (!(spacing > 0.0)) throw Error("grid_source: spacing must be positive");
  const int u = static_cast<int>(source.basis.cols());
  if (u < 1 || u > 2) throw Error("grid_source: disk dimension must be 1 or 2");
  const int k = static_cast<int>(std::floor(source.radius / spacing));
  std::vector<Vec> out;
  for (int i = -k; i <= k; ++i) {
    if (u == 1) {
      out.push_back(Vec::Constant(1, i * spacing));
      continue;
    }
    for (int j = -k; j <= k; ++j) {
      Vec v(2);
      v << i * spacing, j * spacing;
      if (v.norm() <= source.radius) out.push_back(v);
    }
  }
  return out;
}

HolonomyPair stable_holonomy(const DeformedMap& m, const CuDisk& source, const std::vector<Vec>& source_params,
                             const CuDisk& target, const HolonomyOptions& opt) {
  const int n = m.dim();
  const int u = m.base().unstable_dim();
  if (source.basis.cols() != u || target.basis.cols() != u)
    throw Error("stable_holonomy: disks must have the dimension of the unstable bundle");
  HolonomyPair pair;
  pair.source = source;
  pair.target = target;
  pair.matches.resize(source_params.size());
  StableManifoldOptions so;
  so.graph.grid = opt.patch_grid;
  so.graph.refine = opt.patch_refine;
  so.frame_iterations = opt.frame_iterations;
  parallel_for(source_params.size(), opt.threads, [&](std::size_t i) {
    HolonomyMatch& mt = pair.matches[i];
    mt.index = i;
    mt.source_param = source_params[i];
    mt.x = disk_point(source, source_params[i]);
    const GraphPatch patch = local_stable_manifold(m, mt.x, opt.patch_radius, opt.hadamard_steps, so);
    const int s = patch.graph.domain_dim;
    const Mat& dom = patch.domain_basis();
    const Mat& val = patch.value_basis();
    const Vec x = mt.x.coords();
    const Vec c = nearest_lift(target.center.coords(), x);
    // F(xi, eta) = x + dom xi + val h(xi) - c - B eta
    Vec z = Vec::Zero(n);
    auto residual = [&](const Vec& zz) {
      const Vec xi = clamp_box(zz.head(s), patch.radius());
      return Vec(x + dom * zz.head(s) + val * patch.graph.value_at(xi) - c - target.basis * zz.tail(u));
    };
    auto jac = [&](const Vec& zz) {
      const Vec xi = clamp_box(zz.head(s), patch.radius());
      Mat j(n, n);
      j.leftCols(s) = dom + val * patch.graph.slope_at(xi);
      j.rightCols(u) = -target.basis;
      return j;
    };
    Vec f = residual(z);
    for (int it = 0; it < opt.max_newton && f.norm() > 1e-15; ++it) {
      const Vec step = jac(z).partialPivLu().solve(f);
      z -= step;
      f = residual(z);
      if (step.norm() <= 1e-16) break;
    }
    const Vec xi = z.head(s);
    const Vec eta = z.tail(u);
    mt.residual = f.norm();
    mt.stable_param = xi;
    mt.target_param = eta;
    if (!(sup(xi) <= patch.radius()) || !(eta.norm() <= target.radius) || !(mt.residual <= 1e-10)) return;
    const Mat tangent = dom + val * patch.graph.slope_at(xi);
    mt.angle = min_principal_angle(tangent, target.basis);
    if (mt.angle < opt.angle_guard)
      throw Error("stable_holonomy: stable patch is tangent to the target disk (angle " + std::to_string(mt.angle) + ")");
    if (opt.polish_steps > 0) {
      const Vec polished = polish_on_stable_leaf(m, mt.x, target, eta, opt.polish_steps, opt.frame_iterations);
      mt.polish_shift = (polished - eta).norm();
      mt.target_param = polished;
      if (!(polished.norm() <= target.radius)) return;
    }
    mt.image = wrap(c + target.basis * mt.target_param);
    // Simpson along the straight path in patch coordinates
    constexpr int kPanels = 16;
    double arc = 0.0;
    for (int k = 0; k <= kPanels; ++k) {
      const double t = static_cast<double>(k) / kPanels;
      const double w = (k == 0 || k == kPanels) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      arc += w * ((dom + val * patch.graph.slope_at(t * xi)) * xi).norm();
    }
    mt.stable_arc = arc / (3.0 * kPanels);
    Vec e = c + target.basis * mt.target_param - x;
    const double d0 = e.norm();
    if (opt.shooting_steps > 0 && d0 > 0.0) {
      TorusPoint p = mt.x;
      for (int k = 0; k < opt.shooting_steps; ++k) {
        e = m.image_separation(p, e);
        p = m.apply(p);
      }
      mt.contraction = std::pow(e.norm() / d0, 1.0 / opt.shooting_steps);
      if (!(mt.contraction < 1.0)) return;
    }
    mt.matched = true;
  });
  return pair;
}

Vec polish_on_stable_leaf(const DeformedMap& m, const TorusPoint& x, const CuDisk& target, const Vec& eta0, int steps,
                          int frame_iterations) {
  const MapView fwd = MapView::forward(m);
  const int u = static_cast<int>(target.basis.cols());
  const Vec c = nearest_lift(target.center.coords(), x.coords());
  std::vector<TorusPoint> xs{x};
  std::vector<Mat> proj;  // cu rows of [cs cu]^{-1} at x_k
  for (int k = 1; k <= steps; ++k) {
    xs.push_back(m.apply(xs.back()));
    const SplittingFrame f = estimate_invariant_splitting(fwd, xs.back(), frame_iterations);
    Mat t(m.dim(), m.dim());
    t.leftCols(f.cs.cols()) = f.cs;
    t.rightCols(u) = f.cu;
    proj.push_back(t.inverse().bottomRows(u));
  }
  Vec eta = eta0;
  for (int k = 1; k <= steps; ++k) {
    for (int it = 0; it < 30; ++it) {
      Vec e = c + target.basis * eta - x.coords();
      Mat d = target.basis;
      for (int j = 0; j < k; ++j) {
        const TorusPoint y = wrap(xs[static_cast<std::size_t>(j)].coords() + e);
        d = m.jacobian(y) * d;
        e = m.image_separation(xs[static_cast<std::size_t>(j)], e);
      }
      const Mat& p = proj[static_cast<std::size_t>(k - 1)];
      const Vec step = (p * d).partialPivLu().solve(p * e);
      eta -= step;
      if (step.norm() <= 1e-15 * std::max(1.0, eta.norm())) break;
    }
  }
  return eta;
}

double hull_area(std::vector<std::pair<double, double>> pts) {
  if (pts.size() < 3) return 0.0;
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return 0.0;
  auto cross = [](const std::pair<double, double>& o, const std::pair<double, double>& a,
                  const std::pair<double, double>& b) {
    return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
  };
  std::vector<std::pair<double, double>> h(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0.0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i - 1]) <= 0.0) --k;
    h[k++] = pts[i - 1];
  }
  h.resize(k - 1);
  double a = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto& p = h[i];
    const auto& q = h[(i + 1) % h.size()];
    a += p.first * q.second - q.first * p.second;
  }
  return 0.5 * std::abs(a);
}

MeasureRatio holonomy_measure_ratio(const HolonomyPair& pair, double r, int count, std::uint64_t seed,
                                    int min_points) {
  if (!(r > 0.0)) throw Error("holonomy_measure_ratio: r must be positive");
  const int u = static_cast<int>(pair.source.basis.cols());
  if (u < 1 || u > 2) throw Error("holonomy_measure_ratio: disk dimension must be 1 or 2");
  if (!(r < pair.source.radius)) throw Error("holonomy_measure_ratio: r must be below the source radius");
  MeasureRatio out;
  for (int i = 0; i < count; ++i) {
    auto gen = stream(seed, static_cast<std::uint64_t>(i), 31);
    const Vec center = (pair.source.radius - r) * uniform_ball(u, gen);
    std::vector<std::pair<double, double>> src, dst;
    double lo_s = std::numeric_limits<double>::infinity(), hi_s = -lo_s, lo_t = lo_s, hi_t = -lo_s;
    for (const auto& mt : pair.matches) {
      if (!mt.matched || (mt.source_param - center).norm() > r) continue;
      if (u == 2) {
        src.emplace_back(mt.source_param(0), mt.source_param(1));
        dst.emplace_back(mt.target_param(0), mt.target_param(1));
      } else {
        src.emplace_back(mt.source_param(0), 0.0);
        lo_s = std::min(lo_s, mt.source_param(0));
        hi_s = std::max(hi_s, mt.source_param(0));
        lo_t = std::min(lo_t, mt.target_param(0));
        hi_t = std::max(hi_t, mt.target_param(0));
      }
    }
    if (static_cast<int>(src.size()) < min_points) {
      ++out.skipped;
      continue;
    }
    const double a = u == 2 ? hull_area(src) : hi_s - lo_s;
    const double b = u == 2 ? hull_area(dst) : hi_t - lo_t;
    if (!(a > 0.0)) {
      ++out.skipped;
      continue;
    }
    out.ratios.push_back(b / a);
    out.centers.push_back(center);
    out.max_ratio = std::max(out.max_ratio, b / a);
  }
  return out;
}

double log_restricted_jacobian(const Mat& jac, const Mat& a) { return singular_values(jac * a).log_volume; }

DistortionRecord distortion_ratio(const DeformedMap& m, const TorusPoint& x, const Vec& y_offset, const Mat& a1,
                                  const Mat& a2, int n_max, const DistortionOptions& opt) {
  if (n_max < 1) throw Error("distortion_ratio: n_max must be >= 1");
  if (a1.rows() != m.dim() || a2.rows() != m.dim() || a1.cols() != a2.cols())
    throw Error("distortion_ratio: subspaces have mismatched shapes");
  const MapView fwd = MapView::forward(m);
  DistortionRecord rec;
  std::vector<TorusPoint> xs, ys;
  if (y_offset.norm() == 0.0) {
    TorusPoint p = x;
    for (int k = 0; k <= n_max; ++k) {
      xs.push_back(p);
      p = m.apply(p);
    }
    ys = xs;
  } else {
    const SplittingFrame f = estimate_invariant_splitting(fwd, x, opt.chain.frame_iterations);
    const StableChain chain = stable_chain(fwd, x, f, n_max, opt.patch_radius, opt.chain);
    const auto path = chain.follow(y_offset);
    xs = chain.points;
    for (int k = 0; k <= n_max; ++k)
      ys.push_back(wrap(xs[static_cast<std::size_t>(k)].coords() + path[static_cast<std::size_t>(k)]));
  }
  Mat s1 = orthonormal(a1);
  Mat s2 = orthonormal(a2);
  const Mat f1 = s1, f2 = s2;
  CompensatedSum jx, jy;
  for (int k = 0; k < n_max; ++k) {
    const Mat dx = m.jacobian(xs[static_cast<std::size_t>(k)]);
    const Mat dy = m.jacobian(ys[static_cast<std::size_t>(k)]);
    const double lx = log_restricted_jacobian(dx, opt.mode == SubspaceMode::pushed ? s1 : f1);
    const double ly = log_restricted_jacobian(dy, opt.mode == SubspaceMode::pushed ? s2 : f2);
    if (!std::isfinite(lx) || !std::isfinite(ly)) {
      rec.truncated = true;
      break;
    }
    jx.add(lx);
    jy.add(ly);
    if (opt.mode == SubspaceMode::pushed) {
      s1 = push_subspace(dx, s1);
      s2 = push_subspace(dy, s2);
    }
    rec.n.push_back(k + 1);
    rec.gap.push_back(std::abs(jx.value() - jy.value()));
  }
  rec.safe_n = rec.n.empty() ? 0 : rec.n.back();
  if (rec.n.size() >= 2) {
    const std::vector<double> nx(rec.n.begin(), rec.n.end());
    const LinearFit fit = fit_line(nx, rec.gap);
    rec.slope = fit.slope;
    rec.slope_se = fit.slope_se;
  }
  return rec;
}

HolderFit angle_holder_fit(const DeformedMap& m, const std::vector<StablePairSample>& pairs, int n,
                           const ContractionOptions& chain_opt) {
  if (n < 3) throw Error("angle_holder_fit: n must be >= 3");
  const MapView fwd = MapView::forward(m);
  constexpr double kFloor = 1e-12;
  HolderFit fit;
  std::vector<double> thetas, dom_logs;
  std::vector<double> tail_logd, tail_loga;
  struct Track {
    std::vector<double> angle, dist;
  };
  std::vector<Track> tracks;
  for (const auto& pr : pairs) {
    const SplittingFrame f = estimate_invariant_splitting(fwd, pr.x, chain_opt.frame_iterations);
    std::vector<TorusPoint> xs, ys;
    std::vector<SplittingFrame> frames;
    std::vector<double> dist;
    if (pr.y_offset.norm() == 0.0) {
      TorusPoint p = pr.x;
      for (int k = 0; k <= n; ++k) {
        xs.push_back(p);
        frames.push_back(k == 0 ? f : estimate_invariant_splitting(fwd, p, chain_opt.frame_iterations));
        dist.push_back(0.0);
        p = m.apply(p);
      }
      ys = xs;
    } else {
      const StableChain chain = stable_chain(fwd, pr.x, f, n, std::max(2.0 * sup(pr.y_offset), 1e-6), chain_opt);
      const auto path = chain.follow(pr.y_offset);
      xs = chain.points;
      frames = chain.frames;
      for (int k = 0; k <= n; ++k) {
        ys.push_back(wrap(xs[static_cast<std::size_t>(k)].coords() + path[static_cast<std::size_t>(k)]));
        dist.push_back(path[static_cast<std::size_t>(k)].norm());
      }
    }
    // theta: S1 and S2 both pushed along the orbit of x
    Mat a = orthonormal(pr.s1), b = orthonormal(pr.s2), c = orthonormal(pr.s2);
    Track tr;
    std::vector<double> ks, ls;
    for (int k = 0; k <= n; ++k) {
      const double same = subspace_angle(a, c);
      if (same > kFloor) {
        ks.push_back(k);
        ls.push_back(std::log(same));
      }
      tr.angle.push_back(subspace_angle(a, b));
      tr.dist.push_back(dist[static_cast<std::size_t>(k)]);
      if (k == n) break;
      const Mat dx = m.jacobian(xs[static_cast<std::size_t>(k)]);
      const Mat dy = m.jacobian(ys[static_cast<std::size_t>(k)]);
      dom_logs.push_back(std::log(domination_ratio_of(dx, frames[static_cast<std::size_t>(k)])));
      a = push_subspace(dx, a);
      b = push_subspace(dy, b);
      c = push_subspace(dx, c);
    }
    if (ks.size() >= 3) {
      thetas.push_back(std::exp(fit_line(ks, ls).slope));
      tracks.push_back(std::move(tr));
    }
  }
  fit.pairs = static_cast<int>(tracks.size());
  if (fit.pairs < 10) throw Error("angle_holder_fit: fewer than 10 usable pairs");
  fit.theta = *std::max_element(thetas.begin(), thetas.end());
  fit.lambda_dom = std::exp(mean(dom_logs));
  // tail: steps where the theta term is negligible against the observed angle
  for (const auto& tr : tracks) {
    const double a0 = std::max(tr.angle.front(), kFloor);
    for (std::size_t k = 1; k < tr.angle.size(); ++k) {
      const double transient = a0 * std::pow(fit.theta, static_cast<double>(k));
      if (tr.dist[k] > 0.0 && tr.angle[k] > kFloor && transient < 0.01 * tr.angle[k]) {
        tail_logd.push_back(std::log(tr.dist[k]));
        tail_loga.push_back(std::log(tr.angle[k]));
      }
    }
  }
  fit.alpha = 1.0;
  if (tail_logd.size() >= 3) fit.alpha = std::clamp(fit_line(tail_logd, tail_loga).slope, 1e-3, 1.0);
  for (const auto& tr : tracks)
    for (std::size_t k = 0; k < tr.angle.size(); ++k) {
      const double model = std::pow(fit.theta, static_cast<double>(k)) + std::pow(tr.dist[k], fit.alpha);
      if (tr.angle[k] > kFloor) fit.constant = std::max(fit.constant, tr.angle[k] / model);
    }
  return fit;
}

double subdisk_radius_schedule(double lambda_bar, double theta, double alpha, double gamma, double delta, int n) {
  const double k = static_cast<double>(n);
  return std::min({std::pow(lambda_bar / theta, k), std::pow(lambda_bar, k * (1.0 - alpha)), std::pow(gamma, k) * delta});
}

void write_holonomy_csv(std::ostream& os, const HolonomyPair& p) {
  const int u = static_cast<int>(p.source.basis.cols());
  os << "index,matched";
  for (int i = 0; i < u; ++i) os << ",source_" << i;
  for (int i = 0; i < u; ++i) os << ",target_" << i;
  os << ",stable_arc,angle,residual,contraction\n";
  char buf[64];
  for (const auto& mt : p.matches) {
    os << mt.index << "," << (mt.matched ? 1 : 0);
    for (int i = 0; i < u; ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", mt.source_param(i));
      os << buf;
    }
    for (int i = 0; i < u; ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", mt.matched ? mt.target_param(i) : std::nan(""));
      os << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g", mt.stable_arc);
    os << buf;
    std::snprintf(buf, sizeof buf, ",%.17g", mt.angle);
    os << buf;
    std::snprintf(buf, sizeof buf, ",%.17g", mt.residual);
    os << buf;
    std::snprintf(buf, sizeof buf, ",%.17g\n", mt.contraction);
    os << buf;
  }
}

void write_distortion_csv(std::ostream& os, const DistortionRecord& r) {
  os << "n,gap\n";
  char buf[64];
  for (std::size_t i = 0; i < r.n.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%d,%.17g\n", r.n[i], r.gap[i]);
    os << buf;
  }
}

}  // namespace dalab
