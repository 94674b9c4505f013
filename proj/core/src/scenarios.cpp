#include "dalab/scenarios.hpp"

#include <cmath>

#include "dalab/manifolds.hpp"
#include "dalab/rng.hpp"

namespace dalab {

HolonomySetup holonomy_setup(const DeformedMap& m, const HolonomySetupOptions& opt) {
  const MapView fwd = MapView::forward(m);
  const int n = m.dim();
  HolonomySetup s;
  s.site = opt.site;
  if (s.site < 0) {
    s.site = 0;
    for (std::size_t i = 0; i < m.sites().size(); ++i)
      if (m.sites()[i].mode == SiteMode::unstable_flip) {
        s.site = static_cast<int>(i);
        break;
      }
  }
  Vec c;
  if (m.sites().empty()) {
    c = Vec::Constant(n, 0.25);
  } else {
    if (s.site >= static_cast<int>(m.sites().size())) throw Error("holonomy_setup: site index out of range");
    const auto& st = m.sites()[static_cast<std::size_t>(s.site)];
    // small diagonal shift keeps the anchor off the symmetry lines of the site
    c = st.center.coords() + opt.offset_fraction * st.radius * st.plane.col(0) + 0.002 * Vec::Constant(n, 1.0);
  }
  s.anchor = wrap(c);
  s.source = make_cu_disk(fwd, s.anchor, opt.source_radius);
  const SplittingFrame f = estimate_invariant_splitting(fwd, s.anchor, 30);
  Vec dir = f.cs.rowwise().sum();
  dir.normalize();
  s.target = make_cu_disk(fwd, wrap(c + opt.target_distance * dir), opt.target_radius);
  Mat b = s.target.basis;
  const int u = static_cast<int>(b.cols());
  for (int j = 0; j < u; ++j) b.col(j) += opt.tilt * (1.0 - 0.5 * j) * f.cs.col(j % f.cs.cols());
  orthonormalize(b);
  s.target.basis = b;
  return s;
}

double linear_holonomy_jacobian(const DeformedMap& m, const CuDisk& source, const CuDisk& target) {
  const Mat& es = m.base().stable_basis();
  const int n = m.dim();
  const int u = static_cast<int>(target.basis.cols());
  if (u + es.cols() != n || source.basis.cols() != u)
    throw Error("linear_holonomy_jacobian: disk dimension must equal the unstable dimension");
  Mat sys(n, n);
  sys.leftCols(u) = target.basis;
  sys.rightCols(n - u) = -es;
  const Mat p = sys.inverse() * source.basis;
  return std::abs(p.topRows(u).determinant());
}

std::vector<StablePairSample> stable_pairs(const DeformedMap& m, const TorusPoint& anchor,
                                           const StablePairOptions& opt) {
  if (opt.count < 1 || opt.anchors < 1) throw Error("stable_pairs: count and anchors must be positive");
  const MapView fwd = MapView::forward(m);
  const int n = m.dim();
  std::vector<StablePairSample> out;
  out.reserve(static_cast<std::size_t>(opt.count));
  ContractionOptions chain = coarse_chain_options();
  chain.frame_iterations = opt.frame_iterations;
  for (int a = 0; a < opt.anchors; ++a) {
    auto gen = stream(opt.seed, static_cast<std::uint64_t>(a), 41);
    Vec c = anchor.coords();
    if (a > 0)
      for (int i = 0; i < n; ++i) c(i) += opt.spread * (2.0 * uniform01(gen) - 1.0);
    const TorusPoint x = wrap(c);
    const SplittingFrame fx = estimate_invariant_splitting(fwd, x, opt.frame_iterations);
    const StableChain sc = stable_chain(fwd, x, fx, 1, 4.0 * opt.offset, chain);
    const GraphPatch patch = sc.patch(0);
    const Cone cone_x = make_cone(fx, ConeKind::center_unstable, opt.aperture);
    const int per = opt.count / opt.anchors + (a < opt.count % opt.anchors ? 1 : 0);
    for (int j = 0; j < per; ++j) {
      StablePairSample s;
      s.x = x;
      Vec xi = uniform_ball(patch.graph.domain_dim, gen);
      xi *= opt.offset / xi.norm();
      s.y_offset = patch.offset(xi);
      const TorusPoint y = wrap(c + s.y_offset);
      const SplittingFrame fy = estimate_invariant_splitting(fwd, y, opt.frame_iterations);
      s.s1 = random_cone_subspace(cone_x, fx, gen);
      s.s2 = random_cone_subspace(make_cone(fy, ConeKind::center_unstable, opt.aperture), fy, gen);
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::pair<CuDisk, CuDisk> distant_disks(const DeformedMap& m, std::uint64_t seed, double radius,
                                        double min_distance) {
  const MapView fwd = MapView::forward(m);
  const int n = m.dim();
  auto gen = stream(seed, 0, 42);
  auto draw = [&] {
    Vec c(n);
    for (int i = 0; i < n; ++i) c(i) = uniform01(gen);
    return wrap(c);
  };
  const TorusPoint a = draw();
  TorusPoint b = draw();
  for (int tries = 0; torus_distance(a, b) < min_distance; ++tries) {
    if (tries > 10000) throw Error("distant_disks: min_distance too large");
    b = draw();
  }
  return {make_cu_disk(fwd, a, radius), make_cu_disk(fwd, b, radius)};
}

}  // namespace dalab
