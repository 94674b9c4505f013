#include "dalab/manifolds.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <unordered_map>

#include "dalab/hyperbolicity.hpp"
#include "dalab/parallel.hpp"
#include "dalab/rng.hpp"
#include "dalab/stats.hpp"

namespace dalab {

namespace {

double op_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  return m.rows() >= m.cols() ? singular_values(m).max : singular_values(Mat(m.transpose())).max;
}

double sup_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

std::size_t ipow(int b, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= static_cast<std::size_t>(b);
  return r;
}

Mat join(const Mat& a, const Mat& b) {
  Mat t(a.rows(), a.cols() + b.cols());
  t.leftCols(a.cols()) = a;
  t.rightCols(b.cols()) = b;
  return t;
}

}  // namespace

GraphChart GraphChart::linear(const Mat& m, int domain_dim) {
  GraphChart c;
  c.domain_dim = domain_dim;
  c.value_dim = static_cast<int>(m.rows()) - domain_dim;
  c.map = [m](const Vec& z) -> Vec { return m * z; };
  c.jacobian = [m](const Vec&) -> Mat { return m; };
  return c;
}

GraphChart make_chart(const MapView& view, const TorusPoint& x, const Mat& dom_x, const Mat& val_x, const Mat& dom_y,
                      const Mat& val_y) {
  GraphChart c;
  c.domain_dim = static_cast<int>(dom_x.cols());
  c.value_dim = static_cast<int>(val_x.cols());
  const Mat tx = join(dom_x, val_x);
  const Mat ty = join(dom_y, val_y);
  const Mat ty_inv = ty.inverse();
  if (!ty_inv.allFinite()) throw Error("make_chart: degenerate target frame");
  c.map = [view, x, tx, ty_inv](const Vec& z) -> Vec { return ty_inv * view.separation(x, tx * z); };
  c.jacobian = [view, x, tx, ty_inv](const Vec& z) -> Mat {
    return ty_inv * view.jacobian(wrap(x.coords() + tx * z)) * tx;
  };
  return c;
}

GraphData GraphData::zero(int domain_dim, int value_dim, double radius, int grid) {
  if (domain_dim < 1) throw Error("graph: domain dimension must be >= 1");
  if (grid < 3 || grid % 2 == 0) throw Error("graph: grid must be odd and >= 3");
  if (!(radius > 0.0)) throw Error("graph: radius must be positive");
  GraphData g;
  g.domain_dim = domain_dim;
  g.value_dim = value_dim;
  g.radius = radius;
  g.grid = grid;
  const std::size_t count = ipow(grid, domain_dim);
  g.values.assign(count, Vec::Zero(value_dim));
  g.slopes.assign(count, Mat::Zero(value_dim, domain_dim));
  return g;
}

GraphData GraphData::linear(const Mat& k, double radius, int grid) {
  GraphData g = zero(static_cast<int>(k.cols()), static_cast<int>(k.rows()), radius, grid);
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    g.values[i] = k * g.node(i);
    g.slopes[i] = k;
  }
  return g;
}

Vec GraphData::node(std::size_t i) const {
  Vec xi(domain_dim);
  const double h = 2.0 * radius / (grid - 1);
  for (int a = domain_dim - 1; a >= 0; --a) {
    const auto k = static_cast<int>(i % static_cast<std::size_t>(grid));
    i /= static_cast<std::size_t>(grid);
    xi(a) = k == (grid - 1) / 2 ? 0.0 : -radius + h * k;
  }
  return xi;
}

namespace {

// Multilinear weights: base index and fractional offsets per axis.
struct Cell {
  std::array<int, kMaxDim> lo{};
  std::array<double, kMaxDim> frac{};
};

Cell locate(const GraphData& g, const Vec& xi) {
  Cell c;
  const double scale = (g.grid - 1) / (2.0 * g.radius);
  for (int a = 0; a < g.domain_dim; ++a) {
    double t = (xi(a) + g.radius) * scale;
    t = std::clamp(t, 0.0, static_cast<double>(g.grid - 1));
    int i0 = std::min(static_cast<int>(std::floor(t)), g.grid - 2);
    c.lo[static_cast<std::size_t>(a)] = i0;
    c.frac[static_cast<std::size_t>(a)] = t - i0;
  }
  return c;
}

template <class T>
T interpolate(const GraphData& g, const std::vector<T>& data, const Vec& xi, T zero) {
  const Cell c = locate(g, xi);
  T acc = zero;
  const int corners = 1 << g.domain_dim;
  for (int mask = 0; mask < corners; ++mask) {
    double w = 1.0;
    std::size_t idx = 0;
    for (int a = 0; a < g.domain_dim; ++a) {
      const bool up = (mask >> a) & 1;
      const double f = c.frac[static_cast<std::size_t>(a)];
      w *= up ? f : 1.0 - f;
      idx = idx * static_cast<std::size_t>(g.grid) + static_cast<std::size_t>(c.lo[static_cast<std::size_t>(a)] + (up ? 1 : 0));
    }
    if (w != 0.0) acc += w * data[idx];
  }
  return acc;
}

}  // namespace

Vec GraphData::value_at(const Vec& xi) const {
  return interpolate(*this, values, xi, Vec(Vec::Zero(value_dim)));
}

Mat GraphData::slope_at(const Vec& xi) const {
  return interpolate(*this, slopes, xi, Mat(Mat::Zero(value_dim, domain_dim)));
}

double GraphData::slope_bound() const {
  double k = 0.0;
  for (const auto& s : slopes) k = std::max(k, op_norm(s));
  return k;
}

double GraphData::fd_slope_bound() const {
  double k = 0.0;
  const double h = 2.0 * radius / (grid - 1);
  for (std::size_t i = 0; i < node_count(); ++i) {
    Mat d(value_dim, domain_dim);
    std::size_t stride = 1;
    for (int a = domain_dim - 1; a >= 0; --a) {
      const auto k_a = static_cast<int>((i / stride) % static_cast<std::size_t>(grid));
      if (k_a + 1 < grid)
        d.col(a) = (values[i + stride] - values[i]) / h;
      else
        d.col(a) = (values[i] - values[i - stride]) / h;
      stride *= static_cast<std::size_t>(grid);
    }
    k = std::max(k, op_norm(d));
  }
  return k;
}

ChartTransform transform_graph(const GraphChart& chart, const GraphData& h, const GraphOptions& opt) {
  const int u = h.domain_dim;
  const int s = h.value_dim;
  if (chart.domain_dim != u || chart.value_dim != s) throw Error("graph transform: chart and graph dimensions differ");
  const int d = u + s;
  auto lift = [&](const Vec& xi) {
    Vec z(d);
    z.head(u) = xi;
    z.tail(s) = h.value_at(xi);
    return z;
  };
  ChartTransform out;
  out.gamma = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < h.node_count(); ++i) {
    const Vec xi = h.node(i);
    const double nx = sup_norm(xi);
    if (nx == 0.0) continue;
    const Vec w = chart.map(lift(xi));
    if (!w.allFinite()) throw Error("graph transform: non-finite chart value");
    out.gamma = std::min(out.gamma, sup_norm(w.head(u)) / nx);
  }
  const double cap = opt.cap > 0.0 ? opt.cap : h.radius;
  const double r_out = std::min(out.gamma * h.radius, cap);
  if (!(r_out > 0.0)) throw Error("graph transform: degenerate output domain");

  const Mat j0 = chart.jacobian(Vec::Zero(d));
  const Mat a_cu = j0.topLeftCorner(u, u) + j0.topRightCorner(u, s) * h.slope_at(Vec::Zero(u));
  const auto lu = a_cu.partialPivLu();
  if (!(std::abs(a_cu.determinant()) > 0.0)) throw Error("graph transform: singular linear part");
  const double tol = 1e-13 * std::max(h.radius, r_out);

  struct Solved {
    Vec value;
    Mat slope;
    int iterations = 0;
  };
  auto solve = [&](const Vec& target) {
    Vec xi = lu.solve(target);
    for (int it = 1; it <= opt.max_newton; ++it) {
      for (int a = 0; a < u; ++a) xi(a) = std::clamp(xi(a), -h.radius, h.radius);
      const Vec z = lift(xi);
      const Vec w = chart.map(z);
      const Vec res = w.head(u) - target;
      const Vec step = lu.solve(res);
      if (sup_norm(res) <= tol || sup_norm(step) <= 1e-15 * h.radius) {
        Solved r;
        r.value = w.tail(s);
        const Mat j = chart.jacobian(z);
        const Mat k = h.slope_at(xi);
        const Mat num = j.bottomLeftCorner(s, u) + j.bottomRightCorner(s, s) * k;
        const Mat den = j.topLeftCorner(u, u) + j.topRightCorner(u, s) * k;
        r.slope = num * den.inverse();
        r.iterations = it;
        return r;
      }
      xi -= step;
    }
    throw Error("graph transform: inversion of alpha did not converge in " + std::to_string(opt.max_newton) +
                " iterations");
  };

  int g = std::max(opt.grid, 3);
  if (g % 2 == 0) ++g;
  for (;;) {
    GraphData res = GraphData::zero(u, s, r_out, g);
    int worst = 0;
    for (std::size_t i = 0; i < res.node_count(); ++i) {
      const Vec t = res.node(i);
      const Solved sv = solve(t);
      res.values[i] = sv.value;
      res.slopes[i] = sv.slope;
      worst = std::max(worst, sv.iterations);
    }
    double err = 0.0;
    if (opt.refine && 2 * g - 1 <= opt.max_grid) {
      // compare interpolation against direct solves at cell centers
      const double step = 2.0 * r_out / (g - 1);
      const std::size_t cells = ipow(g - 1, u);
      for (std::size_t c = 0; c < cells && err <= opt.refine_tolerance; ++c) {
        Vec t(u);
        std::size_t rem = c;
        for (int a = u - 1; a >= 0; --a) {
          t(a) = -r_out + step * (static_cast<double>(rem % static_cast<std::size_t>(g - 1)) + 0.5);
          rem /= static_cast<std::size_t>(g - 1);
        }
        err = std::max(err, sup_norm(solve(t).value - res.value_at(t)));
      }
    }
    if (err > opt.refine_tolerance && 2 * g - 1 <= opt.max_grid) {
      g = 2 * g - 1;
      continue;
    }
    out.graph = std::move(res);
    out.newton_iterations = worst;
    break;
  }
  const double k_in = h.slope_bound();
  out.theta = k_in > 0.0 ? out.graph.slope_bound() / k_in : 0.0;
  return out;
}

std::string to_string(GraphFlavor f) { return f == GraphFlavor::cu_graph ? "cu_graph" : "cs_graph"; }

Vec GraphPatch::offset(const Vec& xi) const { return domain_basis() * xi + value_basis() * graph.value_at(xi); }

GraphPatch make_patch(const TorusPoint& x, const SplittingFrame& frame, GraphFlavor flavor, GraphData graph) {
  GraphPatch p;
  p.base_point = x;
  p.frame = frame;
  p.frame.point = x;
  p.flavor = flavor;
  p.graph = std::move(graph);
  const int dom = static_cast<int>(p.domain_basis().cols());
  const int val = static_cast<int>(p.value_basis().cols());
  if (dom != p.graph.domain_dim || val != p.graph.value_dim) throw Error("make_patch: frame and graph dimensions differ");
  p.k_bound = p.graph.slope_bound();
  return p;
}

namespace {

const Mat& dom_of(const SplittingFrame& f, GraphFlavor fl) { return fl == GraphFlavor::cu_graph ? f.cu : f.cs; }
const Mat& val_of(const SplittingFrame& f, GraphFlavor fl) { return fl == GraphFlavor::cu_graph ? f.cs : f.cu; }

}  // namespace

PatchTransform graph_transform(const MapView& view, const GraphPatch& p, const GraphOptions& opt,
                               const SplittingFrame* target_frame, int frame_iterations) {
  const TorusPoint y = view.step(p.base_point);
  SplittingFrame tf =
      target_frame ? *target_frame : estimate_invariant_splitting(MapView::forward(view.map()), y, frame_iterations);
  tf.point = y;
  const GraphChart chart =
      make_chart(view, p.base_point, p.domain_basis(), p.value_basis(), dom_of(tf, p.flavor), val_of(tf, p.flavor));
  ChartTransform ct = transform_graph(chart, p.graph, opt);
  PatchTransform out;
  out.patch = make_patch(y, tf, p.flavor, std::move(ct.graph));
  out.gamma = ct.gamma;
  out.theta = ct.theta;
  return out;
}

PatchTransform graph_transform_cu(const DeformedMap& m, const GraphPatch& p, const GraphOptions& opt) {
  if (p.flavor != GraphFlavor::cu_graph) throw Error("graph_transform_cu: patch is not a cu-graph");
  return graph_transform(MapView::forward(m), p, opt);
}

GraphPatch rebase_patch(const GraphPatch& p, const SplittingFrame& frame, const GraphOptions& opt) {
  const Mat t_old = join(p.domain_basis(), p.value_basis());
  const Mat t_new = join(dom_of(frame, p.flavor), val_of(frame, p.flavor));
  const Mat m = t_new.partialPivLu().solve(t_old);
  GraphOptions o = opt;
  if (o.cap <= 0.0) o.cap = p.radius();
  ChartTransform ct = transform_graph(GraphChart::linear(m, p.graph.domain_dim), p.graph, o);
  GraphPatch out = make_patch(p.base_point, frame, p.flavor, std::move(ct.graph));
  return out;
}

GraphPatch local_stable_manifold(const MapView& view, const TorusPoint& x, double radius, int m,
                                 const StableManifoldOptions& opt) {
  if (m < 10) throw Error("local_stable_manifold: m must be >= 10");
  if (!(radius > 0.0)) throw Error("local_stable_manifold: radius must be positive");
  const GraphFlavor flavor = view.is_backward() ? GraphFlavor::cu_graph : GraphFlavor::cs_graph;
  const MapView fwd = MapView::forward(view.map());
  const bool pinned = torus_distance(view.step(x), x) < 1e-12;
  std::vector<TorusPoint> pts{x};
  std::vector<SplittingFrame> frames{estimate_invariant_splitting(fwd, x, opt.frame_iterations)};
  for (int k = 1; k <= m; ++k) {
    if (pinned) {
      pts.push_back(x);
      frames.push_back(frames.front());
    } else {
      pts.push_back(view.step(pts.back()));
      frames.push_back(estimate_invariant_splitting(fwd, pts.back(), opt.frame_iterations));
    }
  }
  const MapView back = view.reversed();
  GraphOptions go = opt.graph;
  go.cap = radius;
  auto run = [&](int start) {
    const SplittingFrame& f0 = frames[static_cast<std::size_t>(start)];
    GraphData g = GraphData::zero(static_cast<int>(dom_of(f0, flavor).cols()), static_cast<int>(val_of(f0, flavor).cols()),
                                  radius, go.grid);
    for (int k = start; k >= 1; --k) {
      const auto& fk = frames[static_cast<std::size_t>(k)];
      const auto& fj = frames[static_cast<std::size_t>(k - 1)];
      const GraphChart chart = make_chart(back, pts[static_cast<std::size_t>(k)], dom_of(fk, flavor), val_of(fk, flavor),
                                          dom_of(fj, flavor), val_of(fj, flavor));
      g = transform_graph(chart, g, go).graph;
    }
    return g;
  };
  GraphData a = run(m);
  const GraphData b = run(m - 1);
  double conv = 0.0;
  for (std::size_t i = 0; i < a.node_count(); ++i) conv = std::max(conv, sup_norm(a.values[i] - b.value_at(a.node(i))));
  if (!(conv <= opt.tolerance))
    throw Error("local_stable_manifold: patch sequence did not converge (sup distance " + std::to_string(conv) + ")");
  GraphPatch p = make_patch(x, frames.front(), flavor, std::move(a));
  p.convergence = conv;
  return p;
}

GraphPatch local_stable_manifold(const DeformedMap& m, const TorusPoint& x, double radius, int steps,
                                 const StableManifoldOptions& opt) {
  return local_stable_manifold(MapView::forward(m), x, radius, steps, opt);
}

StableChain stable_chain(const MapView& view, const TorusPoint& x, const SplittingFrame& frame, int n, double radius,
                         const ContractionOptions& opt) {
  if (n < 0) throw Error("stable_chain: n must be >= 0");
  if (!(radius > 0.0)) throw Error("stable_chain: radius must be positive");
  const GraphFlavor flavor = view.is_backward() ? GraphFlavor::cu_graph : GraphFlavor::cs_graph;
  const MapView fwd = MapView::forward(view.map());
  const int m = std::max(opt.hadamard_steps, 1);
  const bool pinned = torus_distance(view.step(x), x) < 1e-12;
  StableChain c;
  c.flavor = flavor;
  c.domain_dim = static_cast<int>(dom_of(frame, flavor).cols());
  std::vector<TorusPoint> pts{x};
  std::vector<SplittingFrame> frames{frame};
  for (int k = 1; k <= n + m; ++k) {
    pts.push_back(pinned ? x : view.step(pts.back()));
    frames.push_back(pinned ? frame : estimate_invariant_splitting(fwd, pts.back(), opt.frame_iterations));
  }
  const MapView back = view.reversed();
  GraphOptions go = opt.graph;
  go.cap = radius;
  c.graphs.resize(static_cast<std::size_t>(n) + 1);
  {
    const auto& fl = frames.back();
    GraphData g = GraphData::zero(c.domain_dim, static_cast<int>(val_of(fl, flavor).cols()), radius, go.grid);
    for (int k = n + m; k >= 1; --k) {
      const auto& fk = frames[static_cast<std::size_t>(k)];
      const auto& fj = frames[static_cast<std::size_t>(k - 1)];
      const GraphChart chart = make_chart(back, pts[static_cast<std::size_t>(k)], dom_of(fk, flavor), val_of(fk, flavor),
                                          dom_of(fj, flavor), val_of(fj, flavor));
      g = transform_graph(chart, g, go).graph;
      if (k - 1 <= n) c.graphs[static_cast<std::size_t>(k - 1)] = g;
    }
  }
  for (int k = 0; k <= n; ++k) {
    const auto& fk = frames[static_cast<std::size_t>(k)];
    c.points.push_back(pts[static_cast<std::size_t>(k)]);
    c.frames.push_back(fk);
    c.bases.push_back(join(dom_of(fk, flavor), val_of(fk, flavor)));
    if (k < n) {
      const auto& fj = frames[static_cast<std::size_t>(k + 1)];
      c.charts.push_back(make_chart(view, pts[static_cast<std::size_t>(k)], dom_of(fk, flavor), val_of(fk, flavor),
                                    dom_of(fj, flavor), val_of(fj, flavor)));
    }
  }
  return c;
}

GraphPatch StableChain::patch(int k) const {
  const auto i = static_cast<std::size_t>(k);
  return make_patch(points.at(i), frames.at(i), flavor, graphs.at(i));
}

std::vector<Vec> StableChain::follow(const Vec& e0) const {
  const int s = domain_dim;
  std::vector<Vec> out{e0};
  Vec z = bases[0].partialPivLu().solve(e0);
  for (std::size_t k = 0; k < charts.size(); ++k) {
    const Vec w = charts[k].map(z);
    z.head(s) = w.head(s);
    z.tail(w.size() - s) = graphs[k + 1].value_at(w.head(s));
    out.push_back(bases[k + 1] * z);
  }
  return out;
}

ContractionResult contraction_verify(const MapView& view, const GraphPatch& patch, int n,
                                     const ContractionOptions& opt) {
  if (n < 0) throw Error("contraction_verify: n must be >= 0");
  if (opt.samples < 1) throw Error("contraction_verify: samples must be >= 1");
  const GraphFlavor flavor = view.is_backward() ? GraphFlavor::cu_graph : GraphFlavor::cs_graph;
  if (patch.flavor != flavor) throw Error("contraction_verify: patch is not along the contracting bundle of the view");
  ContractionResult out;
  out.samples = opt.samples;
  out.max_ratio.assign(static_cast<std::size_t>(n) + 1, 0.0);
  out.max_ratio[0] = 1.0;
  if (n == 0) {
    out.rate = 1.0;
    return out;
  }
  const StableChain chain = stable_chain(view, patch.base_point, patch.frame, n, patch.radius(), opt);
  const int s = patch.graph.domain_dim;
  for (int i = 0; i < opt.samples; ++i) {
    auto gen = stream(opt.seed, static_cast<std::uint64_t>(i), 13);
    Vec xi(s);
    Vec e;
    do {
      for (int a = 0; a < s; ++a) xi(a) = patch.radius() * (2.0 * uniform01(gen) - 1.0);
      e = patch.offset(xi);
    } while (e.norm() == 0.0);
    const double d0 = e.norm();
    const auto path = chain.follow(e);
    for (int k = 1; k <= n; ++k) {
      auto& slot = out.max_ratio[static_cast<std::size_t>(k)];
      slot = std::max(slot, path[static_cast<std::size_t>(k)].norm() / d0);
    }
  }
  out.ratio = out.max_ratio.back();
  if (n == 1) {
    out.rate = out.ratio;
  } else {
    std::vector<double> ks, ys;
    for (int k = n / 2; k <= n; ++k) {
      ks.push_back(k);
      ys.push_back(std::log(out.max_ratio[static_cast<std::size_t>(k)]));
    }
    out.rate = std::exp(fit_line(ks, ys).slope);
  }
  return out;
}

ContractionResult contraction_verify(const DeformedMap& m, const GraphPatch& patch, int n,
                                     const ContractionOptions& opt) {
  return contraction_verify(MapView::forward(m), patch, n, opt);
}

TransformProbe probe_graph_transform(const DeformedMap& m, const TorusPoint& x, int steps, double k, double radius,
                                     int directions, const GraphOptions& opt) {
  if (steps < 1) throw Error("probe_graph_transform: steps must be >= 1");
  if (!(k > 0.0)) throw Error("probe_graph_transform: k must be positive");
  const MapView fwd = MapView::forward(m);
  TransformProbe out;
  out.gamma_min = std::numeric_limits<double>::infinity();
  SplittingFrame f = estimate_invariant_splitting(fwd, x, 30);
  const int u = static_cast<int>(f.cu.cols());
  const int s = static_cast<int>(f.cs.cols());
  auto slope = [&](std::uint64_t salt) {
    auto gen = stream(salt, 0, 17);
    Mat kk(s, u);
    for (int i = 0; i < s; ++i)
      for (int j = 0; j < u; ++j) kk(i, j) = normal01(gen);
    return Mat(kk * (k / std::max(op_norm(kk), 1e-300)));
  };
  GraphPatch carried = make_patch(x, f, GraphFlavor::cu_graph, GraphData::linear(slope(999), radius, opt.grid));
  TorusPoint p = x;
  for (int i = 0; i < steps; ++i) {
    const TorusPoint y = m.apply(p);
    const SplittingFrame fy = estimate_invariant_splitting(fwd, y, 30);
    double worst = 0.0;
    for (int d = 0; d < directions; ++d) {
      const GraphPatch probe =
          make_patch(p, f, GraphFlavor::cu_graph,
                     GraphData::linear(slope(static_cast<std::uint64_t>(i * directions + d)), radius, opt.grid));
      const PatchTransform t = graph_transform(fwd, probe, opt, &fy);
      worst = std::max(worst, t.theta);
      out.gamma_min = std::min(out.gamma_min, t.gamma);
    }
    out.theta.push_back(worst);
    const PatchTransform c = graph_transform(fwd, carried, opt, &fy);
    out.gamma.push_back(c.gamma);
    out.chain_bound.push_back(c.patch.k_bound);
    carried = c.patch;
    p = y;
    f = fy;
  }
  out.theta_max = *std::max_element(out.theta.begin(), out.theta.end());
  return out;
}

double lambda_bar(const DeformedMap& m, const TorusPoint& x, int n, double c) {
  const OrbitStats st = orbit_stats(m, x, n);
  return (1.0 + c) * std::exp(mean(st.log_cs_norm));
}

// ---------------------------------------------------------------------------
// parametric sheets

namespace {

struct Sheet {
  std::vector<int> shape;
  std::vector<Vec> lift;
};

std::vector<std::size_t> strides_of(const std::vector<int>& shape) {
  std::vector<std::size_t> st(shape.size(), 1);
  for (int a = static_cast<int>(shape.size()) - 2; a >= 0; --a)
    st[static_cast<std::size_t>(a)] = st[static_cast<std::size_t>(a) + 1] * static_cast<std::size_t>(shape[static_cast<std::size_t>(a) + 1]);
  return st;
}

std::vector<int> multi_index(std::size_t i, const std::vector<int>& shape) {
  std::vector<int> idx(shape.size());
  for (int a = static_cast<int>(shape.size()) - 1; a >= 0; --a) {
    idx[static_cast<std::size_t>(a)] = static_cast<int>(i % static_cast<std::size_t>(shape[static_cast<std::size_t>(a)]));
    i /= static_cast<std::size_t>(shape[static_cast<std::size_t>(a)]);
  }
  return idx;
}

Vec param_of(const std::vector<int>& idx, const std::vector<int>& shape) {
  Vec a(static_cast<int>(shape.size()));
  for (std::size_t k = 0; k < shape.size(); ++k)
    a(static_cast<int>(k)) = shape[k] == 1 ? 0.0 : -1.0 + 2.0 * idx[k] / (shape[k] - 1);
  return a;
}

std::size_t product(const std::vector<int>& shape) {
  std::size_t p = 1;
  for (int s : shape) p *= static_cast<std::size_t>(s);
  return p;
}

Sheet build_sheet(const MapView& view, const SheetSeed& seed, int dim, int iterations, double resolution,
                  std::size_t max_nodes, int initial, int threads, const Vec* anchor = nullptr) {
  Sheet sh;
  std::vector<Vec> orbit;
  if (anchor) {
    orbit.push_back(*anchor);
    // reduced mod Z^n: cube membership is lattice invariant and large lifts lose the sheet's detail
    for (int k = 0; k < iterations; ++k) orbit.push_back(wrap(view.step_lift(orbit.back())).coords());
  }
  sh.shape.assign(static_cast<std::size_t>(dim), std::max(initial, 2));
  for (;;) {
    const std::size_t count = product(sh.shape);
    if (count > max_nodes)
      throw Error("sheet: resolution budget exceeded (" + std::to_string(count) + " nodes > " +
                  std::to_string(max_nodes) + ")");
    sh.lift.assign(count, Vec());
    parallel_for(count, threads, [&](std::size_t i) {
      Vec z = seed(param_of(multi_index(i, sh.shape), sh.shape));
      if (anchor) {
        for (int k = 0; k < iterations; ++k)
          z = view.separation(wrap(orbit[static_cast<std::size_t>(k)]), z);
        z += orbit.back();
      } else {
        for (int k = 0; k < iterations; ++k) z = view.step_lift(z);
      }
      if (!z.allFinite()) throw Error("sheet: non-finite point");
      sh.lift[i] = z;
    });
    const auto st = strides_of(sh.shape);
    bool refined = false;
    std::vector<int> next = sh.shape;
    for (int a = 0; a < dim; ++a) {
      double gap = 0.0;
      for (std::size_t i = 0; i < count; ++i) {
        const auto idx = multi_index(i, sh.shape);
        if (idx[static_cast<std::size_t>(a)] + 1 >= sh.shape[static_cast<std::size_t>(a)]) continue;
        gap = std::max(gap, (sh.lift[i + st[static_cast<std::size_t>(a)]] - sh.lift[i]).norm());
      }
      if (gap > resolution) {
        next[static_cast<std::size_t>(a)] = 2 * sh.shape[static_cast<std::size_t>(a)] - 1;
        refined = true;
      }
    }
    if (!refined) return sh;
    sh.shape = next;
  }
}

// Orthonormal tangent basis at node i from grid differences.
Mat grid_tangent(const Sheet& sh, std::size_t i) {
  const int dim = static_cast<int>(sh.shape.size());
  const auto st = strides_of(sh.shape);
  const auto idx = multi_index(i, sh.shape);
  Mat t(sh.lift[i].size(), dim);
  for (int a = 0; a < dim; ++a) {
    const auto sa = st[static_cast<std::size_t>(a)];
    const int k = idx[static_cast<std::size_t>(a)];
    const int len = sh.shape[static_cast<std::size_t>(a)];
    const std::size_t hi = k + 1 < len ? i + sa : i;
    const std::size_t lo = k > 0 ? i - sa : i;
    t.col(a) = sh.lift[hi] - sh.lift[lo];
  }
  orthonormalize(t);
  return t;
}

}  // namespace

double CurveSegment::max_gap() const {
  if (lift.size() < 2) return 0.0;
  const auto st = strides_of(shape);
  double gap = 0.0;
  for (std::size_t i = 0; i < lift.size(); ++i) {
    const auto idx = multi_index(i, shape);
    for (std::size_t a = 0; a < shape.size(); ++a)
      if (idx[a] + 1 < shape[a]) gap = std::max(gap, (lift[i + st[a]] - lift[i]).norm());
  }
  return gap;
}

CurveSegment grow_unstable_manifold(const MapView& view, const TorusPoint& q, double target_length,
                                    const SheetOptions& opt) {
  if (!(target_length >= 0.0)) throw Error("grow_unstable_manifold: target_length must be >= 0");
  const int u = view.cu_dim();
  if (u < 1 || u > 2) throw Error("grow_unstable_manifold: only 1- and 2-dimensional manifolds are supported");
  if (torus_distance(view.step(q), q) > 1e-9) throw Error("grow_unstable_manifold: q is not a fixed point");
  CurveSegment seg;
  seg.anchor = q;
  seg.dim = u;
  seg.resolution = opt.resolution;
  const SplittingFrame fq = estimate_invariant_splitting(view, q, opt.frame_iterations);
  if (target_length == 0.0) {
    seg.shape.assign(static_cast<std::size_t>(u), 1);
    seg.lift = {q.coords()};
    seg.tangent = {fq.cu};
    seg.certified = true;
    if (u == 1) seg.arc = {0.0};
    return seg;
  }
  // seed: local unstable graph of the view at q
  StableManifoldOptions so;
  so.graph.grid = 9;
  so.frame_iterations = opt.frame_iterations;
  const GraphPatch patch = local_stable_manifold(view.reversed(), q, u * opt.seed_radius, opt.hadamard_steps, so);
  const Mat t = join(patch.domain_basis(), patch.value_basis());
  const Mat mloc = t.partialPivLu().solve(view.jacobian(q) * t);
  const Mat mcu = mloc.topLeftCorner(u, u);
  Mat axes = Mat::Identity(u, u);
  std::vector<double> lam(static_cast<std::size_t>(u));
  const Eigen::MatrixXd mcu_dyn = mcu;
  Eigen::EigenSolver<Eigen::MatrixXd> es(mcu_dyn);
  bool real = es.info() == Eigen::Success;
  if (real)
    for (int i = 0; i < u; ++i) real = real && std::abs(es.eigenvalues()(i).imag()) < 1e-12;
  if (real) {
    for (int i = 0; i < u; ++i) {
      Vec v = es.eigenvectors().col(i).real();
      axes.col(i) = v / v.norm();
      lam[static_cast<std::size_t>(i)] = std::abs(es.eigenvalues()(i).real());
    }
  } else {
    const double smin = singular_values(mcu).min;
    std::fill(lam.begin(), lam.end(), smin);
  }
  const double lmin = *std::min_element(lam.begin(), lam.end());
  if (!(lmin > 1.0)) throw Error("grow_unstable_manifold: q is not hyperbolic");
  int k = std::max(0, static_cast<int>(std::ceil(std::log(target_length / opt.seed_radius) / std::log(lmin))));
  seg.seed_radii.resize(static_cast<std::size_t>(u));
  for (int i = 0; i < u; ++i)
    seg.seed_radii[static_cast<std::size_t>(i)] = opt.seed_radius * std::pow(lmin / lam[static_cast<std::size_t>(i)], k);
  seg.seed_axes = axes;
  const Vec q0 = q.coords();
  const SheetSeed seed = [&](const Vec& a) -> Vec {
    Vec xi(u);
    xi.setZero();
    for (int i = 0; i < u; ++i) xi += axes.col(i) * (seg.seed_radii[static_cast<std::size_t>(i)] * a(i));
    return q0 + patch.offset(xi);
  };
  Sheet sh;
  for (int extra = 0;; ++extra) {
    if (extra > 40) throw Error("grow_unstable_manifold: target length not reached");
    sh = build_sheet(view, seed, u, k + extra, opt.resolution, opt.max_nodes, opt.initial_nodes, opt.threads);
    double reach = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < sh.lift.size(); ++i) {
      const auto idx = multi_index(i, sh.shape);
      bool boundary = false;
      for (std::size_t a = 0; a < idx.size(); ++a) boundary = boundary || idx[a] == 0 || idx[a] + 1 == sh.shape[a];
      if (boundary) reach = std::min(reach, (sh.lift[i] - q0).norm());
    }
    if (reach >= target_length) {
      seg.iterations = k + extra;
      break;
    }
  }
  seg.shape = sh.shape;
  seg.lift = sh.lift;
  if (u == 1) {
    seg.arc.assign(seg.lift.size(), 0.0);
    for (std::size_t i = 1; i < seg.lift.size(); ++i) seg.arc[i] = seg.arc[i - 1] + (seg.lift[i] - seg.lift[i - 1]).norm();
  }
  if (opt.certify) {
    seg.tangent.assign(seg.lift.size(), Mat());
    std::vector<double> ap(seg.lift.size(), 0.0);
    parallel_for(seg.lift.size(), opt.threads, [&](std::size_t i) {
      seg.tangent[i] = grid_tangent(sh, i);
      const SplittingFrame f = estimate_invariant_splitting(view, wrap(seg.lift[i]), opt.frame_iterations);
      ap[i] = plane_aperture(f, seg.tangent[i], ConeKind::center_unstable);
    });
    seg.max_aperture = *std::max_element(ap.begin(), ap.end());
    seg.certified = seg.max_aperture <= opt.aperture;
  }
  return seg;
}

CurveSegment grow_unstable_manifold(const DeformedMap& m, const TorusPoint& q, double target_length,
                                    const SheetOptions& opt) {
  return grow_unstable_manifold(MapView::forward(m), q, target_length, opt);
}

CurveSegment grow_stable_manifold(const DeformedMap& m, const TorusPoint& q, double target_length,
                                  const SheetOptions& opt) {
  return grow_unstable_manifold(MapView::backward(m), q, target_length, opt);
}

// ---------------------------------------------------------------------------
// density

namespace {

struct Simplex {
  Vec p0;    // wrapped first vertex
  Mat edges;  // n x dim
};

std::vector<Simplex> simplices(const CurveSegment& c) {
  std::vector<Simplex> out;
  const auto st = strides_of(c.shape);
  auto add = [&](std::size_t a, std::size_t b, std::size_t d) {
    Simplex s;
    s.p0 = wrap(c.lift[a]).coords();
    if (d == static_cast<std::size_t>(-1)) {
      s.edges = Mat(c.lift[a].size(), 1);
      s.edges.col(0) = c.lift[b] - c.lift[a];
    } else {
      s.edges = Mat(c.lift[a].size(), 2);
      s.edges.col(0) = c.lift[b] - c.lift[a];
      s.edges.col(1) = c.lift[d] - c.lift[a];
    }
    out.push_back(std::move(s));
  };
  if (c.dim == 1) {
    for (std::size_t i = 0; i + 1 < c.lift.size(); ++i) add(i, i + 1, static_cast<std::size_t>(-1));
  } else if (c.dim == 2) {
    for (std::size_t i = 0; i < c.lift.size(); ++i) {
      const auto idx = multi_index(i, c.shape);
      if (idx[0] + 1 >= c.shape[0] || idx[1] + 1 >= c.shape[1]) continue;
      const std::size_t r = i + st[1], dn = i + st[0], rd = i + st[0] + st[1];
      add(i, r, dn);
      add(rd, dn, r);
    }
  } else {
    throw Error("density: only 1- and 2-dimensional sheets are supported");
  }
  return out;
}

class SimplexIndex {
 public:
  SimplexIndex(std::vector<Simplex> s, double reach) : s_(std::move(s)) {
    n_ = s_.empty() ? 0 : static_cast<int>(s_.front().p0.size());
    for (const auto& x : s_)
      for (int c = 0; c < x.edges.cols(); ++c) diam_ = std::max(diam_, x.edges.col(c).norm());
    g_ = std::clamp(static_cast<int>(std::floor(1.0 / std::max(reach + diam_, 1e-9))), 1, 24);
    while (g_ > 1 && ipow(g_, n_) > (1u << 20)) --g_;
    cells_.assign(ipow(g_, n_), {});
    for (std::size_t i = 0; i < s_.size(); ++i) cells_[cell_of(s_[i].p0)].push_back(static_cast<int>(i));
  }

  // Smallest |eta| <= rho with c + B eta on a simplex; infinity if none.
  double nearest(const Vec& c, const Mat& b, double rho) const {
    double best = std::numeric_limits<double>::infinity();
    if (s_.empty()) return best;
    const int reach = static_cast<int>(std::ceil((rho + diam_) * g_));
    std::vector<int> base(static_cast<std::size_t>(n_));
    for (int a = 0; a < n_; ++a) base[static_cast<std::size_t>(a)] = std::min(static_cast<int>(c(a) * g_), g_ - 1);
    const int span = std::min(2 * reach + 1, g_);
    std::vector<int> off(static_cast<std::size_t>(n_), 0);
    const std::size_t total = ipow(span, n_);
    for (std::size_t t = 0; t < total; ++t) {
      std::size_t rem = t, cell = 0;
      for (int a = 0; a < n_; ++a) {
        const int o = static_cast<int>(rem % static_cast<std::size_t>(span));
        rem /= static_cast<std::size_t>(span);
        int k = span == g_ ? o : base[static_cast<std::size_t>(a)] - reach + o;
        k = ((k % g_) + g_) % g_;
        cell = cell * static_cast<std::size_t>(g_) + static_cast<std::size_t>(k);
      }
      for (int id : cells_[cell]) {
        const Simplex& s = s_[static_cast<std::size_t>(id)];
        const Vec p0 = c + centered_difference(s.p0, c);
        if ((p0 - c).norm() > std::min(rho, best) + diam_) continue;
        const int u = static_cast<int>(b.cols());
        const int k = static_cast<int>(s.edges.cols());
        if (u + k != n_) throw Error("density: disk and sheet dimensions are not complementary");
        Mat m(n_, n_);
        m.leftCols(u) = b;
        m.rightCols(k) = -s.edges;
        const auto lu = m.fullPivLu();
        if (lu.rank() < n_) continue;
        const Vec sol = lu.solve(p0 - c);
        const Vec bary = sol.tail(k);
        const double slack = 1e-12;
        if (bary.minCoeff() < -slack || bary.sum() > 1.0 + slack) continue;
        const double eta = sol.head(u).norm();
        if (eta <= rho) best = std::min(best, eta);
      }
    }
    return best;
  }

 private:
  std::size_t cell_of(const Vec& p) const {
    std::size_t cell = 0;
    for (int a = 0; a < n_; ++a)
      cell = cell * static_cast<std::size_t>(g_) + static_cast<std::size_t>(std::min(static_cast<int>(p(a) * g_), g_ - 1));
    return cell;
  }
  std::vector<Simplex> s_;
  std::vector<std::vector<int>> cells_;
  int n_ = 0;
  int g_ = 1;
  double diam_ = 0.0;
};

std::vector<double> nearest_for_trials(const DeformedMap& m, const CurveSegment& ws, double rho,
                                       const DensityOptions& opt) {
  const SimplexIndex index(simplices(ws), rho);
  const MapView fwd = MapView::forward(m);
  std::vector<double> out(static_cast<std::size_t>(opt.trials));
  parallel_for(out.size(), opt.threads, [&](std::size_t i) {
    auto gen = stream(opt.seed, i, 11);
    Vec c(m.dim());
    for (int a = 0; a < m.dim(); ++a) c(a) = uniform01(gen);
    const TorusPoint x = wrap(c);
    const Mat b = estimate_invariant_splitting(fwd, x, opt.frame_iterations).cu;
    out[i] = index.nearest(x.coords(), b, rho);
  });
  return out;
}

}  // namespace

DensityResult density_check(const DeformedMap& m, const CurveSegment& ws, double eps0, const DensityOptions& opt) {
  if (opt.trials < 1) throw Error("density_check: trials must be >= 1");
  if (eps0 < 0.0) throw Error("density_check: eps0 must be >= 0");
  DensityResult r;
  r.trials = opt.trials;
  r.eps0 = eps0;
  if (eps0 == 0.0) {
    r.nearest.assign(static_cast<std::size_t>(opt.trials), std::numeric_limits<double>::infinity());
    return r;
  }
  r.nearest = nearest_for_trials(m, ws, std::min(eps0, 0.5), opt);
  for (double d : r.nearest) r.hits += d <= eps0 ? 1 : 0;
  r.fraction = static_cast<double>(r.hits) / opt.trials;
  return r;
}

double measure_max_gap(const DeformedMap& m, const CurveSegment& ws, const DensityOptions& opt) {
  if (opt.trials < 1) throw Error("measure_max_gap: trials must be >= 1");
  const auto near = nearest_for_trials(m, ws, 0.5, opt);
  return *std::max_element(near.begin(), near.end());
}

// ---------------------------------------------------------------------------
// flatness

SheetSeed disk_seed(const CuDisk& disk, const Vec& lift_center) {
  const SheetSeed off = disk_offset(disk);
  return [off, lift_center](const Vec& a) -> Vec { return lift_center + off(a); };
}

SheetSeed disk_offset(const CuDisk& disk) {
  const int u = static_cast<int>(disk.basis.cols());
  if (u < 1 || u > 2) throw Error("disk_offset: only 1- and 2-dimensional disks are supported");
  const Mat b = disk.basis;
  const double r = disk.radius;
  return [b, r, u](const Vec& a) -> Vec {
    Vec xi(u);
    if (u == 1) {
      xi(0) = a(0);
    } else {
      // concentric map from the square to the disk
      const double s = a(0), t = a(1);
      if (s == 0.0 && t == 0.0) {
        xi.setZero();
      } else if (std::abs(s) > std::abs(t)) {
        const double phi = 0.25 * 3.14159265358979323846 * (t / s);
        xi << s * std::cos(phi), s * std::sin(phi);
      } else {
        const double phi = 0.5 * 3.14159265358979323846 - 0.25 * 3.14159265358979323846 * (s / t);
        xi << t * std::cos(phi), t * std::sin(phi);
      }
    }
    return Vec(b * (r * xi));
  };
}

namespace {

using CubeKey = std::array<long long, kMaxDim>;

struct CubeHash {
  std::size_t operator()(const CubeKey& k) const {
    std::uint64_t h = 0x84222325cbf29ce4ULL;
    for (long long v : k) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
    return static_cast<std::size_t>(h);
  }
};

using Poly = std::vector<std::array<double, 2>>;

// Keeps the part of the polygon where c0 + c1 s + c2 t >= 0.
Poly clip(const Poly& p, double c0, double c1, double c2) {
  Poly out;
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = p[i];
    const auto& b = p[(i + 1) % n];
    const double fa = c0 + c1 * a[0] + c2 * a[1];
    const double fb = c0 + c1 * b[0] + c2 * b[1];
    if (fa >= 0.0) out.push_back(a);
    if ((fa >= 0.0) != (fb >= 0.0)) {
      const double t = fa / (fa - fb);
      out.push_back({a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])});
    }
  }
  return out;
}

double poly_area(const Poly& p) {
  double a = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& u = p[i];
    const auto& v = p[(i + 1) % p.size()];
    a += u[0] * v[1] - v[0] * u[1];
  }
  return 0.5 * std::abs(a);
}

FlatnessResult flatness_of(const MapView& view, const SheetSeed& seed, const Vec* anchor, int dim, int n,
                           double cube_edge, const FlatnessOptions& opt) {
  if (dim < 1 || dim > 2) throw Error("dynamical_flatness: only 1- and 2-dimensional sheets are supported");
  if (n < 0) throw Error("dynamical_flatness: n must be >= 0");
  if (!(cube_edge > 0.0)) throw Error("dynamical_flatness: cube_edge must be positive");
  const Sheet sh = build_sheet(view, seed, dim, n, opt.resolution_fraction * cube_edge, opt.max_nodes,
                               opt.initial_nodes, 1, anchor);
  CurveSegment c;
  c.dim = dim;
  c.shape = sh.shape;
  c.lift = sh.lift;
  const int d = view.dim();
  std::unordered_map<CubeKey, CompensatedSum, CubeHash> acc;
  FlatnessResult out;
  out.nodes = sh.lift.size();
  CompensatedSum total;
  const auto st = strides_of(sh.shape);
  auto add_simplex = [&](const Vec& p0, const Mat& e) {
    CubeKey lo{}, hi{};
    for (int a = 0; a < d; ++a) {
      double mn = p0(a), mx = p0(a);
      for (int k = 0; k < e.cols(); ++k) {
        mn = std::min(mn, p0(a) + e(a, k));
        mx = std::max(mx, p0(a) + e(a, k));
      }
      lo[static_cast<std::size_t>(a)] = static_cast<long long>(std::floor(mn / cube_edge));
      hi[static_cast<std::size_t>(a)] = static_cast<long long>(std::floor(mx / cube_edge));
    }
    double scale;
    if (e.cols() == 2) {
      const Mat g = e.transpose() * e;
      scale = std::sqrt(std::max(g.determinant(), 0.0));
    } else {
      scale = e.col(0).norm();
    }
    CubeKey key = lo;
    for (;;) {
      double piece;
      if (e.cols() == 2) {
        Poly poly{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
        for (int a = 0; a < d && !poly.empty(); ++a) {
          const double l = key[static_cast<std::size_t>(a)] * cube_edge;
          poly = clip(poly, p0(a) - l, e(a, 0), e(a, 1));
          if (!poly.empty()) poly = clip(poly, l + cube_edge - p0(a), -e(a, 0), -e(a, 1));
        }
        piece = poly.size() >= 3 ? poly_area(poly) * scale : 0.0;
      } else {
        double t0 = 0.0, t1 = 1.0;
        for (int a = 0; a < d; ++a) {
          const double l = key[static_cast<std::size_t>(a)] * cube_edge;
          const double v = e(a, 0);
          if (v == 0.0) {
            if (p0(a) < l || p0(a) > l + cube_edge) t1 = -1.0;
          } else {
            double ta = (l - p0(a)) / v, tb = (l + cube_edge - p0(a)) / v;
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
          }
        }
        piece = t1 > t0 ? (t1 - t0) * scale : 0.0;
      }
      if (piece > 0.0) {
        acc[key].add(piece);
        total.add(piece);
      }
      int a = 0;
      for (; a < d; ++a) {
        auto& k = key[static_cast<std::size_t>(a)];
        if (k < hi[static_cast<std::size_t>(a)]) {
          ++k;
          break;
        }
        k = lo[static_cast<std::size_t>(a)];
      }
      if (a == d) break;
    }
  };
  for (std::size_t i = 0; i < sh.lift.size(); ++i) {
    const auto idx = multi_index(i, sh.shape);
    if (dim == 1) {
      if (idx[0] + 1 >= sh.shape[0]) continue;
      Mat e(d, 1);
      e.col(0) = sh.lift[i + 1] - sh.lift[i];
      add_simplex(sh.lift[i], e);
    } else {
      if (idx[0] + 1 >= sh.shape[0] || idx[1] + 1 >= sh.shape[1]) continue;
      const std::size_t r = i + st[1], dn = i + st[0], rd = i + st[0] + st[1];
      Mat e1(d, 2), e2(d, 2);
      e1.col(0) = sh.lift[r] - sh.lift[i];
      e1.col(1) = sh.lift[dn] - sh.lift[i];
      e2.col(0) = sh.lift[dn] - sh.lift[rd];
      e2.col(1) = sh.lift[r] - sh.lift[rd];
      add_simplex(sh.lift[i], e1);
      add_simplex(sh.lift[rd], e2);
    }
  }
  for (const auto& kv : acc) out.max_area = std::max(out.max_area, kv.second.value());
  out.cubes = acc.size();
  out.total_area = total.value();
  return out;
}

}  // namespace

FlatnessResult dynamical_flatness(const MapView& view, const SheetSeed& seed, int dim, int n, double cube_edge,
                                  const FlatnessOptions& opt) {
  return flatness_of(view, seed, nullptr, dim, n, cube_edge, opt);
}

FlatnessResult dynamical_flatness(const MapView& view, const Vec& anchor, const SheetSeed& offset, int dim, int n,
                                  double cube_edge, const FlatnessOptions& opt) {
  return flatness_of(view, offset, &anchor, dim, n, cube_edge, opt);
}

double cube_projection_area(const Mat& plane) {
  if (plane.cols() != 2) throw Error("cube_projection_area: plane must be 2-dimensional");
  const int n = static_cast<int>(plane.rows());
  double a = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) a += std::abs(plane(i, 0) * plane(j, 1) - plane(i, 1) * plane(j, 0));
  return a;
}

// ---------------------------------------------------------------------------
// serialization

namespace {

constexpr char kMagic[8] = {'D', 'L', 'P', 'A', 'T', 'C', 'H', '1'};

void put_i(std::ostream& os, std::int32_t v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }
void put_d(std::ostream& os, double v) { os.write(reinterpret_cast<const char*>(&v), sizeof v); }
void put_m(std::ostream& os, const Mat& m) {
  put_i(os, static_cast<std::int32_t>(m.rows()));
  put_i(os, static_cast<std::int32_t>(m.cols()));
  for (int j = 0; j < m.cols(); ++j)
    for (int i = 0; i < m.rows(); ++i) put_d(os, m(i, j));
}
std::int32_t get_i(std::istream& is) {
  std::int32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error("read_patch: truncated input");
  return v;
}
double get_d(std::istream& is) {
  double v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error("read_patch: truncated input");
  return v;
}
Mat get_m(std::istream& is) {
  const int r = get_i(is), c = get_i(is);
  if (r < 0 || c < 0 || r > kMaxDim || c > kMaxDim) throw Error("read_patch: bad matrix shape");
  Mat m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = get_d(is);
  return m;
}

}  // namespace

void write_patch(std::ostream& os, const GraphPatch& p) {
  os.write(kMagic, sizeof kMagic);
  const Vec& x = p.base_point.coords();
  put_i(os, static_cast<std::int32_t>(x.size()));
  for (int i = 0; i < x.size(); ++i) put_d(os, x(i));
  put_m(os, p.frame.cs);
  put_m(os, p.frame.cu);
  put_d(os, p.frame.convergence);
  put_i(os, p.flavor == GraphFlavor::cu_graph ? 0 : 1);
  put_d(os, p.k_bound);
  put_d(os, p.convergence);
  const GraphData& g = p.graph;
  put_i(os, g.domain_dim);
  put_i(os, g.value_dim);
  put_i(os, g.grid);
  put_d(os, g.radius);
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    for (int k = 0; k < g.value_dim; ++k) put_d(os, g.values[i](k));
    for (int c = 0; c < g.domain_dim; ++c)
      for (int r = 0; r < g.value_dim; ++r) put_d(os, g.slopes[i](r, c));
  }
}

GraphPatch read_patch(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw Error("read_patch: not a patch file");
  const int n = get_i(is);
  if (n < 1 || n > kMaxDim) throw Error("read_patch: bad dimension");
  Vec x(n);
  for (int i = 0; i < n; ++i) x(i) = get_d(is);
  GraphPatch p;
  p.base_point = TorusPoint::from_wrapped(x);
  p.frame.point = p.base_point;
  p.frame.cs = get_m(is);
  p.frame.cu = get_m(is);
  p.frame.convergence = get_d(is);
  p.flavor = get_i(is) == 0 ? GraphFlavor::cu_graph : GraphFlavor::cs_graph;
  p.k_bound = get_d(is);
  p.convergence = get_d(is);
  GraphData& g = p.graph;
  g.domain_dim = get_i(is);
  g.value_dim = get_i(is);
  g.grid = get_i(is);
  g.radius = get_d(is);
  if (g.domain_dim < 1 || g.value_dim < 0 || g.domain_dim + g.value_dim != n || g.grid < 3)
    throw Error("read_patch: inconsistent graph header");
  const std::size_t count = ipow(g.grid, g.domain_dim);
  g.values.assign(count, Vec::Zero(g.value_dim));
  g.slopes.assign(count, Mat::Zero(g.value_dim, g.domain_dim));
  for (std::size_t i = 0; i < count; ++i) {
    for (int k = 0; k < g.value_dim; ++k) g.values[i](k) = get_d(is);
    for (int c = 0; c < g.domain_dim; ++c)
      for (int r = 0; r < g.value_dim; ++r) g.slopes[i](r, c) = get_d(is);
  }
  return p;
}

void write_patch_csv(std::ostream& os, const GraphPatch& p) {
  const GraphData& g = p.graph;
  const int n = p.base_point.dim();
  for (int a = 0; a < g.domain_dim; ++a) os << "xi" << a << ',';
  for (int k = 0; k < g.value_dim; ++k) os << 'h' << k << ',';
  for (int i = 0; i < n; ++i) os << 'x' << i << (i + 1 < n ? ',' : '\n');
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    const Vec xi = g.node(i);
    for (int a = 0; a < g.domain_dim; ++a) os << num(xi(a)) << ',';
    for (int k = 0; k < g.value_dim; ++k) os << num(g.values[i](k)) << ',';
    const TorusPoint x = p.point(xi);
    for (int k = 0; k < n; ++k) os << num(x[k]) << (k + 1 < n ? ',' : '\n');
  }
}

void write_segment_csv(std::ostream& os, const CurveSegment& c) {
  const int n = c.lift.empty() ? 0 : static_cast<int>(c.lift.front().size());
  os << "index";
  for (int a = 0; a < c.dim; ++a) os << ",i" << a;
  for (int k = 0; k < n; ++k) os << ",lift" << k;
  for (int k = 0; k < n; ++k) os << ",x" << k;
  os << '\n';
  char buf[32];
  for (std::size_t i = 0; i < c.lift.size(); ++i) {
    os << i;
    const auto idx = multi_index(i, c.shape);
    for (int v : idx) os << ',' << v;
    for (int k = 0; k < n; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", c.lift[i](k));
      os << ',' << buf;
    }
    const TorusPoint x = c.point(i);
    for (int k = 0; k < n; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", x[k]);
      os << ',' << buf;
    }
    os << '\n';
  }
}

}  // namespace dalab
