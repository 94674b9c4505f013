#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>

#include "dalab/conditions.hpp"
#include "dalab/holonomy.hpp"
#include "dalab/hyperbolicity.hpp"
#include "dalab/manifolds.hpp"
#include "dalab/measures.hpp"
#include "dalab/parallel.hpp"
#include "dalab/rng.hpp"
#include "dalab/scenarios.hpp"
#include "dalab/stats.hpp"
#include "dalab_cli/cli.hpp"

namespace dalab::cli {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::int64_t kBig = 1'000'000'000'000LL;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << "\n";
  }
  template <class... T>
  void row(const T&... v) {
    bool first = true;
    ((os_ << (first ? "" : ",") << cell(v), first = false), ...);
    os_ << "\n";
  }
  std::string str() const { return os_.str(); }

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(long long v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(bool v) { return v ? "1" : "0"; }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }
  std::ostringstream os_;
};

// JSON has no infinity or NaN; those become null.
json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json jvec(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(jnum(x));
  return a;
}

json jpoint(const TorusPoint& p) {
  json a = json::array();
  for (int i = 0; i < p.dim(); ++i) a.push_back(p[i]);
  return a;
}

std::string fmt_line(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

TorusPoint point_or_random(const std::vector<double>& given, int dim, std::uint64_t seed, std::uint64_t tag) {
  Vec v(dim);
  if (!given.empty()) {
    for (int i = 0; i < dim; ++i) v(i) = given[static_cast<std::size_t>(i)];
    return wrap(v);
  }
  auto gen = stream(seed, 0, tag);
  for (int i = 0; i < dim; ++i) v(i) = uniform01(gen);
  return wrap(v);
}

std::vector<TorusPoint> random_points(int count, int dim, std::uint64_t seed, std::uint64_t tag) {
  std::vector<TorusPoint> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    auto gen = stream(seed, static_cast<std::uint64_t>(i), tag);
    Vec v(dim);
    for (int k = 0; k < dim; ++k) v(k) = uniform01(gen);
    out.push_back(wrap(v));
  }
  return out;
}

bool is_linear(const DeformedMap& m) {
  for (const auto& s : m.sites())
    if (s.strength != 0.0) return false;
  return true;
}

// log |eigenvalues| of the integer matrix, descending.
std::vector<double> eigen_exponents(const DeformedMap& m) {
  std::vector<double> e;
  for (const auto& z : m.base().eigenvalues()) e.push_back(std::log(std::abs(z)));
  std::sort(e.rbegin(), e.rend());
  return e;
}

json condition_json(const ConditionReport& r) {
  json j = json::object();
  j["samples_outside"] = r.samples_outside;
  j["samples_inside"] = r.samples_inside;
  j["cu_cone_ratio_max"] = r.cu_cone_ratio_max;
  j["cs_cone_ratio_max"] = r.cs_cone_ratio_max;
  j["domination_max"] = r.domination_max;
  j["frame_convergence_max"] = r.frame_convergence_max;
  j["outside_cu_inverse_center"] = r.outside_cu_inv_center;
  j["outside_cs_center"] = r.outside_cs_center;
  j["outside_cu_inverse_cone"] = r.outside_cu_inv_cone;
  j["outside_cs_cone"] = r.outside_cs_cone;
  j["inside_cu_inverse_cone"] = r.inside_cu_inv_cone;
  j["inside_cs_cone"] = r.inside_cs_cone;
  j["det_error_max"] = r.det_error_max;
  j["sigma"] = r.options.sigma;
  j["delta0"] = r.options.delta0;
  j["cone_invariance_pass"] = r.cone_invariance_pass();
  j["outside_pass"] = r.outside_pass();
  j["inside_pass"] = r.inside_pass();
  j["volume_pass"] = r.volume_pass();
  j["domination_pass"] = r.domination_max < 1.0;
  j["margin"] = condition_margin(r);
  return j;
}

ConditionOptions read_condition_options(const DeformedMap& m, Params& p, std::uint64_t seed, int threads,
                                        const std::string& prefix = "") {
  ConditionOptions o;
  o.samples = static_cast<int>(p.integer(prefix + "samples", 10000, 10, 10'000'000));
  o.sigma = p.real(prefix + "sigma", 0.9, 1e-6, 1.0 - 1e-12);
  o.delta0 = p.real(prefix + "delta0", m.options().delta0, 0.0, 10.0);
  o.aperture = p.real(prefix + "aperture", 0.1, 1e-6, 10.0);
  o.planes_per_point = static_cast<int>(p.integer(prefix + "planes_per_point", 8, 1, 1024));
  o.boundary_samples = static_cast<int>(p.integer(prefix + "boundary_samples", 1000, 1, 1'000'000));
  o.frame_iterations = static_cast<int>(p.integer(prefix + "frame_iterations", 30, 5, 1000));
  o.seed = seed;
  o.threads = threads;
  return o;
}

CommandResult run_map_verify(CommandContext& c) {
  const ConditionOptions o = read_condition_options(c.map, c.params, c.seed, c.threads);
  // reported only; the verdict uses `aperture`
  const auto apertures = c.params.reals("sensitivity_apertures", {0.05, 0.1, 0.2, 0.4}, 1e-6, 10.0);
  const int sens_samples = static_cast<int>(c.params.integer("sensitivity_samples", 500, 10, 10'000'000));
  c.params.finish();
  const ConditionReport r = verify_map_conditions(c.map, o);
  CommandResult res;
  res.summary = condition_json(r);
  res.pass = r.pass() && r.domination_max < 1.0;
  json sens = json::array();
  for (double a : apertures) {
    ConditionOptions so = o;
    so.aperture = a;
    so.samples = sens_samples;
    so.boundary_samples = std::min(o.boundary_samples, sens_samples);
    const ConditionReport sr = verify_map_conditions(c.map, so);
    json j = json::object();
    j["aperture"] = a;
    j["cu_cone_ratio_max"] = sr.cu_cone_ratio_max;
    j["cs_cone_ratio_max"] = sr.cs_cone_ratio_max;
    j["outside_cone"] = sr.outside_cone_value();
    j["inside_cone"] = sr.inside_cone_value();
    j["pass"] = sr.pass();
    sens.push_back(j);
    res.log.push_back(fmt_line("aperture %.3g: outside %.4f, inside %.4f", a, sr.outside_cone_value(),
                               sr.inside_cone_value()));
  }
  res.summary["aperture_sensitivity"] = sens;
  Csv csv({"check", "value", "bound", "pass"});
  const double lim = 1.0 + o.delta0;
  csv.row("cu_cone_ratio", r.cu_cone_ratio_max, 1.0, r.cu_cone_ratio_max < 1.0);
  csv.row("cs_cone_ratio", r.cs_cone_ratio_max, 1.0, r.cs_cone_ratio_max < 1.0);
  csv.row("outside_cu_inverse_cone", r.outside_cu_inv_cone, o.sigma, r.outside_cu_inv_cone < o.sigma);
  csv.row("outside_cs_cone", r.outside_cs_cone, o.sigma, r.outside_cs_cone < o.sigma);
  csv.row("inside_cu_inverse_cone", r.inside_cu_inv_cone, lim, r.samples_inside == 0 || r.inside_cu_inv_cone < lim);
  csv.row("inside_cs_cone", r.inside_cs_cone, lim, r.samples_inside == 0 || r.inside_cs_cone < lim);
  csv.row("det_error", r.det_error_max, o.det_tolerance, r.volume_pass());
  csv.row("domination", r.domination_max, 1.0, r.domination_max < 1.0);
  res.files.push_back({"conditions.csv", csv.str()});
  std::istringstream table(format_condition_table(r));
  for (std::string line; std::getline(table, line);) res.log.push_back(line);
  return res;
}

CommandResult run_lyapunov(CommandContext& c) {
  auto& p = c.params;
  const long long n = p.integer("n", 100000, 100, kBig);
  const auto x0g = p.point("x0", c.map.dim());
  const std::string dir = p.text("direction", "forward", {"forward", "backward"});
  const double tol = p.real("tolerance", 1e-3, 0.0, 1.0);
  p.finish();
  const TorusPoint x0 = point_or_random(x0g, c.map.dim(), c.seed, 51);
  const MapView view = dir == "forward" ? MapView::forward(c.map) : MapView::backward(c.map);
  const LyapunovResult ly = lyapunov_spectrum(view, x0, n);
  CommandResult res;
  res.summary["x0"] = jpoint(x0);
  res.summary["exponents"] = jvec(ly.exponents);
  res.summary["log_det_average"] = ly.log_det_average;
  double sum = 0;
  for (double e : ly.exponents) sum += e;
  res.summary["exponent_sum"] = sum;
  const double sum_error = std::abs(sum - ly.log_det_average);
  res.summary["sum_error"] = sum_error;
  res.pass = sum_error <= 1e-8;
  if (is_linear(c.map)) {
    std::vector<double> oracle = eigen_exponents(c.map);
    if (dir == "backward") {
      for (double& e : oracle) e = -e;
      std::sort(oracle.rbegin(), oracle.rend());
    }
    double dev = 0;
    for (std::size_t i = 0; i < oracle.size(); ++i) dev = std::max(dev, std::abs(oracle[i] - ly.exponents[i]));
    res.summary["oracle"] = jvec(oracle);
    res.summary["oracle_deviation"] = dev;
    res.summary["oracle_pass"] = dev <= tol;
    res.pass = res.pass && dev <= tol;
    res.log.push_back(fmt_line("linear map: max deviation from log|eigenvalues| %.3g (tolerance %.3g)", dev, tol));
  }
  std::vector<std::string> header{"k"};
  for (std::size_t i = 0; i < ly.exponents.size(); ++i) header.push_back("lambda" + std::to_string(i + 1));
  Csv csv(header);
  for (const auto& h : ly.history) {
    std::ostringstream line;
    line << h.k;
    for (double e : h.exponents) line << "," << num(e);
    csv.row(line.str());
  }
  res.files.push_back({"lyapunov.csv", csv.str()});
  return res;
}

CuDisk site_disk(const DeformedMap& m, double radius, const TorusPoint& fallback) {
  const TorusPoint center = m.sites().empty() ? fallback : m.sites()[0].center;
  return make_cu_disk(MapView::forward(m), center, radius);
}

CommandResult run_occupation(CommandContext& c) {
  auto& p = c.params;
  const int starts = static_cast<int>(p.integer("starts", 1000, 10, 10'000'000));
  const long long n = p.integer("n", 10000, 10, kBig);
  const double q = p.real("quantile", 0.01, 0.0, 0.5);
  const double required = p.real("required_fraction", 0.99, 0.0, 1.0);
  const auto tail_n = p.integers("tail_n", {10, 20, 40}, 1, 100000);
  const double tail_eps = p.real("tail_eps", 0.95, 0.0, 1.0);
  const int tail_samples = static_cast<int>(p.integer("tail_samples", 1000, 10, 10'000'000));
  const double disk_radius = p.real("disk_radius", c.map.sites().empty() ? 0.05 : c.map.sites()[0].radius, 1e-6, 0.5);
  p.finish();
  if (tail_n.size() < 2) throw ConfigError("occupation.tail_n: need at least two lengths");

  const auto pts = random_points(starts, c.map.dim(), c.seed, 52);
  std::vector<double> occ(pts.size());
  parallel_for(pts.size(), c.threads, [&](std::size_t i) { occ[i] = occupation_fraction(c.map, pts[i], n); });
  const double eps_hat = quantile(occ, q);
  const double frac = static_cast<double>(std::count_if(occ.begin(), occ.end(), [&](double v) { return v >= eps_hat; })) /
                      static_cast<double>(occ.size());

  const CuDisk disk = site_disk(c.map, disk_radius, wrap(Vec::Constant(c.map.dim(), 0.5)));
  ItineraryOptions io;
  io.eps = tail_eps;
  io.samples = tail_samples;
  io.seed = c.seed;
  io.threads = c.threads;
  std::vector<double> xs, ys, ws;
  json tails = json::array();
  Csv tcsv({"n", "hits", "samples", "fraction", "standard_error"});
  for (auto nn : tail_n) {
    const ItineraryTail t = itinerary_tail(c.map, disk, nn, io);
    // smoothed fraction keeps the log finite when no sample qualifies
    const double ps = (t.hits + 0.5) / (t.samples + 1.0);
    xs.push_back(static_cast<double>(nn));
    ys.push_back(std::log(ps));
    ws.push_back(t.samples * ps / (1.0 - ps));
    json tj = json::object();
    tj["n"] = nn;
    tj["hits"] = t.hits;
    tj["samples"] = t.samples;
    tj["fraction"] = t.fraction;
    tj["standard_error"] = t.standard_error;
    tails.push_back(tj);
    tcsv.row(static_cast<long long>(nn), t.hits, t.samples, t.fraction, t.standard_error);
  }
  const LinearFit fit = fit_line(xs, ys, ws);
  const bool tail_pass = fit.slope + 3.0 * fit.slope_se < 0.0;

  CommandResult res;
  res.summary["eps_hat"] = eps_hat;
  res.summary["fraction_at_least_eps"] = frac;
  res.summary["occupation_min"] = *std::min_element(occ.begin(), occ.end());
  res.summary["occupation_mean"] = mean(occ);
  res.summary["disk_center"] = jpoint(disk.center);
  res.summary["disk_radius"] = disk.radius;
  res.summary["tails"] = tails;
  res.summary["tail_log_slope"] = fit.slope;
  res.summary["tail_log_slope_se"] = fit.slope_se;
  res.summary["tail_pass"] = tail_pass;
  res.pass = eps_hat > 0.0 && frac >= required && tail_pass;
  Csv csv({"start", "occupation"});
  for (std::size_t i = 0; i < occ.size(); ++i) csv.row(i, occ[i]);
  res.files.push_back({"occupation.csv", csv.str()});
  res.files.push_back({"itinerary_tail.csv", tcsv.str()});
  res.log.push_back(fmt_line("eps_hat %.6g, fraction %.4f, tail slope %.4g +- %.3g", eps_hat, frac, fit.slope,
                             fit.slope_se));
  return res;
}

CommandResult run_birkhoff(CommandContext& c) {
  auto& p = c.params;
  const int starts = static_cast<int>(p.integer("starts", 1000, 10, 10'000'000));
  const int n = static_cast<int>(p.integer("n", 100000, 100, 1'000'000'000));
  const double sigma = p.real("sigma", 0.9, 1e-6, 1.0 - 1e-12);
  const double delta0 = p.real("delta0", c.map.options().delta0, 0.0, 10.0);
  const double q = p.real("quantile", 0.99, 0.5, 1.0);
  const double slack = p.real("slack", 0.05, 0.0, 10.0);
  const int warmup = static_cast<int>(p.integer("warmup", 40, 0, 100000));
  p.finish();
  const auto recs = birkhoff_ensemble(c.map, starts, n, c.seed, c.threads, warmup);
  const C0Estimate e = estimate_c0(recs, sigma, delta0, q);
  CommandResult res;
  res.summary["c0"] = e.c0;
  res.summary["eps"] = e.eps;
  res.summary["bound"] = e.bound;
  res.summary["fraction_below"] = e.fraction_below;
  res.summary["fraction_eps"] = e.fraction_eps;
  res.pass = e.c0 > 0.0 && e.fraction_below >= q && e.c0 >= e.bound - slack;
  Csv wide = [&] {
    std::vector<std::string> h{"start"};
    for (int i = 0; i < c.map.dim(); ++i) h.push_back("x" + std::to_string(i + 1));
    h.insert(h.end(), {"cs_terminal", "cu_terminal", "occupation"});
    return Csv(h);
  }();
  for (std::size_t i = 0; i < recs.size(); ++i) {
    std::ostringstream line;
    line << i;
    for (int k = 0; k < recs[i].x0.dim(); ++k) line << "," << num(recs[i].x0[k]);
    line << "," << num(recs[i].cs_terminal) << "," << num(recs[i].cu_terminal) << "," << num(recs[i].occupation);
    wide.row(line.str());
  }
  res.files.push_back({"birkhoff.csv", wide.str()});
  res.log.push_back(fmt_line("c0 %.6g, eps %.6g, bound %.6g, fraction below %.4f", e.c0, e.eps, e.bound,
                             e.fraction_below));
  return res;
}

CommandResult run_manifold(CommandContext& c) {
  auto& p = c.params;
  const auto xg = p.point("x", c.map.dim());
  const double radius = p.real("radius", 0.01, 1e-6, 0.1);
  const int steps = static_cast<int>(p.integer("hadamard_steps", 12, 1, 200));
  const int n = static_cast<int>(p.integer("n", 50, 2, 10000));
  const int samples = static_cast<int>(p.integer("samples", 100, 1, 100000));
  const double cbar = p.real("lambda_bar_c", 0.05, 0.0, 1.0);
  const int probe_steps = static_cast<int>(p.integer("transform_steps", 20, 1, 10000));
  const double k = p.real("transform_slope", 0.1, 1e-6, 1.0);
  const double lin_tol = p.real("linear_tolerance", 1e-9, 0.0, 1.0);
  const double flat_tol = p.real("flat_tolerance", 1e-10, 0.0, 1.0);
  p.finish();
  // default base point: transition annulus of a site, where the stable foliation bends
  const TorusPoint x = xg.empty() ? holonomy_setup(c.map).anchor : point_or_random(xg, c.map.dim(), 0, 0);
  const GraphPatch patch = local_stable_manifold(c.map, x, radius, steps);
  ContractionOptions co;
  co.samples = samples;
  co.seed = c.seed;
  const ContractionResult cv = contraction_verify(c.map, patch, n, co);
  const double lbar = lambda_bar(c.map, x, n, cbar);
  const TransformProbe tp = probe_graph_transform(c.map, x, probe_steps, k, radius);
  CommandResult res;
  res.summary["x"] = jpoint(x);
  res.summary["patch_convergence"] = patch.convergence;
  res.summary["patch_slope_bound"] = patch.k_bound;
  res.summary["patch_grid"] = patch.graph.grid;
  res.summary["contraction_rate"] = cv.rate;
  res.summary["contraction_ratio"] = cv.ratio;
  res.summary["lambda_bar"] = lbar;
  res.summary["theta_max"] = tp.theta_max;
  res.summary["gamma_min"] = tp.gamma_min;
  res.pass = cv.rate <= lbar && lbar < 1.0 && tp.theta_max < 1.0 && lbar < tp.gamma_min;
  if (is_linear(c.map)) {
    const Mat& a = c.map.base().matrix();
    const double oracle = singular_values(Mat(a * c.map.base().stable_basis())).max;
    const double err = std::abs(cv.rate - oracle);
    res.summary["linear_rate_oracle"] = oracle;
    res.summary["linear_rate_error"] = err;
    res.pass = res.pass && err <= lin_tol && patch.k_bound <= flat_tol;
    res.log.push_back(fmt_line("linear map: rate %.15g, ||A|E^s|| %.15g", cv.rate, oracle));
  }
  std::ostringstream pc;
  write_patch_csv(pc, patch);
  res.files.push_back({"patch.csv", pc.str()});
  Csv cc({"k", "max_ratio"});
  for (std::size_t i = 0; i < cv.max_ratio.size(); ++i) cc.row(i, cv.max_ratio[i]);
  res.files.push_back({"contraction.csv", cc.str()});
  Csv tc({"step", "theta", "gamma", "chain_slope_bound"});
  for (std::size_t i = 0; i < tp.theta.size(); ++i) tc.row(i, tp.theta[i], tp.gamma[i], tp.chain_bound[i]);
  res.files.push_back({"graph_transform.csv", tc.str()});
  res.log.push_back(fmt_line("rate %.6g, lambda_bar %.6g, theta_max %.4g, gamma_min %.4g", cv.rate, lbar,
                             tp.theta_max, tp.gamma_min));
  return res;
}

SheetOptions read_sheet_options(Params& p, int threads) {
  SheetOptions so;
  so.resolution = p.real("resolution", 0.02, 1e-4, 1.0);
  so.seed_radius = p.real("seed_radius", 1e-4, 1e-12, 0.1);
  so.hadamard_steps = static_cast<int>(p.integer("hadamard_steps", 12, 1, 200));
  so.max_nodes = static_cast<std::size_t>(p.integer("max_nodes", 2'000'000, 100, 1'000'000'000));
  so.threads = threads;
  return so;
}

CommandResult run_density(CommandContext& c) {
  auto& p = c.params;
  const double length = p.real("length", 2.0, 0.01, 1000.0);
  const int trials = static_cast<int>(p.integer("trials", 1000, 1, 10'000'000));
  const int gap_trials = static_cast<int>(p.integer("gap_trials", 300, 1, 10'000'000));
  const double factor = p.real("eps0_factor", 1.5, 1.0, 100.0);
  // 0 derives eps0 from the gaps of the undeformed sheet
  double eps0 = p.real("eps0", 0.0, 0.0, 0.5);
  const bool eps_given = eps0 > 0.0;
  const double required = p.real("required_fraction", 1.0, 0.0, 1.0);
  const SheetOptions so = read_sheet_options(p, c.threads);
  p.finish();
  DensityOptions dop;
  dop.trials = trials;
  dop.seed = c.seed;
  dop.threads = c.threads;
  const TorusPoint q = c.map.distinguished_point();
  const CurveSegment ws = grow_stable_manifold(c.map, q, length, so);
  CommandResult res;
  double gap0 = 0.0;
  if (!eps_given) {
    const DeformedMap lin = with_strengths(c.map, {0.0});
    const CurveSegment ws0 = grow_stable_manifold(lin, q, length, so);
    DensityOptions gop = dop;
    gop.trials = gap_trials;
    gap0 = measure_max_gap(lin, ws0, gop);
    eps0 = factor * gap0;
    res.summary["linear_gap"] = gap0;
  }
  const DensityResult dr = density_check(c.map, ws, eps0, dop);
  res.summary["eps0"] = eps0;
  res.summary["fraction"] = dr.fraction;
  res.summary["hits"] = dr.hits;
  res.summary["trials"] = dr.trials;
  res.summary["sheet_nodes"] = ws.size();
  res.summary["sheet_certified"] = ws.certified;
  res.summary["sheet_max_gap"] = ws.max_gap();
  double worst = 0;
  for (double v : dr.nearest) worst = std::max(worst, v);
  res.summary["largest_needed_radius"] = jnum(worst);
  res.pass = dr.fraction >= required;
  Csv csv({"trial", "nearest_radius", "hit"});
  for (std::size_t i = 0; i < dr.nearest.size(); ++i) csv.row(i, dr.nearest[i], dr.nearest[i] <= eps0);
  res.files.push_back({"density.csv", csv.str()});
  std::ostringstream sc;
  write_segment_csv(sc, ws);
  res.files.push_back({"stable_sheet.csv", sc.str()});
  res.log.push_back(fmt_line("eps0 %.4g, fraction %.4f, sheet nodes %.0f", eps0, dr.fraction,
                             static_cast<double>(ws.size())));
  return res;
}

CommandResult run_flatness(CommandContext& c) {
  auto& p = c.params;
  const auto ns = p.integers("n", {5, 10, 15}, 0, 200);
  const double extent = p.real("extent", 4.0, 1e-3, 100.0);
  const auto cg = p.point("center", c.map.dim());
  const double cube = p.real("cube_edge", 1.0, 1e-3, 100.0);
  const double res_frac = p.real("resolution_fraction", 0.05, 1e-3, 1.0);
  const double growth = p.real("growth_tolerance", 0.1, 0.0, 10.0);
  p.finish();
  const MapView fwd = MapView::forward(c.map);
  const int u = c.map.base().unstable_dim();
  if (u < 1 || u > 2) throw ConfigError("flatness: only unstable dimension 1 or 2 is supported");
  Vec center(c.map.dim());
  if (cg.empty())
    center = holonomy_setup(c.map).anchor.coords();
  else
    for (int i = 0; i < c.map.dim(); ++i) center(i) = cg[static_cast<std::size_t>(i)];
  double lmax = 0;
  for (const auto& z : c.map.base().eigenvalues()) lmax = std::max(lmax, std::abs(z));
  const Mat& eu = c.map.base().unstable_basis();
  const double bound = u == 2 ? cube * cube * cube_projection_area(eu) : cube * std::sqrt(double(c.map.dim()));
  FlatnessOptions fo;
  fo.resolution_fraction = res_frac;
  CommandResult res;
  json rows = json::array();
  Csv csv({"n", "seed_radius", "max_area", "total_area", "cubes", "nodes"});
  std::vector<double> areas;
  for (auto n : ns) {
    // the image of the seed spans about `extent` cubes along the strongest direction
    CuDisk disk = make_cu_disk(fwd, wrap(center), extent * cube / std::pow(lmax, static_cast<double>(n)));
    const FlatnessResult fr = dynamical_flatness(fwd, center, disk_offset(disk), u, static_cast<int>(n), cube, fo);
    areas.push_back(fr.max_area);
    json r = json::object();
    r["n"] = n;
    r["seed_radius"] = disk.radius;
    r["max_area"] = fr.max_area;
    r["total_area"] = fr.total_area;
    r["cubes"] = fr.cubes;
    r["nodes"] = fr.nodes;
    rows.push_back(r);
    csv.row(static_cast<long long>(n), disk.radius, fr.max_area, fr.total_area, fr.cubes, fr.nodes);
    res.log.push_back(fmt_line("n %.0f: max area %.6g, total %.6g", static_cast<double>(n), fr.max_area,
                               fr.total_area));
  }
  bool bounded = true, steady = true;
  for (std::size_t i = 0; i < areas.size(); ++i) {
    bounded = bounded && areas[i] <= bound;
    if (i > 0) steady = steady && areas[i] <= (1.0 + growth) * areas[i - 1];
  }
  res.summary["rows"] = rows;
  res.summary["area_bound"] = bound;
  res.summary["bounded"] = bounded;
  res.summary["non_increasing"] = steady;
  res.pass = bounded && steady;
  res.files.push_back({"flatness.csv", csv.str()});
  return res;
}

ObservableSet read_observables(const DeformedMap& m, Params& p) {
  const int count = static_cast<int>(p.integer("observables", 8, 1, 64));
  return ObservableSet::standard(m, count);
}

CommandResult run_srb(CommandContext& c) {
  auto& p = c.params;
  const int n = static_cast<int>(p.integer("n", 1000, 1, 100'000'000));
  const int samples = static_cast<int>(p.integer("samples", 10000, 20, 100'000'000));
  const double radius = p.real("radius", 0.02, 1e-6, 0.2);
  const auto ag = p.point("disk_a", c.map.dim());
  const auto bg = p.point("disk_b", c.map.dim());
  const bool same = p.flag("same_disk", false);
  const double min_distance = p.real("min_distance", 0.3, 0.0, 1.0);
  const ObservableSet obs = read_observables(c.map, p);
  UniquenessOptions uo;
  uo.pushforward.grid = static_cast<int>(p.integer("grid", 64, 2, 4096));
  uo.pushforward.groups = static_cast<int>(p.integer("groups", 20, 2, 10000));
  uo.pushforward.aperture = p.real("aperture", 0.1, 1e-6, 10.0);
  uo.pushforward.threads = c.threads;
  uo.bootstrap = static_cast<int>(p.integer("bootstrap", 20, 2, 100000));
  const int app_points = static_cast<int>(p.integer("cloud_points", 1000, 0, 100'000'000));
  const int app_n = static_cast<int>(p.integer("cloud_n", 10000, 100, 1'000'000'000));
  const double app_required = p.real("cloud_required_fraction", 0.95, 0.0, 1.0);
  p.finish();
  if (uo.pushforward.groups > samples) throw ConfigError("srb.groups: must not exceed srb.samples");

  const MapView fwd = MapView::forward(c.map);
  auto [da, db] = distant_disks(c.map, c.seed, radius, min_distance);
  if (!ag.empty()) da = make_cu_disk(fwd, point_or_random(ag, c.map.dim(), 0, 0), radius);
  if (!bg.empty()) db = make_cu_disk(fwd, point_or_random(bg, c.map.dim(), 0, 0), radius);
  if (same) db = da;
  EmpiricalMeasure ma, mb;
  const UniquenessResult ur = srb_uniqueness_distance(c.map, da, db, n, samples, c.seed, obs, uo, &ma, &mb);
  CommandResult res;
  res.summary["conservative"] = c.map.options().conservative;
  res.summary["disk_a"] = jpoint(da.center);
  res.summary["disk_b"] = jpoint(db.center);
  res.summary["disk_distance"] = torus_distance(da.center, db.center);
  res.summary["distance_tv"] = ur.distance.tv_max;
  res.summary["distance_observables"] = ur.distance.observable_max;
  res.summary["distance"] = ur.distance.total();
  res.summary["baseline"] = ur.baseline.total();
  res.summary["noise_mean"] = ur.noise.mean;
  res.summary["noise_stddev"] = ur.noise.stddev;
  res.summary["threshold"] = ur.threshold();
  res.summary["uniqueness_pass"] = ur.pass();
  res.summary["mass_a"] = ma.total_weight();
  res.pass = ur.pass();
  if (app_points > 0) {
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(app_points), ma.cloud.size());
    const std::vector<TorusPoint> pts(ma.cloud.begin(), ma.cloud.begin() + static_cast<long>(k));
    const double frac = negative_cs_fraction(c.map, pts, app_n, c.threads);
    res.summary["cloud_negative_cs_fraction"] = frac;
    res.summary["cloud_pass"] = frac >= app_required;
    res.pass = res.pass && frac >= app_required;
    res.log.push_back(fmt_line("cloud: negative cs-average fraction %.4f over %.0f points", frac,
                               static_cast<double>(k)));
  }
  std::ostringstream ca, cb;
  write_cloud_csv(ca, ma);
  write_cloud_csv(cb, mb);
  res.files.push_back({"cloud_a.csv", ca.str()});
  res.files.push_back({"cloud_b.csv", cb.str()});
  for (std::size_t i = 0; i < ma.pairs.size(); ++i) {
    const std::string tag = std::to_string(ma.pairs[i].first + 1) + std::to_string(ma.pairs[i].second + 1);
    std::ostringstream ha, hb;
    write_histogram_csv(ha, ma, i);
    write_histogram_csv(hb, mb, i);
    res.files.push_back({"histogram_a_" + tag + ".csv", ha.str()});
    res.files.push_back({"histogram_b_" + tag + ".csv", hb.str()});
  }
  Csv bc({"replicate", "distance"});
  for (std::size_t i = 0; i < ur.noise.replicates.size(); ++i) bc.row(i, ur.noise.replicates[i]);
  res.files.push_back({"bootstrap.csv", bc.str()});
  Csv oc({"observable", "integral_a", "integral_b", "lebesgue"});
  const auto ia = ma.integrals(), ib = mb.integrals();
  for (std::size_t i = 0; i < obs.size(); ++i) oc.row(obs[i].name, ia[i], ib[i], obs[i].lebesgue_integral);
  res.files.push_back({"observables.csv", oc.str()});
  res.log.push_back(fmt_line("distance %.5g, baseline %.5g, noise sd %.3g, threshold %.5g", ur.distance.total(),
                             ur.baseline.total(), ur.noise.stddev, ur.threshold()));
  return res;
}

CommandResult run_ergodicity(CommandContext& c) {
  auto& p = c.params;
  const int starts = static_cast<int>(p.integer("starts", 100, 2, 10'000'000));
  const long long n = p.integer("n", 100000, 1, kBig);
  const ObservableSet obs = read_observables(c.map, p);
  p.finish();
  const DispersionResult d = ergodicity_dispersion(c.map, starts, n, obs, c.seed, c.threads);
  CommandResult res;
  res.summary["dispersion"] = d.dispersion;
  res.summary["envelope"] = d.envelope;
  res.summary["observables"] = obs.names();
  res.summary["stddev"] = jvec(d.stddev);
  std::vector<double> means;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    std::vector<double> col;
    for (const auto& row : d.averages) col.push_back(row[k]);
    means.push_back(mean(col));
  }
  res.summary["means"] = jvec(means);
  res.pass = d.within_envelope();
  std::vector<std::string> header{"start"};
  for (const auto& nm : obs.names()) header.push_back(nm);
  Csv csv(header);
  for (std::size_t i = 0; i < d.averages.size(); ++i) {
    std::ostringstream line;
    line << i;
    for (double v : d.averages[i]) line << "," << num(v);
    csv.row(line.str());
  }
  res.files.push_back({"averages.csv", csv.str()});
  res.log.push_back(fmt_line("dispersion %.5g, envelope %.5g", d.dispersion, d.envelope));
  return res;
}

HolonomySetupOptions read_setup(Params& p) {
  HolonomySetupOptions so;
  so.site = static_cast<int>(p.integer("site", -1, -1, 1000));
  so.offset_fraction = p.real("offset_fraction", 0.75, 0.0, 2.0);
  so.source_radius = p.real("source_radius", 0.01, 1e-5, 0.1);
  so.target_distance = p.real("target_distance", 0.008, 0.0, 0.1);
  so.target_radius = p.real("target_radius", 0.015, 1e-5, 0.1);
  so.tilt = p.real("tilt", 0.04, 0.0, 1.0);
  return so;
}

CommandResult run_holonomy(CommandContext& c) {
  auto& p = c.params;
  const HolonomySetupOptions so = read_setup(p);
  const double spacing = p.real("spacing", 0.0007, 1e-5, 0.1);
  const auto radii = p.reals("radii", {0.006, 0.003, 0.0015}, 1e-6, 0.1);
  const int count = static_cast<int>(p.integer("subdisks", 20, 1, 100000));
  const int min_points = static_cast<int>(p.integer("min_points", 10, 3, 100000));
  const double drift_limit = p.real("drift_tolerance", 0.2, 0.0, 10.0);
  const double lin_tol = p.real("linear_tolerance", 1e-8, 0.0, 1.0);
  HolonomyOptions ho;
  ho.patch_radius = p.real("patch_radius", 0.02, 1e-4, 0.1);
  ho.polish_steps = static_cast<int>(p.integer("polish_steps", 12, 0, 100));
  ho.shooting_steps = static_cast<int>(p.integer("shooting_steps", 8, 0, 100));
  ho.threads = c.threads;
  p.finish();
  const HolonomySetup setup = holonomy_setup(c.map, so);
  const auto params = grid_source(setup.source, spacing);
  const HolonomyPair hp = stable_holonomy(c.map, setup.source, params, setup.target, ho);
  CommandResult res;
  res.summary["site"] = setup.site;
  res.summary["anchor"] = jpoint(setup.anchor);
  res.summary["source_points"] = params.size();
  res.summary["matched"] = hp.matched_count();
  res.summary["match_fraction"] = hp.match_fraction();
  double max_shift = 0, max_contraction = 0;
  for (const auto& m : hp.matches)
    if (m.matched) {
      max_shift = std::max(max_shift, m.polish_shift);
      max_contraction = std::max(max_contraction, m.contraction);
    }
  res.summary["max_polish_shift"] = max_shift;
  res.summary["max_shooting_contraction"] = max_contraction;
  json rows = json::array();
  Csv rc({"r", "subdisk", "ratio"});
  std::vector<double> ks;
  bool finite = true;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const MeasureRatio mr = holonomy_measure_ratio(hp, radii[i], count, c.seed + i, min_points);
    const double k = mr.ratios.empty() ? kInf : mr.max_ratio;
    finite = finite && std::isfinite(k) && k > 0.0;
    ks.push_back(k);
    double mn = kInf;
    for (double v : mr.ratios) mn = std::min(mn, v);
    json r = json::object();
    r["r"] = radii[i];
    r["max_ratio"] = jnum(k);
    r["min_ratio"] = jnum(mn);
    r["used"] = mr.ratios.size();
    r["skipped"] = mr.skipped;
    rows.push_back(r);
    for (std::size_t j = 0; j < mr.ratios.size(); ++j) rc.row(radii[i], j, mr.ratios[j]);
    res.log.push_back(fmt_line("r %.4g: K %.10g (min %.10g)", radii[i], k, mn));
  }
  double drift = 0;
  for (std::size_t i = 1; i < ks.size(); ++i) drift = std::max(drift, std::abs(ks[i] / ks[0] - 1.0));
  res.summary["ratios"] = rows;
  res.summary["max_ratio"] = jnum(*std::max_element(ks.begin(), ks.end()));
  res.summary["drift"] = jnum(finite ? drift : kInf);
  res.pass = finite && drift < drift_limit;
  if (is_linear(c.map)) {
    const double det = linear_holonomy_jacobian(c.map, setup.source, setup.target);
    double err = 0;
    for (std::size_t i = 0; i < radii.size(); ++i) {
      const MeasureRatio mr = holonomy_measure_ratio(hp, radii[i], count, c.seed + i, min_points);
      for (double v : mr.ratios) err = std::max(err, std::abs(v - det));
    }
    res.summary["linear_jacobian"] = det;
    res.summary["linear_error"] = err;
    res.pass = res.pass && err <= lin_tol;
    res.log.push_back(fmt_line("linear map: projection determinant %.12g, max error %.3g", det, err));
  }
  std::ostringstream hc;
  write_holonomy_csv(hc, hp);
  res.files.push_back({"holonomy.csv", hc.str()});
  res.files.push_back({"measure_ratios.csv", rc.str()});
  return res;
}

CommandResult run_distortion(CommandContext& c) {
  auto& p = c.params;
  const HolonomySetupOptions so = read_setup(p);
  StablePairOptions po;
  po.count = static_cast<int>(p.integer("pairs", 100, 1, 100000));
  po.anchors = static_cast<int>(p.integer("anchors", 5, 1, 100000));
  po.offset = p.real("offset", 0.005, 1e-8, 0.01);
  po.spread = p.real("spread", 0.004, 0.0, 0.5);
  po.aperture = p.real("aperture", 0.05, 0.0, 1.0);
  po.seed = c.seed;
  const int n = static_cast<int>(p.integer("n", 40, 2, 10000));
  const std::string mode = p.text("mode", "pushed", {"pushed", "fixed"});
  const double limit = p.real("slope_limit", 0.01, 0.0, 10.0);
  const int holder_n = static_cast<int>(p.integer("holder_n", 30, 0, 10000));
  p.finish();
  const HolonomySetup setup = holonomy_setup(c.map, so);
  const auto pairs = stable_pairs(c.map, setup.anchor, po);
  DistortionOptions dop;
  dop.mode = mode == "pushed" ? SubspaceMode::pushed : SubspaceMode::fixed;
  std::vector<DistortionRecord> recs(pairs.size());
  parallel_for(pairs.size(), c.threads, [&](std::size_t i) {
    recs[i] = distortion_ratio(c.map, pairs[i].x, pairs[i].y_offset, pairs[i].s1, pairs[i].s2, n, dop);
  });
  double worst = 0, worst_gap = 0;
  int truncated = 0;
  Csv csv({"pair", "slope", "slope_se", "final_gap", "safe_n", "truncated"});
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    worst = std::max(worst, std::abs(r.slope));
    const double g = r.gap.empty() ? 0.0 : r.gap.back();
    worst_gap = std::max(worst_gap, g);
    truncated += r.truncated ? 1 : 0;
    csv.row(i, r.slope, r.slope_se, g, r.safe_n, r.truncated);
  }
  CommandResult res;
  res.summary["anchor"] = jpoint(setup.anchor);
  res.summary["pairs"] = recs.size();
  res.summary["max_abs_slope"] = worst;
  res.summary["max_final_gap"] = worst_gap;
  res.summary["truncated"] = truncated;
  res.pass = worst <= limit && truncated == 0;
  std::optional<HolderFit> fit;
  if (holder_n > 0) {
    try {
      fit = angle_holder_fit(c.map, pairs, holder_n);
    } catch (const Error& e) {
      // too few pairs for a fit; reported, not fatal
      res.summary["angle_holder"] = nullptr;
      res.log.push_back(std::string("angle fit skipped: ") + e.what());
    }
  }
  if (fit) {
    const HolderFit& hf = *fit;
    json h = json::object();
    h["alpha"] = hf.alpha;
    h["constant"] = hf.constant;
    h["theta"] = hf.theta;
    h["lambda_dom"] = hf.lambda_dom;
    h["pairs"] = hf.pairs;
    res.summary["angle_holder"] = h;
    res.log.push_back(fmt_line("angle fit: alpha %.4g, C %.4g, theta %.4g, lambda_dom %.4g", hf.alpha, hf.constant,
                               hf.theta, hf.lambda_dom));
  }
  res.files.push_back({"distortion.csv", csv.str()});
  if (!recs.empty()) {
    std::ostringstream g;
    write_distortion_csv(g, recs.front());
    res.files.push_back({"gap_first_pair.csv", g.str()});
  }
  res.log.push_back(fmt_line("max |slope| %.4g (limit %.4g), max final gap %.4g", worst, limit, worst_gap));
  return res;
}

CommandResult run_scan(CommandContext& c) {
  auto& p = c.params;
  const auto fractions = p.reals("fractions", {0.0, 0.25, 0.5, 0.75, 1.0}, 0.0, 10.0);
  double t_max = p.real("t_max", 0.0, 0.0, 1.0);
  const int search_iterations = static_cast<int>(p.integer("search_iterations", 12, 1, 60));
  ScanProbe probe;
  probe.starts = static_cast<int>(p.integer("starts", 100, 2, 10'000'000));
  probe.n = p.integer("n", 100000, 1, kBig);
  probe.observables = static_cast<int>(p.integer("observables", 8, 1, 64));
  probe.seed = c.seed;
  probe.threads = c.threads;
  const ConditionOptions co = read_condition_options(c.map, p, c.seed, c.threads, "condition_");
  p.finish();
  CommandResult res;
  if (t_max <= 0.0) {
    // same samples as the rows, so the top row passes by construction
    const StrengthSearch s = find_max_strength(c.map, co, search_iterations);
    t_max = s.t_max;
    res.summary["t_max_evaluations"] = s.evaluations;
  }
  res.summary["t_max"] = t_max;
  std::vector<double> strengths;
  for (double f : fractions) strengths.push_back(f * t_max);
  const auto rows = stability_scan(c.map, strengths, probe, co);
  json jr = json::array();
  Csv csv({"strength", "conditions_pass", "margin", "probed", "dispersion", "envelope", "pass"});
  bool all = true;
  for (const auto& r : rows) {
    json j = json::object();
    j["strength"] = r.strength;
    j["conditions_pass"] = r.conditions_pass;
    j["margin"] = r.margin;
    j["probed"] = r.probed;
    j["dispersion"] = r.dispersion;
    j["envelope"] = r.envelope;
    j["pass"] = r.pass();
    jr.push_back(j);
    all = all && r.pass();
    csv.row(r.strength, r.conditions_pass, r.margin, r.probed, r.dispersion, r.envelope, r.pass());
    res.log.push_back(fmt_line("strength %.6g: margin %.4g, dispersion %.4g, envelope %.4g", r.strength, r.margin,
                               r.dispersion, r.envelope));
  }
  res.summary["rows"] = jr;
  res.pass = all;
  res.files.push_back({"scan.csv", csv.str()});
  return res;
}

}  // namespace

const std::vector<CommandInfo>& commands() {
  static const std::vector<CommandInfo> list = {
      {"map-verify",
       "cone fields are invariant, the splitting is dominated, the map contracts cs and expands cu by sigma outside "
       "the deformation region and by at most 1+delta0 inside it, and volume is preserved in conservative mode",
       true, run_map_verify},
      {"lyapunov", "Lyapunov spectrum along a long orbit; for the undeformed map it equals the log moduli of the "
                   "eigenvalues of the integer matrix",
       true, run_lyapunov},
      {"occupation",
       "orbits spend a positive fraction of time outside the deformation region, and points of a cu-disk that stay "
       "mostly inside it become geometrically rare",
       true, run_occupation},
      {"birkhoff",
       "Birkhoff averages of log ||Df|E^cs|| and log ||(Df|E^cu)^-1|| are bounded by -c0 < 0 for almost every start, "
       "with c0 close to -log(sigma^eps (1+delta0)^(1-eps))",
       true, run_birkhoff},
      {"manifold",
       "local stable graphs exist and contract at rate at most lambda_bar < 1, and the cu graph transform contracts "
       "slopes while expanding domains by gamma > lambda_bar",
       true, run_manifold},
      {"density", "random cu-disks of radius eps0 meet the stable manifold of the fixed point q", true, run_density},
      {"flatness", "iterated cu-disks stay dynamically flat: the area inside any unit cube remains bounded", false,
       run_flatness},
      {"srb",
       "push-forwards of Lebesgue measure on two unrelated cu-disks converge to the same measure, and its typical "
       "points have negative cs-exponent",
       true, run_srb},
      {"ergodicity", "time averages of smooth observables do not depend on the starting point", true, run_ergodicity},
      {"holonomy",
       "stable holonomy between cu-transversals is absolutely continuous with a bounded Jacobian that is stable under "
       "refinement",
       true, run_holonomy},
      {"distortion",
       "log-Jacobians along cu-subspaces at points of the same stable leaf stay uniformly close, with angles decaying "
       "at a Holder rate",
       true, run_distortion},
      {"scan", "conditions and ergodic behaviour persist across a range of deformation strengths", true, run_scan},
  };
  return list;
}

}  // namespace dalab::cli
