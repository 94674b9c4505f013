#include "dalab/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "dalab/cones.hpp"
#include "dalab/parallel.hpp"
#include "dalab/rng.hpp"

namespace dalab {

double ConditionReport::outside_center_value() const { return std::max(outside_cu_inv_center, outside_cs_center); }
double ConditionReport::outside_cone_value() const { return std::max(outside_cu_inv_cone, outside_cs_cone); }
double ConditionReport::inside_cone_value() const { return std::max(inside_cu_inv_cone, inside_cs_cone); }
bool ConditionReport::cone_invariance_pass() const { return cu_cone_ratio_max < 1.0 && cs_cone_ratio_max < 1.0; }
bool ConditionReport::outside_pass() const { return outside_cone_value() < options.sigma; }
bool ConditionReport::inside_pass() const { return samples_inside == 0 || inside_cone_value() < 1.0 + options.delta0; }
bool ConditionReport::volume_pass() const { return !conservative || det_error_max <= options.det_tolerance; }

TorusPoint sample_point(const DeformedMap& m, std::mt19937_64& gen, bool inside, int site) {
  const int n = m.dim();
  Vec v(n);
  if (!inside || m.sites().empty()) {
    for (int i = 0; i < n; ++i) v(i) = uniform01(gen);
    return wrap(v);
  }
  const auto& s = m.sites()[static_cast<std::size_t>(site) % m.sites().size()];
  for (int i = 0; i < n; ++i) v(i) = normal01(gen);
  v.normalize();
  const double r = s.radius * std::pow(uniform01(gen), 1.0 / n) * (1.0 - 1e-12);
  return wrap(s.center.coords() + r * v);
}

namespace {

struct PointRecord {
  bool inside = false;
  double cu_ratio = 0, cs_ratio = 0, dom = 0, conv = 0;
  double cu_inv_center = 0, cs_center = 0, cu_inv_cone = 0, cs_cone = 0, det_err = 0;
};

}  // namespace

ConditionReport verify_map_conditions(const DeformedMap& m, const ConditionOptions& opt) {
  if (!(opt.aperture > 0.0)) throw Error("verify_map_conditions: aperture must be positive");
  if (opt.samples < 1) throw Error("verify_map_conditions: samples must be >= 1");
  const MapView view = MapView::forward(m);
  const bool has_sites = !m.sites().empty();
  std::vector<PointRecord> recs(static_cast<std::size_t>(opt.samples));
  parallel_for(recs.size(), opt.threads, [&](std::size_t i) {
    auto gen = stream(opt.seed, i);
    const bool want_inside = has_sites && (i % 2 == 1);
    const TorusPoint x = sample_point(m, gen, want_inside, static_cast<int>(i / 2));
    PointRecord r;
    r.inside = m.in_perturbation(x);
    const SplittingFrame fx = estimate_invariant_splitting(view, x, opt.frame_iterations);
    r.conv = fx.convergence;
    Mat jac, jinv;
    view.step(x, jac);
    m.apply_inverse(x, jinv);
    SplittingFrame fy, fz;
    fy.cs = push_subspace(jac, fx.cs);
    fy.cu = push_subspace(jac, fx.cu);
    fz.cs = push_subspace(jinv, fx.cs);
    fz.cu = push_subspace(jinv, fx.cu);
    r.cu_ratio = image_aperture_of(jac, make_cone(fx, ConeKind::center_unstable, opt.aperture), fx, fy,
                                   opt.boundary_samples)
                     .ratio;
    r.cs_ratio =
        image_aperture_of(jinv, make_cone(fx, ConeKind::center_stable, opt.aperture), fx, fz, opt.boundary_samples)
            .ratio;
    r.dom = domination_ratio_of(jac, fx);
    r.cs_center = singular_values(jac * fx.cs).max;
    r.cu_inv_center = 1.0 / singular_values(jac * fx.cu).min;
    r.cs_cone = r.cs_center;
    r.cu_inv_cone = r.cu_inv_center;
    const Cone ccs = make_cone(fx, ConeKind::center_stable, opt.aperture);
    const Cone ccu = make_cone(fx, ConeKind::center_unstable, opt.aperture);
    for (int k = 0; k < opt.planes_per_point; ++k) {
      const bool boundary = k % 2 == 0;
      const Mat ps = random_cone_subspace(ccs, fx, gen, boundary);
      const Mat pu = random_cone_subspace(ccu, fx, gen, boundary);
      r.cs_cone = std::max(r.cs_cone, singular_values(jac * ps).max);
      r.cu_inv_cone = std::max(r.cu_inv_cone, 1.0 / singular_values(jac * pu).min);
    }
    r.det_err = std::abs(std::abs(jac.determinant()) - 1.0);
    recs[i] = r;
  });

  ConditionReport rep;
  rep.options = opt;
  rep.conservative = m.options().conservative;
  for (const auto& r : recs) {
    rep.cu_cone_ratio_max = std::max(rep.cu_cone_ratio_max, r.cu_ratio);
    rep.cs_cone_ratio_max = std::max(rep.cs_cone_ratio_max, r.cs_ratio);
    rep.domination_max = std::max(rep.domination_max, r.dom);
    rep.frame_convergence_max = std::max(rep.frame_convergence_max, r.conv);
    rep.det_error_max = std::max(rep.det_error_max, r.det_err);
    if (r.inside) {
      ++rep.samples_inside;
      rep.inside_cu_inv_center = std::max(rep.inside_cu_inv_center, r.cu_inv_center);
      rep.inside_cs_center = std::max(rep.inside_cs_center, r.cs_center);
      rep.inside_cu_inv_cone = std::max(rep.inside_cu_inv_cone, r.cu_inv_cone);
      rep.inside_cs_cone = std::max(rep.inside_cs_cone, r.cs_cone);
    } else {
      ++rep.samples_outside;
      rep.outside_cu_inv_center = std::max(rep.outside_cu_inv_center, r.cu_inv_center);
      rep.outside_cs_center = std::max(rep.outside_cs_center, r.cs_center);
      rep.outside_cu_inv_cone = std::max(rep.outside_cu_inv_cone, r.cu_inv_cone);
      rep.outside_cs_cone = std::max(rep.outside_cs_cone, r.cs_cone);
    }
  }
  return rep;
}

std::string format_condition_table(const ConditionReport& r) {
  std::ostringstream os;
  char buf[160];
  auto row = [&](const char* name, double value, const char* bound, double b, bool ok) {
    std::snprintf(buf, sizeof buf, "%-34s %12.6g  %-3s %10.6g  %s\n", name, value, bound, b, ok ? "pass" : "FAIL");
    os << buf;
  };
  std::snprintf(buf, sizeof buf, "samples: %d (outside %d, inside %d), aperture %.4g, seed %llu\n",
                r.options.samples, r.samples_outside, r.samples_inside, r.options.aperture,
                static_cast<unsigned long long>(r.options.seed));
  os << buf;
  row("cu cone contraction a'/a", r.cu_cone_ratio_max, "<", 1.0, r.cu_cone_ratio_max < 1.0);
  row("cs cone contraction a'/a", r.cs_cone_ratio_max, "<", 1.0, r.cs_cone_ratio_max < 1.0);
  row("outside: ||(Df|cu)^-1|| (cone sup)", r.outside_cu_inv_cone, "<", r.options.sigma,
      r.outside_cu_inv_cone < r.options.sigma);
  row("outside: ||Df|cs|| (cone sup)", r.outside_cs_cone, "<", r.options.sigma, r.outside_cs_cone < r.options.sigma);
  const double lim = 1.0 + r.options.delta0;
  row("inside: ||(Df|cu)^-1|| (cone sup)", r.inside_cu_inv_cone, "<", lim,
      r.samples_inside == 0 || r.inside_cu_inv_cone < lim);
  row("inside: ||Df|cs|| (cone sup)", r.inside_cs_cone, "<", lim, r.samples_inside == 0 || r.inside_cs_cone < lim);
  if (r.conservative)
    row("| |det Df| - 1 |", r.det_error_max, "<=", r.options.det_tolerance, r.volume_pass());
  row("domination ratio", r.domination_max, "<", 1.0, r.domination_max < 1.0);
  std::snprintf(buf, sizeof buf, "outside center value %.6g, overall %s\n", r.outside_center_value(),
                r.pass() ? "PASS" : "FAIL");
  os << buf;
  return os.str();
}

StrengthSearch find_max_strength(const DeformedMap& m, const ConditionOptions& opt, int iterations) {
  StrengthSearch out;
  auto passes = [&](double t) {
    ++out.evaluations;
    return verify_map_conditions(with_strengths(m, {t}), opt).pass();
  };
  if (m.sites().empty()) {
    out.t_max = 1.0;
    return out;
  }
  if (passes(1.0)) {
    out.t_max = 1.0;
    return out;
  }
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (passes(mid))
      lo = mid;
    else
      hi = mid;
  }
  out.t_max = lo;
  return out;
}

}  // namespace dalab
