#include "dalab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "dalab/hyperbolicity.hpp"
#include "dalab/parallel.hpp"
#include "dalab/rng.hpp"

namespace dalab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string vector_label(const std::vector<int>& m) {
  std::string s = "(";
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(m[i]);
  }
  return s + ")";
}

TorusPoint uniform_point(int n, std::mt19937_64& gen) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = uniform01(gen);
  return TorusPoint::from_wrapped(v);
}

EmpiricalMeasure empty_measure(int dim, int n, int samples, const ObservableSet& obs, const PushforwardOptions& opt) {
  if (n < 1) throw Error("pushforward_average: n must be >= 1");
  if (samples < 1) throw Error("pushforward_average: samples must be >= 1");
  if (opt.grid < 1) throw Error("pushforward_average: grid must be >= 1");
  if (opt.groups < 1) throw Error("pushforward_average: groups must be >= 1");
  EmpiricalMeasure mu;
  mu.dim = dim;
  mu.grid = opt.grid;
  mu.groups = std::min(opt.groups, samples);
  mu.samples = samples;
  mu.steps = n;
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j) mu.pairs.emplace_back(i, j);
  mu.observable_names = obs.names();
  const auto cells = static_cast<std::size_t>(opt.grid) * static_cast<std::size_t>(opt.grid);
  mu.counts.assign(static_cast<std::size_t>(mu.groups),
                   std::vector<std::vector<std::uint64_t>>(mu.pairs.size(), std::vector<std::uint64_t>(cells, 0)));
  mu.sums.assign(static_cast<std::size_t>(mu.groups), std::vector<CompensatedSum>(obs.size()));
  mu.group_points.assign(static_cast<std::size_t>(mu.groups), 0);
  mu.starts.resize(static_cast<std::size_t>(samples));
  mu.cloud.resize(static_cast<std::size_t>(samples));
  return mu;
}

// Fills every group of `mu` from its starting points (already stored).
void accumulate(const DeformedMap& m, const ObservableSet& obs, EmpiricalMeasure& mu, int threads) {
  const int g = mu.grid;
  const auto n = mu.steps;
  parallel_for(static_cast<std::size_t>(mu.groups), threads, [&](std::size_t grp) {
    auto& counts = mu.counts[grp];
    auto& sums = mu.sums[grp];
    std::vector<double> vals(obs.size());
    std::uint64_t points = 0;
    for (std::size_t i = grp; i < mu.starts.size(); i += static_cast<std::size_t>(mu.groups)) {
      TorusPoint x = mu.starts[i];
      for (long long j = 0; j < n; ++j) {
        if (j > 0) x = m.apply(x);
        const Vec& c = x.coords();
        int bin[kMaxDim];
        for (int a = 0; a < mu.dim; ++a) bin[a] = std::min(g - 1, static_cast<int>(c(a) * g));
        for (std::size_t p = 0; p < mu.pairs.size(); ++p)
          ++counts[p][static_cast<std::size_t>(bin[mu.pairs[p].first]) * static_cast<std::size_t>(g) +
                      static_cast<std::size_t>(bin[mu.pairs[p].second])];
        if (!vals.empty()) {
          obs.evaluate(c, vals.data());
          for (std::size_t k = 0; k < vals.size(); ++k) sums[k].add(vals[k]);
        }
        ++points;
      }
      mu.cloud[i] = x;
    }
    mu.group_points[grp] = points;
  });
}

}  // namespace

ObservableSet ObservableSet::fourier(int dim, int count) {
  if (dim < 1 || dim > kMaxDim) throw Error("ObservableSet::fourier: bad dimension");
  std::vector<std::vector<int>> ms;
  std::vector<int> m(static_cast<std::size_t>(dim), -1);
  for (;;) {
    int first = 0;
    for (int v : m)
      if (v != 0) {
        first = v;
        break;
      }
    if (first > 0) ms.push_back(m);
    int i = dim - 1;
    while (i >= 0 && m[static_cast<std::size_t>(i)] == 1) m[static_cast<std::size_t>(i--)] = -1;
    if (i < 0) break;
    ++m[static_cast<std::size_t>(i)];
  }
  std::stable_sort(ms.begin(), ms.end(), [](const std::vector<int>& a, const std::vector<int>& b) {
    int na = 0, nb = 0;
    for (int v : a) na += std::abs(v);
    for (int v : b) nb += std::abs(v);
    if (na != nb) return na < nb;
    return a > b;
  });
  std::vector<Observable> out;
  for (const auto& mv : ms) {
    Vec k(dim);
    for (int i = 0; i < dim; ++i) k(i) = kTwoPi * mv[static_cast<std::size_t>(i)];
    out.push_back({"cos" + vector_label(mv), [k](const Vec& x) { return std::cos(k.dot(x)); }, 1.0, 0.0});
    out.push_back({"sin" + vector_label(mv), [k](const Vec& x) { return std::sin(k.dot(x)); }, 1.0, 0.0});
  }
  if (count >= 0 && static_cast<std::size_t>(count) < out.size()) out.resize(static_cast<std::size_t>(count));
  return ObservableSet(std::move(out));
}

Observable ObservableSet::site_bump(const DeformedMap& m, int site) {
  if (site < 0 || site >= static_cast<int>(m.sites().size())) throw Error("ObservableSet::site_bump: no such site");
  const DeformationSite& s = m.sites()[static_cast<std::size_t>(site)];
  const Vec c = s.center.coords();
  const double r = s.radius;
  const int n = m.dim();
  const double integral = std::pow(std::numbers::pi, 0.5 * n) * 6.0 / std::tgamma(0.5 * n + 4.0) * std::pow(r, n);
  return {"bump(site " + std::to_string(site) + ")",
          [c, r](const Vec& x) {
            const double s2 = centered_difference(x, c).squaredNorm() / (r * r);
            if (s2 >= 1.0) return 0.0;
            const double w = 1.0 - s2;
            return w * w * w;
          },
          1.0, integral};
}

ObservableSet ObservableSet::standard(const DeformedMap& m, int count) {
  if (count < 1) throw Error("ObservableSet::standard: count must be >= 1");
  if (m.sites().empty()) return fourier(m.dim(), count);
  ObservableSet s = fourier(m.dim(), count - 1);
  s.add(site_bump(m, 0));
  return s;
}

ObservableSet ObservableSet::constant(int dim, double c) {
  (void)dim;
  return ObservableSet({{"const", [c](const Vec&) { return c; }, std::abs(c), c}});
}

double ObservableSet::max_sup_norm() const {
  double s = 0.0;
  for (const auto& o : obs_) s = std::max(s, o.sup_norm);
  return s;
}

std::vector<std::string> ObservableSet::names() const {
  std::vector<std::string> v;
  for (const auto& o : obs_) v.push_back(o.name);
  return v;
}

void ObservableSet::evaluate(const Vec& x, double* out) const {
  for (std::size_t i = 0; i < obs_.size(); ++i) out[i] = obs_[i].eval(x);
}

std::uint64_t EmpiricalMeasure::total_points() const {
  std::uint64_t t = 0;
  for (auto p : group_points) t += p;
  return t;
}

double EmpiricalMeasure::total_weight() const {
  if (pairs.empty()) return total_points() > 0 ? 1.0 : 0.0;
  CompensatedSum s;
  for (double v : histogram(0)) s.add(v);
  return s.value();
}

namespace {

std::vector<int> resolve(const EmpiricalMeasure& mu, const std::vector<int>& w) {
  if (w.empty()) return std::vector<int>(static_cast<std::size_t>(mu.groups), 1);
  if (w.size() != static_cast<std::size_t>(mu.groups)) throw Error("EmpiricalMeasure: weight vector has wrong size");
  return w;
}

}  // namespace

std::vector<double> EmpiricalMeasure::histogram(std::size_t pair, const std::vector<int>& weights) const {
  if (pair >= pairs.size()) throw Error("EmpiricalMeasure::histogram: no such pair");
  const auto w = resolve(*this, weights);
  const std::size_t cells = static_cast<std::size_t>(grid) * static_cast<std::size_t>(grid);
  std::vector<std::uint64_t> acc(cells, 0);
  std::uint64_t total = 0;
  for (std::size_t g = 0; g < counts.size(); ++g) {
    if (w[g] == 0) continue;
    const auto k = static_cast<std::uint64_t>(w[g]);
    for (std::size_t c = 0; c < cells; ++c) acc[c] += k * counts[g][pair][c];
    total += k * group_points[g];
  }
  std::vector<double> h(cells, 0.0);
  if (total == 0) return h;
  for (std::size_t c = 0; c < cells; ++c) h[c] = static_cast<double>(acc[c]) / static_cast<double>(total);
  return h;
}

std::vector<double> EmpiricalMeasure::integrals(const std::vector<int>& weights) const {
  const auto w = resolve(*this, weights);
  std::vector<double> out(observable_names.size(), 0.0);
  std::uint64_t total = 0;
  for (std::size_t g = 0; g < sums.size(); ++g) total += static_cast<std::uint64_t>(w[g]) * group_points[g];
  if (total == 0) return out;
  for (std::size_t k = 0; k < out.size(); ++k) {
    CompensatedSum s;
    for (std::size_t g = 0; g < sums.size(); ++g)
      for (int r = 0; r < w[g]; ++r) s.merge(sums[g][k]);
    out[k] = s.value() / static_cast<double>(total);
  }
  return out;
}

std::vector<int> EmpiricalMeasure::bootstrap_weights(std::mt19937_64& gen) const {
  std::vector<int> w(static_cast<std::size_t>(groups), 0);
  for (int i = 0; i < groups; ++i) ++w[static_cast<std::size_t>(gen() % static_cast<std::uint64_t>(groups))];
  return w;
}

EmpiricalMeasure pushforward_average(const DeformedMap& m, const CuDisk& disk, int n, int samples,
                                     std::uint64_t seed, const ObservableSet& obs, const PushforwardOptions& opt) {
  const MapView fwd = MapView::forward(m);
  if (!disk_in_cu_cone(fwd, disk, opt.aperture, opt.frame_iterations))
    throw Error("pushforward_average: disk is not tangent to the cu-cone");
  EmpiricalMeasure mu = empty_measure(m.dim(), n, samples, obs, opt);
  const int u = static_cast<int>(disk.basis.cols());
  for (int i = 0; i < samples; ++i) {
    auto gen = stream(seed, static_cast<std::uint64_t>(i), 21);
    mu.starts[static_cast<std::size_t>(i)] = disk_point(disk, disk.radius * uniform_ball(u, gen));
  }
  accumulate(m, obs, mu, opt.threads);
  return mu;
}

EmpiricalMeasure pushforward_volume(const DeformedMap& m, int n, int samples, std::uint64_t seed,
                                    const ObservableSet& obs, const PushforwardOptions& opt) {
  EmpiricalMeasure mu = empty_measure(m.dim(), n, samples, obs, opt);
  for (int i = 0; i < samples; ++i) {
    auto gen = stream(seed, static_cast<std::uint64_t>(i), 22);
    mu.starts[static_cast<std::size_t>(i)] = uniform_point(m.dim(), gen);
  }
  accumulate(m, obs, mu, opt.threads);
  return mu;
}

double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw Error("tv_distance: size mismatch");
  CompensatedSum s;
  for (std::size_t i = 0; i < p.size(); ++i) s.add(std::abs(p[i] - q[i]));
  return 0.5 * s.value();
}

MeasureDistance measure_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b, const std::vector<int>& wa,
                                 const std::vector<int>& wb) {
  if (a.dim != b.dim || a.grid != b.grid || a.observable_names != b.observable_names)
    throw Error("measure_distance: measures are not comparable");
  MeasureDistance d;
  for (std::size_t p = 0; p < a.pairs.size(); ++p)
    d.tv_max = std::max(d.tv_max, tv_distance(a.histogram(p, wa), b.histogram(p, wb)));
  const auto ia = a.integrals(wa);
  const auto ib = b.integrals(wb);
  for (std::size_t k = 0; k < ia.size(); ++k) d.observable_max = std::max(d.observable_max, std::abs(ia[k] - ib[k]));
  return d;
}

MeasureDistance distance_to_uniform(const EmpiricalMeasure& a, const ObservableSet& obs, const std::vector<int>& wa) {
  if (obs.size() != a.observable_names.size()) throw Error("distance_to_uniform: observable set mismatch");
  MeasureDistance d;
  const std::size_t cells = static_cast<std::size_t>(a.grid) * static_cast<std::size_t>(a.grid);
  const std::vector<double> uni(cells, 1.0 / static_cast<double>(cells));
  for (std::size_t p = 0; p < a.pairs.size(); ++p) d.tv_max = std::max(d.tv_max, tv_distance(a.histogram(p, wa), uni));
  const auto ia = a.integrals(wa);
  for (std::size_t k = 0; k < ia.size(); ++k)
    d.observable_max = std::max(d.observable_max, std::abs(ia[k] - obs[k].lebesgue_integral));
  return d;
}

NoiseEstimate bootstrap_noise(const EmpiricalMeasure& a, int replicates, std::uint64_t seed) {
  if (replicates < 2) throw Error("bootstrap_noise: need at least 2 replicates");
  NoiseEstimate e;
  for (int r = 0; r < replicates; ++r) {
    auto gen = stream(seed, static_cast<std::uint64_t>(r), 23);
    e.replicates.push_back(measure_distance(a, a, a.bootstrap_weights(gen)).total());
  }
  e.mean = mean(e.replicates);
  e.stddev = sample_stddev(e.replicates);
  return e;
}

std::vector<double> birkhoff_average(const DeformedMap& m, const TorusPoint& x0, long long n,
                                     const ObservableSet& obs) {
  if (n < 1) throw Error("birkhoff_average: n must be >= 1");
  std::vector<CompensatedSum> sums(obs.size());
  std::vector<double> vals(obs.size());
  TorusPoint x = x0;
  for (long long j = 0; j < n; ++j) {
    if (j > 0) x = m.apply(x);
    obs.evaluate(x.coords(), vals.data());
    for (std::size_t k = 0; k < vals.size(); ++k) sums[k].add(vals[k]);
  }
  std::vector<double> out(obs.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = sums[k].value() / static_cast<double>(n);
  return out;
}

DispersionResult ergodicity_dispersion(const DeformedMap& m, const std::vector<TorusPoint>& starts, long long n,
                                       const ObservableSet& obs, int threads) {
  if (starts.size() < 2) throw Error("ergodicity_dispersion: need at least 2 starts");
  DispersionResult r;
  r.averages.resize(starts.size());
  parallel_for(starts.size(), threads, [&](std::size_t i) { r.averages[i] = birkhoff_average(m, starts[i], n, obs); });
  for (std::size_t k = 0; k < obs.size(); ++k) {
    std::vector<double> col;
    for (const auto& a : r.averages) col.push_back(a[k]);
    r.stddev.push_back(sample_stddev(col));
    r.dispersion = std::max(r.dispersion, r.stddev.back());
  }
  r.envelope = 5.0 * obs.max_sup_norm() / std::sqrt(static_cast<double>(n));
  return r;
}

DispersionResult ergodicity_dispersion(const DeformedMap& m, int starts, long long n, const ObservableSet& obs,
                                       std::uint64_t seed, int threads) {
  if (starts < 2) throw Error("ergodicity_dispersion: need at least 2 starts");
  std::vector<TorusPoint> pts;
  for (int i = 0; i < starts; ++i) {
    auto gen = stream(seed, static_cast<std::uint64_t>(i), 24);
    pts.push_back(uniform_point(m.dim(), gen));
  }
  return ergodicity_dispersion(m, pts, n, obs, threads);
}

UniquenessResult srb_uniqueness_distance(const DeformedMap& m, const CuDisk& a, const CuDisk& b, int n, int samples,
                                         std::uint64_t seed, const ObservableSet& obs, const UniquenessOptions& opt,
                                         EmpiricalMeasure* measure_a, EmpiricalMeasure* measure_b) {
  if (opt.bootstrap < 2) throw Error("srb_uniqueness_distance: bootstrap must be >= 2");
  const EmpiricalMeasure ma = pushforward_average(m, a, n, samples, seed, obs, opt.pushforward);
  const EmpiricalMeasure mb = pushforward_average(m, b, n, samples, seed, obs, opt.pushforward);
  const EmpiricalMeasure ma2 =
      pushforward_average(m, a, n, samples, seed ^ opt.baseline_seed_offset, obs, opt.pushforward);
  UniquenessResult r;
  r.distance = measure_distance(ma, mb);
  r.baseline = measure_distance(ma, ma2);
  for (int k = 0; k < opt.bootstrap; ++k) {
    auto gen = stream(seed, static_cast<std::uint64_t>(k), 25);
    const auto w1 = ma.bootstrap_weights(gen);
    const auto w2 = ma2.bootstrap_weights(gen);
    r.noise.replicates.push_back(measure_distance(ma, ma2, w1, w2).total());
  }
  r.noise.mean = mean(r.noise.replicates);
  r.noise.stddev = sample_stddev(r.noise.replicates);
  if (measure_a) *measure_a = ma;
  if (measure_b) *measure_b = mb;
  return r;
}

UniquenessResult srb_uniqueness_distance(const DeformedMap& m, const CuDisk& a, const CuDisk& b, int n, int samples,
                                         std::uint64_t seed, const ObservableSet& obs, const UniquenessOptions& opt) {
  return srb_uniqueness_distance(m, a, b, n, samples, seed, obs, opt, nullptr, nullptr);
}

double condition_margin(const ConditionReport& r) {
  const auto& o = r.options;
  double m = std::min(1.0 - r.cu_cone_ratio_max, 1.0 - r.cs_cone_ratio_max);
  m = std::min(m, (o.sigma - r.outside_cone_value()) / o.sigma);
  if (r.samples_inside > 0) m = std::min(m, (1.0 + o.delta0 - r.inside_cone_value()) / (1.0 + o.delta0));
  if (r.conservative) m = std::min(m, (o.det_tolerance - r.det_error_max) / o.det_tolerance);
  return m;
}

std::vector<ScanRow> stability_scan(const DeformedMap& m, const std::vector<double>& strengths, const ScanProbe& probe,
                                    const ConditionOptions& conditions) {
  std::vector<ScanRow> rows;
  std::vector<double> sorted = strengths;
  std::sort(sorted.begin(), sorted.end());
  for (double t : sorted) {
    ScanRow row;
    row.strength = t;
    if (t < 0.0 || t > 1.0) {
      rows.push_back(row);
      continue;
    }
    const DeformedMap mt = with_strengths(m, {t});
    const ConditionReport rep = verify_map_conditions(mt, conditions);
    row.conditions_pass = rep.pass();
    row.margin = condition_margin(rep);
    if (row.conditions_pass) {
      const ObservableSet obs = ObservableSet::standard(mt, probe.observables);
      const DispersionResult d = ergodicity_dispersion(mt, probe.starts, probe.n, obs, probe.seed, probe.threads);
      row.probed = true;
      row.dispersion = d.dispersion;
      row.envelope = d.envelope;
    }
    rows.push_back(row);
  }
  return rows;
}

double negative_cs_fraction(const DeformedMap& m, const std::vector<TorusPoint>& points, int n, int threads) {
  if (points.empty()) throw Error("negative_cs_fraction: no points");
  std::vector<char> neg(points.size(), 0);
  parallel_for(points.size(), threads, [&](std::size_t i) {
    const OrbitStats s = orbit_stats(m, points[i], n);
    CompensatedSum acc;
    for (double v : s.log_cs_norm) acc.add(v);
    neg[i] = acc.value() < 0.0;
  });
  std::size_t c = 0;
  for (char v : neg) c += v ? 1 : 0;
  return static_cast<double>(c) / static_cast<double>(points.size());
}

void write_cloud_csv(std::ostream& os, const EmpiricalMeasure& mu) {
  os << "index";
  for (int i = 0; i < mu.dim; ++i) os << ",x" << i;
  os << ",weight\n";
  char buf[64];
  const double w = mu.cloud.empty() ? 0.0 : 1.0 / static_cast<double>(mu.cloud.size());
  for (std::size_t k = 0; k < mu.cloud.size(); ++k) {
    os << k;
    for (int i = 0; i < mu.dim; ++i) {
      std::snprintf(buf, sizeof buf, ",%.17g", mu.cloud[k][i]);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.17g\n", w);
    os << buf;
  }
}

void write_histogram_csv(std::ostream& os, const EmpiricalMeasure& mu, std::size_t pair) {
  const auto h = mu.histogram(pair);
  char buf[64];
  for (int a = 0; a < mu.grid; ++a) {
    for (int b = 0; b < mu.grid; ++b) {
      std::snprintf(buf, sizeof buf, "%s%.17g", b ? "," : "",
                    h[static_cast<std::size_t>(a) * static_cast<std::size_t>(mu.grid) + static_cast<std::size_t>(b)]);
      os << buf;
    }
    os << "\n";
  }
}

}  // namespace dalab
