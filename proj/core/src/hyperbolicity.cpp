#include "dalab/hyperbolicity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dalab/parallel.hpp"
#include "dalab/rng.hpp"
#include "dalab/stats.hpp"

namespace dalab {

OrbitStats cocycle_stats(int n, int warmup, int cs_dim, const std::function<const Mat&(int)>& jac,
                         const std::function<const Mat&(int)>& jac_inv, const std::function<bool(int)>& in_v) {
  if (n < 1) throw Error("orbit statistics: n must be >= 1");
  if (warmup < 0) throw Error("orbit statistics: warmup must be >= 0");
  const int d = static_cast<int>(jac(0).rows());
  const int s = cs_dim;
  const int u = d - s;
  if (s < 0 || u < 0) throw Error("orbit statistics: bad bundle dimension");
  OrbitStats out;
  const auto nn = static_cast<std::size_t>(n);
  out.log_cs_norm.assign(nn, 0.0);
  out.log_cu_inv_norm.assign(nn, 0.0);
  out.log_det_cs.assign(nn, 0.0);
  out.log_det_cu.assign(nn, 0.0);
  out.in_v.assign(nn, 0);
  for (int j = 0; j < n; ++j) out.in_v[static_cast<std::size_t>(j)] = in_v(j) ? 1 : 0;

  if (u > 0) {
    Mat g = generic_frame(d, u, 1);
    for (int j = -warmup; j < 0; ++j) {
      g = jac(j) * g;
      orthonormalize(g);
    }
    for (int j = 0; j < n; ++j) {
      Mat img = jac(j) * g;
      if (!img.allFinite()) throw Error("orbit statistics: non-finite derivative");
      const SingularValues sv = singular_values(img);
      out.log_cu_inv_norm[static_cast<std::size_t>(j)] = -std::log(sv.min);
      out.log_det_cu[static_cast<std::size_t>(j)] = sv.log_volume;
      g = std::move(img);
      orthonormalize(g);
    }
  }
  if (s > 0) {
    Mat g = generic_frame(d, s, 2);
    for (int j = n + warmup - 1; j >= 0; --j) {
      g = jac_inv(j) * g;
      if (!g.allFinite()) throw Error("orbit statistics: non-finite derivative");
      orthonormalize(g);
      if (j < n) {
        const SingularValues sv = singular_values(jac(j) * g);
        out.log_cs_norm[static_cast<std::size_t>(j)] = std::log(sv.max);
        out.log_det_cs[static_cast<std::size_t>(j)] = sv.log_volume;
      }
    }
  }
  return out;
}

OrbitStats cocycle_stats(int n, int warmup, int cs_dim, const std::function<const Mat&(int)>& jac,
                         const std::function<bool(int)>& in_v) {
  Mat inv;
  auto inverse = [&](int j) -> const Mat& {
    inv = jac(j).inverse();
    return inv;
  };
  return cocycle_stats(n, warmup, cs_dim, jac, inverse, in_v);
}

namespace {

// Orbit x_{-warmup} .. x_{n+warmup-1} with derivatives stored only where they
// differ from the linear part.
struct StoredOrbit {
  int warmup = 0;
  std::vector<int> slot;  // -1 when the derivative is the base matrix
  std::vector<Mat> jac, jac_inv;
  std::vector<char> in_v;
};

StoredOrbit trace_orbit(const MapView& view, const TorusPoint& x0, int n, int warmup) {
  StoredOrbit o;
  o.warmup = warmup;
  const auto total = static_cast<std::size_t>(n + 2 * warmup);
  o.slot.assign(total, -1);
  o.in_v.assign(total, 0);
  const Mat& base = view.base_matrix();
  const DeformedMap& m = view.map();
  auto record = [&](std::size_t idx, const TorusPoint& x) -> TorusPoint {
    Mat jac;
    const TorusPoint y = view.step(x, jac);
    o.in_v[idx] = m.in_perturbation(x) ? 1 : 0;
    if (jac != base) {
      o.slot[idx] = static_cast<int>(o.jac.size());
      o.jac_inv.push_back(jac.inverse());
      o.jac.push_back(std::move(jac));
    }
    return y;
  };
  std::vector<TorusPoint> back(static_cast<std::size_t>(warmup));
  TorusPoint x = x0;
  for (int k = 0; k < warmup; ++k) {
    x = view.step_back(x);
    back[static_cast<std::size_t>(k)] = x;
  }
  for (int k = warmup - 1; k >= 0; --k) record(static_cast<std::size_t>(warmup - 1 - k), back[static_cast<std::size_t>(k)]);
  x = x0;
  for (int j = 0; j < n + warmup; ++j) x = record(static_cast<std::size_t>(j + warmup), x);
  return o;
}

}  // namespace

OrbitStats orbit_stats(const MapView& view, const TorusPoint& x0, int n, int warmup) {
  if (n < 1) throw Error("orbit statistics: n must be >= 1");
  if (warmup < 0) throw Error("orbit statistics: warmup must be >= 0");
  const StoredOrbit o = trace_orbit(view, x0, n, warmup);
  const Mat& base = view.base_matrix();
  const Mat& base_inv = view.base_matrix_inverse();
  auto jac = [&](int j) -> const Mat& {
    const int sl = o.slot[static_cast<std::size_t>(j + warmup)];
    return sl < 0 ? base : o.jac[static_cast<std::size_t>(sl)];
  };
  auto jac_inv = [&](int j) -> const Mat& {
    const int sl = o.slot[static_cast<std::size_t>(j + warmup)];
    return sl < 0 ? base_inv : o.jac_inv[static_cast<std::size_t>(sl)];
  };
  auto in_v = [&](int j) { return o.in_v[static_cast<std::size_t>(j + warmup)] != 0; };
  return cocycle_stats(n, warmup, view.cs_dim(), jac, jac_inv, in_v);
}

OrbitStats orbit_stats(const DeformedMap& m, const TorusPoint& x0, int n, int warmup) {
  return orbit_stats(MapView::forward(m), x0, n, warmup);
}

OrbitStats fixed_point_stats(const MapView& view, const TorusPoint& x, int n, int warmup) {
  const Mat j = view.jacobian(x);
  const Mat ji = j.inverse();
  const bool inside = view.map().in_perturbation(x);
  return cocycle_stats(
      n, warmup, view.cs_dim(), [&](int) -> const Mat& { return j; }, [&](int) -> const Mat& { return ji; },
      [&](int) { return inside; });
}

std::vector<double> running_average(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  CompensatedSum acc;
  for (std::size_t k = 0; k < v.size(); ++k) {
    acc.add(v[k]);
    out[k] = acc.value() / static_cast<double>(k + 1);
  }
  return out;
}

std::vector<double> cs_birkhoff(const DeformedMap& m, const TorusPoint& x0, int n) {
  return running_average(orbit_stats(m, x0, n).log_cs_norm);
}

std::vector<double> cu_birkhoff(const DeformedMap& m, const TorusPoint& x0, int n) {
  return running_average(orbit_stats(m, x0, n).log_cu_inv_norm);
}

LyapunovResult lyapunov_spectrum(const MapView& view, const TorusPoint& x0, long long n) {
  if (n < 100) throw Error("lyapunov_spectrum: n must be >= 100");
  const int d = view.dim();
  const Mat& base = view.base_matrix();
  const double base_log_det = std::log(std::abs(base.determinant()));
  Mat q = generic_frame(d, d, 3);
  std::vector<CompensatedSum> acc(static_cast<std::size_t>(d));
  CompensatedSum det_acc;
  LyapunovResult out;
  out.n = n;
  auto snapshot = [&](long long k) {
    std::vector<double> e(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) e[static_cast<std::size_t>(i)] = acc[static_cast<std::size_t>(i)].value() / static_cast<double>(k);
    std::sort(e.begin(), e.end(), std::greater<>());
    return e;
  };
  TorusPoint x = x0;
  Mat jac;
  long long next_check = 1;
  for (long long k = 1; k <= n; ++k) {
    x = view.step(x, jac);
    if (jac == base) {
      det_acc.add(base_log_det);
    } else {
      if (!jac.allFinite()) throw Error("lyapunov_spectrum: non-finite derivative");
      det_acc.add(std::log(std::abs(jac.determinant())));
    }
    q = jac * q;
    if (!q.allFinite()) throw Error("lyapunov_spectrum: non-finite derivative");
    const Vec logs = orthonormalize(q);
    for (int i = 0; i < d; ++i) acc[static_cast<std::size_t>(i)].add(logs(i));
    if (k == next_check) {
      out.history.push_back({k, snapshot(k)});
      next_check *= 2;
    }
  }
  out.exponents = snapshot(n);
  if (out.history.empty() || out.history.back().k != n) out.history.push_back({n, out.exponents});
  out.log_det_average = det_acc.value() / static_cast<double>(n);
  return out;
}

LyapunovResult lyapunov_spectrum(const DeformedMap& m, const TorusPoint& x0, long long n) {
  return lyapunov_spectrum(MapView::forward(m), x0, n);
}

double occupation_fraction(const DeformedMap& m, const TorusPoint& x0, long long n) {
  if (n < 1) throw Error("occupation_fraction: n must be >= 1");
  long long outside = 0;
  TorusPoint x = x0;
  for (long long j = 0; j < n; ++j) {
    if (!m.in_perturbation(x)) ++outside;
    x = m.apply(x);
  }
  return static_cast<double>(outside) / static_cast<double>(n);
}

ItineraryTail itinerary_tail(const DeformedMap& m, const CuDisk& disk, long long n, const ItineraryOptions& opt) {
  if (n < 1) throw Error("itinerary_tail: n must be >= 1");
  if (opt.samples < 1) throw Error("itinerary_tail: samples must be >= 1");
  const int u = static_cast<int>(disk.basis.cols());
  std::vector<char> hit(static_cast<std::size_t>(opt.samples), 0);
  parallel_for(hit.size(), opt.threads, [&](std::size_t i) {
    auto gen = stream(opt.seed, i, 7);
    TorusPoint x = disk_point(disk, disk.radius * uniform_ball(u, gen));
    long long outside = 0;
    for (long long j = 0; j < n; ++j) {
      if (!m.in_perturbation(x)) ++outside;
      x = m.apply(x);
    }
    hit[i] = static_cast<double>(outside) < opt.eps * static_cast<double>(n) ? 1 : 0;
  });
  ItineraryTail out;
  out.n = n;
  out.samples = opt.samples;
  for (char h : hit) out.hits += h;
  out.fraction = static_cast<double>(out.hits) / opt.samples;
  out.standard_error = std::sqrt(out.fraction * (1.0 - out.fraction) / opt.samples);
  if (opt.log_sigma1 > 0.0) {
    const double e = std::clamp(opt.eps, 0.0, 1.0);
    const double beta0 = (e > 0.0 && e < 1.0) ? -(e * std::log(e) + (1.0 - e) * std::log(1.0 - e)) : 0.0;
    out.log_envelope = static_cast<double>(n) * (beta0 + e * std::log(opt.partition_size) - opt.log_sigma1);
  } else {
    out.log_envelope = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

namespace {

LinearFit cumulative_slope(const std::vector<double>& v) {
  std::vector<double> k(v.size()), c(v.size());
  CompensatedSum acc;
  for (std::size_t i = 0; i < v.size(); ++i) {
    acc.add(v[i]);
    k[i] = static_cast<double>(i + 1);
    c[i] = acc.value();
  }
  return fit_line(k, c);
}

}  // namespace

VolumeRates volume_decay_rates(const DeformedMap& m, const TorusPoint& x0, int n, int warmup) {
  if (n < 10) throw Error("volume_decay_rates: fit needs at least 10 points");
  const OrbitStats fwd = orbit_stats(MapView::forward(m), x0, n, warmup);
  const OrbitStats bwd = orbit_stats(MapView::backward(m), x0, n, warmup);
  VolumeRates r;
  const LinearFit cs = cumulative_slope(fwd.log_det_cs);
  const LinearFit cu = cumulative_slope(bwd.log_det_cs);
  r.rate_cs = cs.slope;
  r.rate_cs_se = cs.slope_se;
  r.rate_cu = cu.slope;
  r.rate_cu_se = cu.slope_se;
  r.rate_cu_forward = cumulative_slope(fwd.log_det_cu).slope;
  return r;
}

std::vector<StartRecord> birkhoff_ensemble(const DeformedMap& m, int starts, int n, std::uint64_t seed, int threads,
                                           int warmup) {
  if (starts < 1) throw Error("birkhoff_ensemble: starts must be >= 1");
  std::vector<StartRecord> recs(static_cast<std::size_t>(starts));
  const int d = m.dim();
  parallel_for(recs.size(), threads, [&](std::size_t i) {
    auto gen = stream(seed, i, 5);
    Vec v(d);
    for (int k = 0; k < d; ++k) v(k) = uniform01(gen);
    StartRecord r;
    r.x0 = wrap(v);
    const OrbitStats st = orbit_stats(m, r.x0, n, warmup);
    CompensatedSum cs, cu;
    long long outside = 0;
    for (std::size_t j = 0; j < st.size(); ++j) {
      cs.add(st.log_cs_norm[j]);
      cu.add(st.log_cu_inv_norm[j]);
      if (!st.in_v[j]) ++outside;
    }
    r.cs_terminal = cs.value() / n;
    r.cu_terminal = cu.value() / n;
    r.occupation = static_cast<double>(outside) / n;
    recs[i] = r;
  });
  return recs;
}

C0Estimate estimate_c0(const std::vector<StartRecord>& recs, double sigma, double delta0, double q) {
  if (recs.empty()) throw Error("estimate_c0: no records");
  std::vector<double> worst, occ;
  for (const auto& r : recs) {
    worst.push_back(std::max(r.cs_terminal, r.cu_terminal));
    occ.push_back(r.occupation);
  }
  C0Estimate e;
  e.c0 = -quantile(worst, q);
  e.eps = quantile(occ, 1.0 - q);
  e.bound = -(e.eps * std::log(sigma) + (1.0 - e.eps) * std::log1p(delta0));
  int below = 0, above = 0;
  for (const auto& r : recs) {
    if (r.cs_terminal <= -e.c0 && r.cu_terminal <= -e.c0) ++below;
    if (r.occupation >= e.eps) ++above;
  }
  e.fraction_below = static_cast<double>(below) / static_cast<double>(recs.size());
  e.fraction_eps = static_cast<double>(above) / static_cast<double>(recs.size());
  return e;
}

}  // namespace dalab
