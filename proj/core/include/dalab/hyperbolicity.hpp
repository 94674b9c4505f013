#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <vector>

#include "dalab/cones.hpp"
#include "dalab/torus.hpp"

namespace dalab {

// Per-step quantities along an orbit, j = 0..n-1.
struct OrbitStats {
  std::vector<double> log_cs_norm;      // log ||Df|E^cs||
  std::vector<double> log_cu_inv_norm;  // log ||(Df|E^cu)^{-1}||
  std::vector<char> in_v;
  std::vector<double> log_det_cs;       // log |det(Df|cs-plane)|
  std::vector<double> log_det_cu;
  std::size_t size() const { return log_cs_norm.size(); }
};

// cu frames are pushed forward from g^{-warmup}(x0); cs frames are pulled back
// from g^{n+warmup}(x0). Both are seeded once per orbit.
OrbitStats orbit_stats(const MapView& view, const TorusPoint& x0, int n, int warmup = 40);
OrbitStats orbit_stats(const DeformedMap& m, const TorusPoint& x0, int n, int warmup = 40);

// Same quantities for an abstract cocycle: jac(j) is the derivative at step j
// for j in [-warmup, n + warmup). Used for pinned orbits such as fixed points.
OrbitStats cocycle_stats(int n, int warmup, int cs_dim, const std::function<const Mat&(int)>& jac,
                         const std::function<bool(int)>& in_v);
// With the inverse derivatives supplied by the caller.
OrbitStats cocycle_stats(int n, int warmup, int cs_dim, const std::function<const Mat&(int)>& jac,
                         const std::function<const Mat&(int)>& jac_inv, const std::function<bool(int)>& in_v);
// Orbit sitting at a fixed point x of the view for n steps.
OrbitStats fixed_point_stats(const MapView& view, const TorusPoint& x, int n, int warmup = 40);

// Running averages c_k = (1/k) sum_{j<k} v_j, k = 1..n.
std::vector<double> running_average(const std::vector<double>& v);

std::vector<double> cs_birkhoff(const DeformedMap& m, const TorusPoint& x0, int n);
std::vector<double> cu_birkhoff(const DeformedMap& m, const TorusPoint& x0, int n);

struct LyapunovCheckpoint {
  long long k = 0;
  std::vector<double> exponents;
};

struct LyapunovResult {
  std::vector<double> exponents;  // descending
  std::vector<LyapunovCheckpoint> history;  // k = 2^i, then n
  long long n = 0;
  double log_det_average = 0.0;  // (1/n) sum log|det Df|
};

LyapunovResult lyapunov_spectrum(const MapView& view, const TorusPoint& x0, long long n);
LyapunovResult lyapunov_spectrum(const DeformedMap& m, const TorusPoint& x0, long long n);

// Fraction of the first n iterates outside the deformation region.
double occupation_fraction(const DeformedMap& m, const TorusPoint& x0, long long n);

struct ItineraryOptions {
  double eps = 0.95;
  int samples = 1000;
  std::uint64_t seed = 1;
  int partition_size = 16;  // p in the envelope
  double log_sigma1 = 0.0;  // measured log sigma_1; envelope is skipped when <= 0
  int threads = 1;
};

struct ItineraryTail {
  long long n = 0;
  double fraction = 0.0;
  double standard_error = 0.0;  // binomial
  int hits = 0;
  int samples = 0;
  // log of e^{beta0 n} p^{eps n} sigma_1^{-n} with C = 1; NaN when not computed
  double log_envelope = 0.0;
};

// Fraction of disk points whose occupation fraction over n steps is below eps.
ItineraryTail itinerary_tail(const DeformedMap& m, const CuDisk& disk, long long n, const ItineraryOptions& opt);

struct VolumeRates {
  double rate_cs = 0.0;          // slope of log|det Df^k|cs| (forward)
  double rate_cu = 0.0;          // slope of log|det Df^{-k}|cu| (backward)
  double rate_cu_forward = 0.0;  // slope of log|det Df^k|cu|
  double rate_cs_se = 0.0;
  double rate_cu_se = 0.0;
  double log_sigma1() const { return -std::max(rate_cs, rate_cu); }
};

VolumeRates volume_decay_rates(const DeformedMap& m, const TorusPoint& x0, int n, int warmup = 40);

// Terminal values for a batch of random starts.
struct StartRecord {
  TorusPoint x0;
  double cs_terminal = 0.0;
  double cu_terminal = 0.0;
  double occupation = 0.0;
};

std::vector<StartRecord> birkhoff_ensemble(const DeformedMap& m, int starts, int n, std::uint64_t seed,
                                           int threads = 1, int warmup = 40);

struct C0Estimate {
  double c0 = 0.0;          // -(q-quantile of max(cs, cu) terminal)
  double eps = 0.0;         // (1-q)-quantile of occupation
  double bound = 0.0;       // -log(sigma^eps (1+delta0)^{1-eps})
  double fraction_below = 0.0;  // starts with both terminals <= -c0
  double fraction_eps = 0.0;    // starts with occupation >= eps
};

C0Estimate estimate_c0(const std::vector<StartRecord>& recs, double sigma, double delta0, double q = 0.99);

}  // namespace dalab
