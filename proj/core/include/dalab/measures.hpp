#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dalab/conditions.hpp"
#include "dalab/cones.hpp"
#include "dalab/stats.hpp"
#include "dalab/torus.hpp"

namespace dalab {

struct Observable {
  std::string name;
  std::function<double(const Vec&)> eval;
  double sup_norm = 1.0;
  double lebesgue_integral = 0.0;
};

class ObservableSet {
 public:
  ObservableSet() = default;
  explicit ObservableSet(std::vector<Observable> obs) : obs_(std::move(obs)) {}

  // cos and sin of 2 pi <m, x> for nonzero integer m with |m|_inf <= 1, up to
  // sign, ordered by |m|_1 and then lexicographically (first nonzero entry
  // positive). Takes the first `count`; count < 0 keeps all of them.
  static ObservableSet fourier(int dim, int count = -1);
  // Smooth bump of the site ball: 1 at the center, 0 outside, C^2.
  static Observable site_bump(const DeformedMap& m, int site);
  // count - 1 Fourier observables plus the bump of site 0 (all Fourier when there are no sites).
  static ObservableSet standard(const DeformedMap& m, int count = 8);
  static ObservableSet constant(int dim, double c);

  void add(Observable o) { obs_.push_back(std::move(o)); }
  std::size_t size() const { return obs_.size(); }
  const Observable& operator[](std::size_t i) const { return obs_[i]; }
  double max_sup_norm() const;
  std::vector<std::string> names() const;
  void evaluate(const Vec& x, double* out) const;

 private:
  std::vector<Observable> obs_;
};

// Average of point masses along orbit pieces. Only aggregates are kept:
// 2D marginal histograms for every coordinate pair and observable integrals,
// per sample group so that group bootstrap is possible. The starting points
// and the last iterate of every sample are kept as clouds.
struct EmpiricalMeasure {
  int dim = 0;
  int grid = 64;
  int groups = 20;
  long long samples = 0;
  long long steps = 0;  // n: iterates per sample
  std::vector<std::pair<int, int>> pairs;
  std::vector<std::string> observable_names;
  // [group][pair][cell] counts, cell = a * grid + b
  std::vector<std::vector<std::vector<std::uint64_t>>> counts;
  // [group][observable] sum of values over the group's points
  std::vector<std::vector<CompensatedSum>> sums;
  std::vector<std::uint64_t> group_points;
  std::vector<TorusPoint> starts;
  std::vector<TorusPoint> cloud;  // g^{n-1}(start), weight 1/samples each

  std::uint64_t total_points() const;
  double total_weight() const;  // 1 up to rounding
  // Normalized histogram of a pair; `weights` selects groups with multiplicity (empty: all once).
  std::vector<double> histogram(std::size_t pair, const std::vector<int>& weights = {}) const;
  std::vector<double> integrals(const std::vector<int>& weights = {}) const;
  // Multiplicity vector of a group bootstrap replicate.
  std::vector<int> bootstrap_weights(std::mt19937_64& gen) const;
};

struct PushforwardOptions {
  int grid = 64;
  int groups = 20;
  int threads = 1;
  double aperture = 0.1;  // disk certificate
  int frame_iterations = 30;
};

// Lebesgue-uniform points of the disk pushed j = 0..n-1 steps, weight 1/(n samples).
EmpiricalMeasure pushforward_average(const DeformedMap& m, const CuDisk& disk, int n, int samples,
                                     std::uint64_t seed, const ObservableSet& obs,
                                     const PushforwardOptions& opt = {});
// Same for a uniform sample of the whole torus.
EmpiricalMeasure pushforward_volume(const DeformedMap& m, int n, int samples, std::uint64_t seed,
                                    const ObservableSet& obs, const PushforwardOptions& opt = {});

double tv_distance(const std::vector<double>& p, const std::vector<double>& q);

struct MeasureDistance {
  double tv_max = 0.0;
  double observable_max = 0.0;
  double total() const { return tv_max + observable_max; }
};

MeasureDistance measure_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                                 const std::vector<int>& wa = {}, const std::vector<int>& wb = {});
// Distance to Lebesgue: uniform marginals and the exact observable integrals.
MeasureDistance distance_to_uniform(const EmpiricalMeasure& a, const ObservableSet& obs,
                                    const std::vector<int>& wa = {});

struct NoiseEstimate {
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> replicates;
};

// Distance between bootstrap replicates of a measure and the measure itself.
NoiseEstimate bootstrap_noise(const EmpiricalMeasure& a, int replicates, std::uint64_t seed);

std::vector<double> birkhoff_average(const DeformedMap& m, const TorusPoint& x0, long long n,
                                     const ObservableSet& obs);

struct DispersionResult {
  double dispersion = 0.0;           // max over observables of the sample std
  std::vector<double> stddev;        // per observable
  std::vector<std::vector<double>> averages;  // [start][observable]
  double envelope = 0.0;             // 5 n^{-1/2} max sup norm
  bool within_envelope() const { return dispersion <= envelope; }
};

DispersionResult ergodicity_dispersion(const DeformedMap& m, const std::vector<TorusPoint>& starts, long long n,
                                       const ObservableSet& obs, int threads = 1);
DispersionResult ergodicity_dispersion(const DeformedMap& m, int starts, long long n, const ObservableSet& obs,
                                       std::uint64_t seed, int threads = 1);

struct UniquenessOptions {
  PushforwardOptions pushforward;
  int bootstrap = 20;
  std::uint64_t baseline_seed_offset = 0x5bd1e995;
};

struct UniquenessResult {
  MeasureDistance distance;  // disk A vs disk B
  MeasureDistance baseline;  // disk A vs disk A under another seed
  NoiseEstimate noise;       // bootstrap of the baseline distance
  double threshold() const { return baseline.total() + 3.0 * noise.stddev; }
  bool pass() const { return distance.total() <= threshold(); }
};

// Measures for disk A and B use the same seed. The baseline compares disk A
// with itself under a shifted seed; its bootstrap spread is the noise.
UniquenessResult srb_uniqueness_distance(const DeformedMap& m, const CuDisk& a, const CuDisk& b, int n, int samples,
                                         std::uint64_t seed, const ObservableSet& obs,
                                         const UniquenessOptions& opt = {});
// The two measures as well, for callers that need the clouds.
UniquenessResult srb_uniqueness_distance(const DeformedMap& m, const CuDisk& a, const CuDisk& b, int n, int samples,
                                         std::uint64_t seed, const ObservableSet& obs, const UniquenessOptions& opt,
                                         EmpiricalMeasure* measure_a, EmpiricalMeasure* measure_b);

struct ScanProbe {
  int starts = 100;
  long long n = 100000;
  int observables = 8;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct ScanRow {
  double strength = 0.0;
  bool conditions_pass = false;
  double margin = 0.0;  // smallest relative slack of the condition checks
  bool probed = false;
  double dispersion = 0.0;
  double envelope = 0.0;
  bool pass() const { return conditions_pass && probed && dispersion <= envelope; }
};

// Smallest relative slack over the conditions (negative when one fails).
double condition_margin(const ConditionReport& r);

// One row per strength (common site strength); rows failing the conditions are not probed.
std::vector<ScanRow> stability_scan(const DeformedMap& m, const std::vector<double>& strengths, const ScanProbe& probe,
                                    const ConditionOptions& conditions);

// Fraction of points whose cs-Birkhoff average at step n is negative.
double negative_cs_fraction(const DeformedMap& m, const std::vector<TorusPoint>& points, int n, int threads = 1);

// CSV: cloud points with weights; histograms as grid rows.
void write_cloud_csv(std::ostream& os, const EmpiricalMeasure& mu);
void write_histogram_csv(std::ostream& os, const EmpiricalMeasure& mu, std::size_t pair);

}  // namespace dalab
