#pragma once

#include <cstddef>
#include <vector>

namespace dalab {

// Neumaier compensated accumulator.
class CompensatedSum {
 public:
  void add(double x);
  void merge(const CompensatedSum& other);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;  // standard error of the slope
  std::size_t points = 0;
};

// Ordinary least squares; weights optional (same length as x when given).
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                   const std::vector<double>& weights = {});

double mean(const std::vector<double>& v);
double sample_stddev(const std::vector<double>& v);
// Linear-interpolated quantile, q in [0,1].
double quantile(std::vector<double> v, double q);

}  // namespace dalab
