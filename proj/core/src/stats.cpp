#include "dalab/stats.hpp"

#include <algorithm>
#include <cmath>

#include "dalab/linalg.hpp"

namespace dalab {

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x))
    comp_ += (sum_ - t) + x;
  else
    comp_ += (x - t) + sum_;
  sum_ = t;
}

void CompensatedSum::merge(const CompensatedSum& other) {
  add(other.sum_);
  add(other.comp_);
}

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                   const std::vector<double>& weights) {
  if (x.size() != y.size()) throw Error("fit_line: size mismatch");
  if (!weights.empty() && weights.size() != x.size()) throw Error("fit_line: weight size mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw Error("fit_line: need at least two points");
  auto w = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += w(i);
    sx += w(i) * x[i];
    sy += w(i) * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += w(i) * (x[i] - mx) * (x[i] - mx);
    sxy += w(i) * (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0)) throw Error("fit_line: degenerate abscissae");
  LinearFit f;
  f.points = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (weights.empty()) {
    if (n > 2) {
      double rss = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        rss += r * r;
      }
      f.slope_se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
    }
  } else {
    // weights are inverse variances
    f.slope_se = std::sqrt(1.0 / sxx);
  }
  return f;
}

double mean(const std::vector<double>& v) {
  CompensatedSum s;
  for (double x : v) s.add(x);
  return v.empty() ? 0.0 : s.value() / static_cast<double>(v.size());
}

double sample_stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  CompensatedSum s;
  for (double x : v) s.add((x - m) * (x - m));
  return std::sqrt(s.value() / static_cast<double>(v.size() - 1));
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw Error("quantile: empty input");
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double t = pos - static_cast<double>(lo);
  return v[lo] * (1 - t) + v[hi] * t;
}

}  // namespace dalab
