#include "dalab/linalg.hpp"

#include <cmath>
#include <random>

namespace dalab {

SingularValues singular_values(const Mat& b) {
  SingularValues out;
  const int k = static_cast<int>(b.cols());
  if (k == 0) return out;
  if (k == 1) {
    const double s = b.col(0).norm();
    out.max = out.min = s;
    out.log_volume = std::log(s);
    return out;
  }
  if (k == 2) {
    const double g11 = b.col(0).squaredNorm();
    const double g22 = b.col(1).squaredNorm();
    const double g12 = b.col(0).dot(b.col(1));
    const double tr = g11 + g22;
    const double det = std::max(g11 * g22 - g12 * g12, 0.0);
    const double disc = std::sqrt(std::max(0.25 * tr * tr - det, 0.0));
    const double lmax = 0.5 * tr + disc;
    // Small eigenvalue through det/lmax avoids cancellation.
    const double lmin = lmax > 0.0 ? det / lmax : 0.0;
    out.max = std::sqrt(lmax);
    out.min = std::sqrt(lmin);
    out.log_volume = 0.5 * std::log(det);
    return out;
  }
  Eigen::JacobiSVD<Mat> svd(b);
  const auto& s = svd.singularValues();
  out.max = s(0);
  out.min = s(k - 1);
  out.log_volume = 0.0;
  for (int i = 0; i < k; ++i) out.log_volume += std::log(s(i));
  return out;
}

Vec orthonormalize(Mat& b) {
  const int k = static_cast<int>(b.cols());
  Vec logs(k);
  for (int j = 0; j < k; ++j) {
    for (int i = 0; i < j; ++i) b.col(j) -= b.col(i).dot(b.col(j)) * b.col(i);
    // second pass keeps the frame orthonormal to rounding
    for (int i = 0; i < j; ++i) b.col(j) -= b.col(i).dot(b.col(j)) * b.col(i);
    const double r = b.col(j).norm();
    if (!(r > 1e-300) || !std::isfinite(r)) throw Error("orthonormalize: degenerate frame");
    b.col(j) /= r;
    logs(j) = std::log(r);
  }
  return logs;
}

Mat orthogonal_complement(const Mat& q) {
  const int n = static_cast<int>(q.rows());
  const int k = static_cast<int>(q.cols());
  Mat out(n, n - k);
  int filled = 0;
  for (int e = 0; e < n && filled < n - k; ++e) {
    Vec v = Vec::Zero(n);
    v(e) = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (int i = 0; i < k; ++i) v -= q.col(i).dot(v) * q.col(i);
      for (int i = 0; i < filled; ++i) v -= out.col(i).dot(v) * out.col(i);
    }
    const double r = v.norm();
    if (r < 1e-6) continue;
    out.col(filled++) = v / r;
  }
  if (filled != n - k) throw Error("orthogonal_complement: input not of full rank");
  return out;
}

Mat generic_frame(int n, int k, std::uint64_t salt) {
  std::mt19937_64 gen(0x9e3779b97f4a7c15ULL ^ (salt * 0xbf58476d1ce4e5b9ULL) ^
                      static_cast<std::uint64_t>(n * 131 + k));
  std::normal_distribution<double> normal;
  Mat b(n, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < n; ++i) b(i, j) = normal(gen);
  orthonormalize(b);
  return b;
}

double orthonormality_defect(const Mat& q) {
  const Mat g = q.transpose() * q;
  return (g - Mat::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

bool all_finite(const Mat& m) { return m.allFinite(); }

}  // namespace dalab
