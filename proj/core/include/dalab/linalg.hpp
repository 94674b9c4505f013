#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dalab {

// Dimensions are capped so small matrices live on the stack.
inline constexpr int kMaxDim = 8;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SingularValues {
  double max = 0.0;
  double min = 0.0;
  double log_volume = 0.0;  // log of the product of singular values
};

// Singular value summary of an n x k matrix (k <= n).
SingularValues singular_values(const Mat& b);

// Modified Gram-Schmidt in place. Returns log|r_ii| per column.
// Throws on rank deficiency.
Vec orthonormalize(Mat& b);

// Orthonormal basis of the orthogonal complement of span(q), q orthonormal.
Mat orthogonal_complement(const Mat& q);

// Deterministic, generic orthonormal n x k frame.
Mat generic_frame(int n, int k, std::uint64_t salt = 0);

// Largest |entry| of q^T q - I.
double orthonormality_defect(const Mat& q);

bool all_finite(const Mat& m);

}  // namespace dalab
