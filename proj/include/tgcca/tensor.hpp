#pragma once

#include <Eigen/Dense>
#include <vector>

#include "tgcca/common.hpp"

namespace tgcca {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Dense d-mode real tensor. Data is stored in mode-1 vectorization order:
/// the first index varies fastest, so element (i_1,...,i_d) lives at
/// i_1 + p_1*(i_2 + p_2*(i_3 + ...)).
class DenseTensor {
 public:
  DenseTensor() = default;
  DenseTensor(std::vector<Index> dims, Vector data);

  // Zero tensor of the given shape.
  explicit DenseTensor(std::vector<Index> dims);

  Index order() const { return static_cast<Index>(dims_.size()); }
  const std::vector<Index>& dims() const { return dims_; }
  Index dim(Index m) const { return dims_[static_cast<size_t>(m - 1)]; }
  Index size() const { return data_.size(); }

  const Vector& data() const { return data_; }
  Vector& data() { return data_; }

  double operator()(const std::vector<Index>& idx) const;

  bool operator==(const DenseTensor& other) const {
    return dims_ == other.dims_ && data_ == other.data_;
  }

 private:
  std::vector<Index> dims_;
  Vector data_;
};

// Modes are 1-based throughout, matching the m in p_m.

/// Mode-m matricization: p_m x prod_{j!=m} p_j, columns ordered with the
/// smallest remaining mode index cycling fastest.
Matrix mode_matricize(const DenseTensor& t, Index m);

/// Inverse of mode_matricize for the same dims.
DenseTensor fold_from_mode(const Matrix& unfolded, Index m,
                           const std::vector<Index>& dims);

inline Vector mode1_vectorize(const DenseTensor& t) { return t.data(); }

inline DenseTensor fold(const Vector& v, const std::vector<Index>& dims) {
  return DenseTensor(dims, v);
}

Matrix kronecker(const Matrix& a, const Matrix& b);

/// Column-wise Kronecker product; a and b must have equal column counts.
Matrix khatri_rao(const Matrix& a, const Matrix& b);

/// Tensor-times-matrix along mode m: mode_matricize(result, m) = a * mode_matricize(t, m).
DenseTensor mode_product(const DenseTensor& t, Index m, const Matrix& a);

/// A vector constrained to a rank-R CP structure:
///   w = sum_r lambda_r (factor_d[:,r] kron ... kron factor_1[:,r]).
struct CpVector {
  Vector lambda;                // length R
  std::vector<Matrix> factors;  // factor m is p_m x R

  Index rank() const { return lambda.size(); }
  Index order() const { return static_cast<Index>(factors.size()); }

  std::vector<Index> dims() const;
  Index vec_size() const;

  /// The full-length vector w (mode-1 vectorization of the CP tensor).
  Vector reconstruct() const;

  /// Rank-1 factor w^(r) = factor_d[:,r] kron ... kron factor_1[:,r].
  Vector rank1_factor(Index r) const;

  /// The p x R matrix W = [w^(1) ... w^(R)].
  Matrix factor_matrix() const;
};

}  // namespace tgcca
