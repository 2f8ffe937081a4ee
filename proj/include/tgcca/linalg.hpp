#pragma once

#include "tgcca/tensor.hpp"

namespace tgcca {

/// Rank-R truncated SVD with a deterministic sign convention: the
/// largest-magnitude entry of each left singular vector is nonnegative
/// (ties broken by lowest index).
struct TruncatedSvd {
  Matrix left;      // p x R, column-orthonormal
  Vector singular;  // length R, nonincreasing
  Matrix right;     // q x R, column-orthonormal
};

TruncatedSvd truncated_svd(const Matrix& a, Index r);

struct ProcrustesResult {
  Matrix q;     // p x R, column-orthonormal, maximizes Tr(F^T q)
  bool unique;  // false when the smallest singular value of F degenerates
};

/// argmax_{O, O^T O = I} Tr(F^T O) = S T^T from the SVD of F.
ProcrustesResult procrustes_max(const Matrix& f);

/// Inverse square root of a symmetric positive-definite matrix.
Matrix spd_inv_sqrt(const Matrix& m);

/// Largest absolute eigenvalue of a symmetric matrix.
double spectral_norm_sym(const Matrix& m);

/// Projection of lambda_ref onto {||x||^2 = alpha} intersected with
/// {u^T x = eps_level}. Falls back to sqrt(alpha)*u/||u|| when lambda_ref
/// is collinear with u.
Vector ball_hyperplane_project(const Vector& lambda_ref, const Vector& u,
                               double alpha, double eps_level);

}  // namespace tgcca
