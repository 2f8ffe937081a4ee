#pragma once

#include "tgcca/model.hpp"

namespace tgcca {

/// Regularization matrix M_l: full SPD, a Kronecker product of per-mode SPD
/// factors (factor order matches the mode order, so the assembled matrix is
/// factors[d-1] kron ... kron factors[0]), or the identity.
struct RegularizationSpec {
  enum class Kind { identity, full, separable };
  Kind kind = Kind::identity;
  Matrix full;                  // kind == full
  std::vector<Matrix> factors;  // kind == separable, factor m is p_m x p_m

  static RegularizationSpec make_identity() { return {}; }
  static RegularizationSpec make_full(Matrix m);
  static RegularizationSpec make_separable(std::vector<Matrix> factors);

  /// ||M||_2; for a separable spec, the product of factor spectral norms.
  double spectral_norm() const;

  /// The assembled p x p matrix (small p only; used by tests and the
  /// non-separable solver path).
  Matrix assemble(Index p) const;
};

/// M_hat = X^T X / n + tau I.
RegularizationSpec estimate_full_m(const Block& block, double tau);

/// Mode-wise moment estimator with per-factor ridge tau^(1/d):
///   Sigma_m = (1/(n prod_{j!=m} p_j)) sum_i X_{i,(m)} X_{i,(m)}^T,
/// factors m >= 2 rescaled to trace p_m with the scale absorbed into
/// factor 1, then + tau^(1/d) I on every factor.
RegularizationSpec estimate_separable_m(const Block& block, double tau);

struct WhitenResult {
  Block block;                       // whitened data
  std::vector<Matrix> inv_sqrt;      // per-mode M_m^{-1/2}
};

/// Whitening change of variables via mode products:
/// X ->  X x_2 M_1^{-1/2} ... x_{d+1} M_d^{-1/2}. Cost O(n p sum p_m).
WhitenResult whiten_block(const Block& block, const RegularizationSpec& spec);

}  // namespace tgcca
