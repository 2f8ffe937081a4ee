#pragma once

#include "tgcca/solver.hpp"

namespace tgcca {

/// Results of K sequential extraction stages. stage s of block l lives at
/// vectors[s][l] / components[s][l]; null_from marks the first exhausted
/// stage (== K when all stages carried signal).
struct ComponentStack {
  std::vector<std::vector<CpVector>> vectors;   // [stage][block], problem space
  std::vector<std::vector<Vector>> components;  // [stage][block], length n
  std::vector<std::vector<double>> traces;      // criterion trace per stage
  int null_from = 0;
};

/// Project every column of the block onto the orthogonal complement of y:
/// X <- X - y (y'y)^{-1} y'X. Dims and sample count are unchanged.
Block deflate_block(const Block& block, const Vector& y);

/// K-stage extraction: fit, deflate each block by its own component, refit.
/// Regularization is re-estimated on the deflated data each stage. A stage
/// whose best criterion falls below 1e-10 marks that and all later stages
/// null (zero vectors/components) instead of erroring.
ComponentStack extract_components(const BlockSet& preprocessed,
                                  const DesignMatrix& design,
                                  const SchemeG& scheme,
                                  const SolverOptions& opts, int k);

/// Least-squares recovery of the sample-mode factor A from a 3-mode
/// sample-stacked block (mode 1 = samples) given the two variable-mode
/// factors and the CP weights:
///   A = X_(1) Z L (L Z'Z L)^{-1},  Z = khatri-rao of the mode-3 and
/// mode-2 factors, L = diag(lambda). With orthonormal Z this reduces to
/// X_(1) Z L^{-1}.
Matrix recover_shared_factors(const Block& block, const Matrix& b,
                              const Matrix& c, const Vector& lambda);

/// |w'v| / (||w|| ||v||), in [0,1]; 1 iff collinear.
double cosine_alignment(const Vector& w_true, const Vector& w_est);

}  // namespace tgcca
