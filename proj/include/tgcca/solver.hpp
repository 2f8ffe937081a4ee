#pragma once

#include <random>

#include "tgcca/covariance.hpp"
#include "tgcca/model.hpp"

namespace tgcca {

/// A fully prepared optimization problem: preprocessed blocks (whitened in
/// the separable regime) plus the regularization info the updates need.
struct Problem {
  BlockSet blocks;
  DesignMatrix design;
  SchemeG scheme;
  Regime regime = Regime::separable;
  // Per-block regularization. Separable regime: used for whitening
  // (the solver itself then works with unit-norm constraints). Non-separable:
  // full M_hat, consulted by the lambda update.
  std::vector<RegularizationSpec> reg;
  std::vector<double> reg_norm;  // ||M_l||_2 in solver space, 1.0 for identity
  // Separable regime: per-block per-mode M_{l,m}^{-1/2} used for whitening,
  // kept so solutions can be mapped back to the original variables.
  std::vector<std::vector<Matrix>> whiten_inv_sqrt;

  Index num_blocks() const { return blocks.size(); }
};

struct FitResult {
  std::vector<CpVector> vectors;   // solver-space CP vectors per block
  std::vector<Vector> components;  // y_l, length n
  std::vector<double> trace;       // criterion after each outer iteration
  int iterations = 0;
  bool converged = false;
  int uniqueness_warnings = 0;
  int stationary_flags = 0;
  int conditioning_warnings = 0;
  // Worst constraint residuals seen after any single update
  // (populated when SolverOptions::track_constraints is set).
  double max_orth_residual = 0.0;
  double max_lambda_residual = 0.0;
  double seconds = 0.0;

  double criterion() const { return trace.back(); }
};

/// Mutable per-fit state: CP vectors and cached components.
struct InnerState {
  std::vector<CpVector> cp;
  std::vector<Vector> y;

  void refresh_component(const Problem& prob, Index l);
};

bool is_orthogonal_mode(const SolverOptions& opts, Index m, Index d);

/// Random feasible start: orthogonal modes QR-orthonormalized, other modes
/// column-normalized, lambda uniform on the sphere of radius lambda_scale.
CpVector init_random(const std::vector<Index>& dims, Index rank,
                     const SolverOptions& opts, std::mt19937_64& rng,
                     double lambda_scale = 1.0);

/// Procrustes input for mode m: F[:,r] = lambda_r * (gradient tensor
/// contracted with the block's rank-r factors on every mode except m).
Matrix mode_update_input(const DenseTensor& grad, const CpVector& cp, Index m);

/// u = W^T grad computed per rank-1 factor by full mode contraction.
Vector factor_gradient(const DenseTensor& grad, const CpVector& cp);

/// Mode-m factor update; Procrustes when the mode carries orthogonality,
/// per-column normalization otherwise. Returns through the state; refreshes
/// the block's component.
void update_mode_separable(const Problem& prob, InnerState& state, Index l,
                           Index m, bool orthogonal, const SolverOptions& opts,
                           FitResult& diag);

/// lambda <- V^T grad / ||V^T grad|| (unit sphere maximizer).
void update_lambda_separable(const Problem& prob, InnerState& state, Index l,
                             const SolverOptions& opts, FitResult& diag);

/// One tandem sweep for d=2 blocks: Procrustes on both modes, then the
/// separable lambda update (for R=1 this is exactly the composed update).
void update_matrix_block(const Problem& prob, InnerState& state, Index l,
                         const SolverOptions& opts, FitResult& diag);

/// Non-separable lambda update: accept the constraint-scaled lambda_ref when
/// it already clears the hyperplane level, otherwise project onto
/// ball-boundary intersect hyperplane.
void update_lambda_nonseparable(const Problem& prob, InnerState& state,
                                Index l, const SolverOptions& opts,
                                FitResult& diag);

/// Master block-coordinate-ascent loop.
FitResult bca_fit(const Problem& prob, const SolverOptions& opts,
                  std::vector<CpVector> start);

std::vector<CpVector> random_start(const Problem& prob,
                                   const SolverOptions& opts,
                                   std::uint64_t seed);

struct MultiStartResult {
  FitResult best;
  int best_start = 0;
  std::vector<std::vector<double>> traces;  // per start
};

/// n_starts independent fits from seeds seed+0..n_starts-1; highest final
/// criterion wins.
MultiStartResult multi_start_fit(const Problem& prob,
                                 const SolverOptions& opts);

// ---- end-to-end pipeline (estimation + whitening + fit + back-mapping) ----

struct BlockFit {
  CpVector solver_cp;   // v-space (separable) or w-space CP vector
  CpVector problem_cp;  // always expressed in the original variables
  Vector w;             // problem-space canonical vector, length p_l
  Vector y;             // canonical component, length n
};

struct PipelineResult {
  std::vector<BlockFit> blocks;
  FitResult fit;
  MultiStartResult starts;
};

/// Builds the Problem for the requested regime from an already-preprocessed
/// block set, runs the multi-start fit, and maps the solution back to the
/// original variables.
PipelineResult fit_pipeline(const BlockSet& preprocessed,
                            const DesignMatrix& design, const SchemeG& scheme,
                            const SolverOptions& opts);

Problem build_problem(const BlockSet& preprocessed, const DesignMatrix& design,
                      const SchemeG& scheme, const SolverOptions& opts);

}  // namespace tgcca
