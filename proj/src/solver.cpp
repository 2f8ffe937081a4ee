#include "tgcca/solver.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <chrono>
#include <cmath>

#include "tgcca/linalg.hpp"
#include "tgcca/log.hpp"

namespace tgcca {

namespace {

using Clock = std::chrono::steady_clock;

DenseTensor gradient_tensor(const Problem& prob, const InnerState& state,
                            Index l) {
  Vector g = block_gradient(prob.blocks, prob.design, prob.scheme, state.y, l);
  return fold(g, prob.blocks.blocks[static_cast<size_t>(l)].dims);
}

// Contract the gradient tensor with the rank-r factor vectors on every mode
// except `skip`; the surviving fiber has length p_skip.
Vector contract_except(const DenseTensor& grad, const CpVector& cp, Index r,
                       Index skip) {
  DenseTensor acc = grad;
  for (Index m = 1; m <= grad.order(); ++m) {
    if (m == skip) continue;
    acc = mode_product(acc, m,
                       cp.factors[static_cast<size_t>(m - 1)].col(r).transpose());
  }
  return acc.data();
}

double contract_all(const DenseTensor& grad, const CpVector& cp, Index r) {
  DenseTensor acc = grad;
  for (Index m = 1; m <= grad.order(); ++m)
    acc = mode_product(acc, m,
                       cp.factors[static_cast<size_t>(m - 1)].col(r).transpose());
  return acc.data()[0];
}

// Whether block l's mode m carries the Procrustes orthogonality, taking the
// d=2 tandem override into account.
bool block_mode_orthogonal(const Problem& prob, const SolverOptions& opts,
                           Index d, Index m) {
  if (prob.regime == Regime::separable && d == 2 && opts.use_tandem)
    return true;
  return is_orthogonal_mode(opts, m, d);
}

void track_constraints(const Problem& prob, const InnerState& state, Index l,
                       const SolverOptions& opts, FitResult& diag) {
  if (!opts.track_constraints) return;
  const CpVector& cp = state.cp[static_cast<size_t>(l)];
  const Index d = cp.order();
  double orth = 0.0;
  for (Index m = 1; m <= d; ++m) {
    const Matrix& v = cp.factors[static_cast<size_t>(m - 1)];
    if (block_mode_orthogonal(prob, opts, d, m)) {
      orth = std::max(
          orth, (v.transpose() * v - Matrix::Identity(v.cols(), v.cols()))
                    .norm());
    } else {
      for (Index r = 0; r < v.cols(); ++r)
        orth = std::max(orth, std::abs(v.col(r).norm() - 1.0));
    }
  }
  if (prob.regime == Regime::nonseparable) {
    Matrix w = cp.factor_matrix();
    orth = std::max(
        orth,
        (w.transpose() * w - Matrix::Identity(w.cols(), w.cols())).norm());
  }
  double lam;
  if (prob.regime == Regime::separable) {
    lam = std::abs(cp.lambda.norm() - 1.0);
  } else {
    const double bound =
        1.0 / std::sqrt(prob.reg_norm[static_cast<size_t>(l)]);
    lam = std::max(0.0, cp.lambda.norm() - bound);
  }
  diag.max_orth_residual = std::max(diag.max_orth_residual, orth);
  diag.max_lambda_residual = std::max(diag.max_lambda_residual, lam);
}

}  // namespace

bool is_orthogonal_mode(const SolverOptions& opts, Index m, Index d) {
  if (d == 1 || opts.orth.all_modes) return true;
  return m == std::min<Index>(opts.orth.mode, d);
}

void InnerState::refresh_component(const Problem& prob, Index l) {
  y[static_cast<size_t>(l)] = prob.blocks.blocks[static_cast<size_t>(l)].x *
                              cp[static_cast<size_t>(l)].reconstruct();
}

CpVector init_random(const std::vector<Index>& dims, Index rank,
                     const SolverOptions& opts, std::mt19937_64& rng,
                     double lambda_scale) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const Index d = static_cast<Index>(dims.size());
  CpVector cp;
  cp.factors.reserve(static_cast<size_t>(d));
  for (Index m = 1; m <= d; ++m) {
    const Index pm = dims[static_cast<size_t>(m - 1)];
    Matrix g(pm, rank);
    for (Index j = 0; j < rank; ++j)
      for (Index i = 0; i < pm; ++i) g(i, j) = normal(rng);
    if (is_orthogonal_mode(opts, m, d)) {
      if (rank > pm)
        throw ConfigError("init_random: rank exceeds orthogonal mode dim");
      Eigen::HouseholderQR<Matrix> qr(g);
      Matrix q = qr.householderQ() * Matrix::Identity(pm, rank);
      for (Index j = 0; j < rank; ++j)
        if (qr.matrixQR()(j, j) < 0.0) q.col(j) = -q.col(j);
      cp.factors.push_back(std::move(q));
    } else {
      for (Index j = 0; j < rank; ++j) {
        const double nrm = g.col(j).norm();
        if (nrm > 0.0)
          g.col(j) /= nrm;
        else
          g(0, j) = 1.0;
      }
      cp.factors.push_back(std::move(g));
    }
  }
  Vector lam(rank);
  for (Index r = 0; r < rank; ++r) lam[r] = normal(rng);
  const double nrm = lam.norm();
  if (nrm > 0.0)
    lam *= lambda_scale / nrm;
  else
    lam[0] = lambda_scale;
  cp.lambda = std::move(lam);
  return cp;
}

Matrix mode_update_input(const DenseTensor& grad, const CpVector& cp,
                         Index m) {
  const Index pm = grad.dim(m);
  Matrix f(pm, cp.rank());
  for (Index r = 0; r < cp.rank(); ++r)
    f.col(r) = cp.lambda[r] * contract_except(grad, cp, r, m);
  return f;
}

Vector factor_gradient(const DenseTensor& grad, const CpVector& cp) {
  Vector u(cp.rank());
  for (Index r = 0; r < cp.rank(); ++r) u[r] = contract_all(grad, cp, r);
  return u;
}

void update_mode_separable(const Problem& prob, InnerState& state, Index l,
                           Index m, bool orthogonal, const SolverOptions& opts,
                           FitResult& diag) {
  DenseTensor grad = gradient_tensor(prob, state, l);
  CpVector& cp = state.cp[static_cast<size_t>(l)];
  Matrix f = mode_update_input(grad, cp, m);
  if (orthogonal) {
    ProcrustesResult res = procrustes_max(f);
    if (!res.unique) ++diag.uniqueness_warnings;
    cp.factors[static_cast<size_t>(m - 1)] = std::move(res.q);
  } else {
    for (Index r = 0; r < cp.rank(); ++r) {
      const double nrm = f.col(r).norm();
      if (nrm > 1e-14)
        cp.factors[static_cast<size_t>(m - 1)].col(r) = f.col(r) / nrm;
      // zero direction: column left unchanged
    }
  }
  state.refresh_component(prob, l);
  track_constraints(prob, state, l, opts, diag);
}

void update_lambda_separable(const Problem& prob, InnerState& state, Index l,
                             const SolverOptions& opts, FitResult& diag) {
  DenseTensor grad = gradient_tensor(prob, state, l);
  CpVector& cp = state.cp[static_cast<size_t>(l)];
  Vector u = factor_gradient(grad, cp);
  const double nrm = u.norm();
  if (nrm <= 1e-14) {
    ++diag.stationary_flags;
    return;
  }
  cp.lambda = u / nrm;
  state.refresh_component(prob, l);
  track_constraints(prob, state, l, opts, diag);
}

void update_matrix_block(const Problem& prob, InnerState& state, Index l,
                         const SolverOptions& opts, FitResult& diag) {
  update_mode_separable(prob, state, l, 1, true, opts, diag);
  update_mode_separable(prob, state, l, 2, true, opts, diag);
  update_lambda_separable(prob, state, l, opts, diag);
}

void update_lambda_nonseparable(const Problem& prob, InnerState& state,
                                Index l, const SolverOptions& opts,
                                FitResult& diag) {
  DenseTensor grad = gradient_tensor(prob, state, l);
  CpVector& cp = state.cp[static_cast<size_t>(l)];
  Vector u = factor_gradient(grad, cp);
  if (u.norm() <= 1e-14) {
    ++diag.stationary_flags;
    return;
  }
  const double alpha = 1.0 / prob.reg_norm[static_cast<size_t>(l)];
  const double sqrt_alpha = std::sqrt(alpha);
  const Vector lambda_prev = cp.lambda;
  const Vector lambda_opt = sqrt_alpha * u / u.norm();
  const double eps_level = 0.5 * (u.dot(lambda_prev) + u.dot(lambda_opt));

  const auto& spec = prob.reg[static_cast<size_t>(l)];
  Vector lambda_new;
  if (spec.kind == RegularizationSpec::Kind::identity) {
    // G = I: lambda_ref is collinear with u, so the accepted candidate is
    // u/||u|| scaled to the constraint radius (the separable update).
    lambda_new = lambda_opt;
  } else {
    Matrix w = cp.factor_matrix();
    Matrix g = w.transpose() * (spec.full * w);
    Eigen::LDLT<Matrix> ldlt(g);
    Vector ginv_u = ldlt.solve(u);
    const double quad = u.dot(ginv_u);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || quad <= 0.0 ||
        !std::isfinite(quad)) {
      ++diag.conditioning_warnings;
      log::warn("non-separable lambda update: ill-conditioned W'MW, using "
                "the norm-constrained maximizer");
      lambda_new = lambda_opt;
    } else {
      Vector lambda_ref = ginv_u / std::sqrt(quad);
      Vector candidate = sqrt_alpha * lambda_ref / lambda_ref.norm();
      if (u.dot(candidate) >= eps_level)
        lambda_new = std::move(candidate);
      else
        lambda_new = ball_hyperplane_project(lambda_ref, u, alpha, eps_level);
    }
  }
  cp.lambda = std::move(lambda_new);
  state.refresh_component(prob, l);
  track_constraints(prob, state, l, opts, diag);
}

FitResult bca_fit(const Problem& prob, const SolverOptions& opts,
                  std::vector<CpVector> start) {
  const auto t0 = Clock::now();
  const Index num_blocks = prob.num_blocks();
  InnerState state;
  state.cp = std::move(start);
  state.y.resize(static_cast<size_t>(num_blocks));
  for (Index l = 0; l < num_blocks; ++l) state.refresh_component(prob, l);

  FitResult res;
  double crit = criterion_from_components(state.y, prob.design, prob.scheme,
                                          prob.blocks.n_samples());
  if (!std::isfinite(crit))
    throw NumericalError("bca_fit: non-finite criterion at start");
  res.trace.push_back(crit);

  for (int it = 1; it <= opts.max_iter; ++it) {
    for (Index l = 0; l < num_blocks; ++l) {
      const Index d = prob.blocks.blocks[static_cast<size_t>(l)].order();
      if (prob.regime == Regime::separable && d == 2 && opts.use_tandem) {
        update_matrix_block(prob, state, l, opts, res);
      } else {
        for (Index m = 1; m <= d; ++m)
          update_mode_separable(prob, state, l, m,
                                is_orthogonal_mode(opts, m, d), opts, res);
        if (prob.regime == Regime::separable)
          update_lambda_separable(prob, state, l, opts, res);
        else
          update_lambda_nonseparable(prob, state, l, opts, res);
      }
    }
    const double next = criterion_from_components(
        state.y, prob.design, prob.scheme, prob.blocks.n_samples());
    if (!std::isfinite(next))
      throw NumericalError("bca_fit: non-finite criterion at iteration " +
                           std::to_string(it));
    res.trace.push_back(next);
    res.iterations = it;
    if (next - crit < opts.eps_stop) {
      res.converged = true;
      break;
    }
    crit = next;
  }

  res.vectors = std::move(state.cp);
  res.components = std::move(state.y);
  res.seconds =
      std::chrono::duration<double>(Clock::now() - t0).count();
  return res;
}

std::vector<CpVector> random_start(const Problem& prob,
                                   const SolverOptions& opts,
                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<CpVector> start;
  start.reserve(static_cast<size_t>(prob.num_blocks()));
  for (Index l = 0; l < prob.num_blocks(); ++l) {
    const auto& block = prob.blocks.blocks[static_cast<size_t>(l)];
    SolverOptions local = opts;
    if (prob.regime == Regime::separable && block.order() == 2 &&
        opts.use_tandem)
      local.orth.all_modes = true;  // tandem keeps both modes orthonormal
    const double scale =
        prob.regime == Regime::separable
            ? 1.0
            : 1.0 / std::sqrt(prob.reg_norm[static_cast<size_t>(l)]);
    start.push_back(init_random(block.dims, opts.ranks[static_cast<size_t>(l)],
                                local, rng, scale));
  }
  return start;
}

MultiStartResult multi_start_fit(const Problem& prob,
                                 const SolverOptions& opts) {
  MultiStartResult out;
  bool have_best = false;
  std::string first_error;
  for (int s = 0; s < opts.n_starts; ++s) {
    try {
      FitResult fit =
          bca_fit(prob, opts, random_start(prob, opts, opts.seed + s));
      out.traces.push_back(fit.trace);
      if (!have_best || fit.criterion() > out.best.criterion()) {
        out.best = std::move(fit);
        out.best_start = s;
        have_best = true;
      }
    } catch (const NumericalError& e) {
      log::warn("start %d aborted: %s", s, e.what());
      out.traces.emplace_back();
      if (first_error.empty()) first_error = e.what();
    }
  }
  if (!have_best)
    throw NumericalError("multi_start_fit: all starts aborted (first: " +
                         first_error + ")");
  return out;
}

Problem build_problem(const BlockSet& preprocessed, const DesignMatrix& design,
                      const SchemeG& scheme, const SolverOptions& opts) {
  preprocessed.validate();
  design.validate(preprocessed.size());
  opts.validate(preprocessed);

  Problem prob;
  prob.design = design;
  prob.scheme = scheme;
  prob.regime = opts.regime;
  for (Index l = 0; l < preprocessed.size(); ++l) {
    const auto& block = preprocessed.blocks[static_cast<size_t>(l)];
    const double tau =
        opts.tau.empty() ? 1e-3 : opts.tau[static_cast<size_t>(l)];
    if (opts.regime == Regime::separable) {
      RegularizationSpec spec =
          opts.identity_m ? RegularizationSpec::make_identity()
                          : estimate_separable_m(block, tau);
      WhitenResult wr = whiten_block(block, spec);
      prob.blocks.blocks.push_back(std::move(wr.block));
      prob.whiten_inv_sqrt.push_back(std::move(wr.inv_sqrt));
      prob.reg.push_back(std::move(spec));
      prob.reg_norm.push_back(1.0);  // whitened space: constraint is unit norm
    } else {
      RegularizationSpec spec = opts.identity_m
                                    ? RegularizationSpec::make_identity()
                                    : estimate_full_m(block, tau);
      prob.blocks.blocks.push_back(block);
      prob.whiten_inv_sqrt.emplace_back();
      prob.reg_norm.push_back(spec.spectral_norm());
      prob.reg.push_back(std::move(spec));
    }
  }
  return prob;
}

PipelineResult fit_pipeline(const BlockSet& preprocessed,
                            const DesignMatrix& design, const SchemeG& scheme,
                            const SolverOptions& opts) {
  Problem prob = build_problem(preprocessed, design, scheme, opts);
  MultiStartResult ms = multi_start_fit(prob, opts);

  PipelineResult out;
  out.fit = ms.best;
  for (Index l = 0; l < prob.num_blocks(); ++l) {
    BlockFit bf;
    bf.solver_cp = out.fit.vectors[static_cast<size_t>(l)];
    bf.y = out.fit.components[static_cast<size_t>(l)];
    if (opts.regime == Regime::separable && !opts.identity_m) {
      // Map v back to the original variables: w = M^{-1/2} v applies
      // per mode to the CP factors; column norms fold into lambda.
      CpVector mapped = bf.solver_cp;
      const auto& inv = prob.whiten_inv_sqrt[static_cast<size_t>(l)];
      for (size_t m = 0; m < mapped.factors.size(); ++m) {
        mapped.factors[m] = inv[m] * mapped.factors[m];
        for (Index r = 0; r < mapped.rank(); ++r) {
          const double nrm = mapped.factors[m].col(r).norm();
          if (nrm > 0.0) {
            mapped.factors[m].col(r) /= nrm;
            mapped.lambda[r] *= nrm;
          }
        }
      }
      bf.problem_cp = std::move(mapped);
    } else {
      bf.problem_cp = bf.solver_cp;
    }
    bf.w = bf.problem_cp.reconstruct();
    out.blocks.push_back(std::move(bf));
  }
  out.starts = std::move(ms);
  return out;
}

}  // namespace tgcca
