#include "tgcca/deflation.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>

#include "tgcca/log.hpp"

namespace tgcca {

Block deflate_block(const Block& block, const Vector& y) {
  const double ynorm2 = y.squaredNorm();
  if (ynorm2 <= 0.0 || !std::isfinite(ynorm2))
    throw NumericalError("deflate_block: zero component");
  if (y.size() != block.n())
    throw ConfigError("deflate_block: component length != sample count");
  Block out = block;
  out.x.noalias() -= y * ((y.transpose() * block.x) / ynorm2);
  return out;
}

ComponentStack extract_components(const BlockSet& preprocessed,
                                  const DesignMatrix& design,
                                  const SchemeG& scheme,
                                  const SolverOptions& opts, int k) {
  if (k < 1) throw ConfigError("extract_components: K must be >= 1");
  ComponentStack stack;
  stack.null_from = k;
  BlockSet current = preprocessed;
  const Index num_blocks = preprocessed.size();
  const Index n = preprocessed.n_samples();

  for (int stage = 0; stage < k; ++stage) {
    PipelineResult res;
    try {
      res = fit_pipeline(current, design, scheme, opts);
    } catch (const NumericalError& e) {
      throw NumericalError("extract_components: stage " +
                           std::to_string(stage + 1) + ": " + e.what());
    }
    if (res.fit.criterion() < 1e-10) {
      log::info("extraction stage %d carries no signal; remaining stages "
                "set to null",
                stage + 1);
      stack.null_from = stage;
      break;
    }
    std::vector<CpVector> vecs;
    std::vector<Vector> comps;
    for (Index l = 0; l < num_blocks; ++l) {
      const BlockFit& bf = res.blocks[static_cast<size_t>(l)];
      vecs.push_back(bf.problem_cp);
      comps.push_back(bf.y);
      current.blocks[static_cast<size_t>(l)] =
          deflate_block(current.blocks[static_cast<size_t>(l)], bf.y);
    }
    stack.vectors.push_back(std::move(vecs));
    stack.components.push_back(std::move(comps));
    stack.traces.push_back(res.fit.trace);
  }

  // pad exhausted stages with zeros so the stack always has K entries
  for (int stage = static_cast<int>(stack.vectors.size()); stage < k;
       ++stage) {
    std::vector<CpVector> vecs;
    std::vector<Vector> comps;
    for (Index l = 0; l < num_blocks; ++l) {
      const Block& block = preprocessed.blocks[static_cast<size_t>(l)];
      CpVector cp;
      const Index rank = opts.ranks[static_cast<size_t>(l)];
      cp.lambda = Vector::Zero(rank);
      for (Index dim : block.dims)
        cp.factors.push_back(Matrix::Zero(dim, rank));
      vecs.push_back(std::move(cp));
      comps.push_back(Vector::Zero(n));
    }
    stack.vectors.push_back(std::move(vecs));
    stack.components.push_back(std::move(comps));
    stack.traces.emplace_back();
  }
  return stack;
}

Matrix recover_shared_factors(const Block& block, const Matrix& b,
                              const Matrix& c, const Vector& lambda) {
  if (block.order() != 2)
    throw ConfigError("recover_shared_factors: block samples must be 2-mode");
  if (b.cols() != c.cols() || b.cols() != lambda.size())
    throw ConfigError("recover_shared_factors: rank mismatch");
  if (b.rows() != block.dims[0] || c.rows() != block.dims[1])
    throw ConfigError("recover_shared_factors: factor rows != block dims");
  for (Index r = 0; r < lambda.size(); ++r)
    if (lambda[r] == 0.0)
      throw NumericalError("recover_shared_factors: zero weight at rank " +
                           std::to_string(r));
  Matrix z = khatri_rao(c, b);  // column r = c_r kron b_r
  Matrix zl = z * lambda.asDiagonal();
  Matrix gram = zl.transpose() * zl;
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw NumericalError("recover_shared_factors: singular normal matrix");
  // X_(1) here is the n x (p_1 p_2) sample-stacked layout, i.e. block.x
  return ldlt.solve((block.x * zl).transpose()).transpose();
}

double cosine_alignment(const Vector& w_true, const Vector& w_est) {
  const double a = w_true.norm();
  const double b = w_est.norm();
  if (a <= 0.0 || b <= 0.0)
    throw NumericalError("cosine_alignment: zero vector");
  return std::abs(w_true.dot(w_est)) / (a * b);
}

}  // namespace tgcca
