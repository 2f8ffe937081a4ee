#include "tgcca/covariance.hpp"

#include <cmath>

#include "tgcca/linalg.hpp"

namespace tgcca {

RegularizationSpec RegularizationSpec::make_full(Matrix m) {
  RegularizationSpec spec;
  spec.kind = Kind::full;
  spec.full = std::move(m);
  if ((spec.full - spec.full.transpose()).cwiseAbs().maxCoeff() > 1e-10)
    throw NumericalError("regularization matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> es(spec.full, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw NumericalError("regularization matrix must be positive-definite");
  return spec;
}

RegularizationSpec RegularizationSpec::make_separable(
    std::vector<Matrix> factors) {
  RegularizationSpec spec;
  spec.kind = Kind::separable;
  spec.factors = std::move(factors);
  for (const auto& f : spec.factors) {
    if ((f - f.transpose()).cwiseAbs().maxCoeff() > 1e-10)
      throw NumericalError("separable factor must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(f, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw NumericalError("separable factor must be positive-definite");
  }
  return spec;
}

double RegularizationSpec::spectral_norm() const {
  switch (kind) {
    case Kind::identity:
      return 1.0;
    case Kind::full:
      return spectral_norm_sym(full);
    case Kind::separable: {
      double prod = 1.0;
      for (const auto& f : factors) prod *= spectral_norm_sym(f);
      return prod;
    }
  }
  return 1.0;
}

Matrix RegularizationSpec::assemble(Index p) const {
  switch (kind) {
    case Kind::identity:
      return Matrix::Identity(p, p);
    case Kind::full:
      return full;
    case Kind::separable: {
      Matrix acc = factors.front();
      for (size_t m = 1; m < factors.size(); ++m)
        acc = kronecker(factors[m], acc);
      return acc;
    }
  }
  return Matrix::Identity(p, p);
}

RegularizationSpec estimate_full_m(const Block& block, double tau) {
  const double n = static_cast<double>(block.n());
  Matrix m = block.x.transpose() * block.x / n;
  m.diagonal().array() += tau;
  if (tau <= 0.0) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <= 0.0)
      throw NumericalError(
          "estimate_full_m: rank-deficient covariance needs tau > 0");
  }
  return RegularizationSpec::make_full(std::move(m));
}

RegularizationSpec estimate_separable_m(const Block& block, double tau) {
  const Index d = block.order();
  const double n = static_cast<double>(block.n());
  std::vector<Matrix> factors;
  factors.reserve(static_cast<size_t>(d));
  for (Index m = 1; m <= d; ++m) {
    const Index pm = block.dims[static_cast<size_t>(m - 1)];
    Matrix acc = Matrix::Zero(pm, pm);
    for (Index i = 0; i < block.n(); ++i) {
      DenseTensor sample(block.dims, block.x.row(i).transpose());
      Matrix unf = mode_matricize(sample, m);
      acc.noalias() += unf * unf.transpose();
    }
    const double rest = static_cast<double>(block.p() / pm);
    factors.push_back(acc / (n * rest));
  }
  // Kronecker scale indeterminacy: pin factors 2..d to trace p_m, push the
  // removed scale into factor 1.
  for (size_t m = 1; m < factors.size(); ++m) {
    const double t =
        factors[m].trace() / static_cast<double>(factors[m].rows());
    if (t > 0.0) {
      factors[m] /= t;
      factors[0] *= t;
    }
  }
  const double ridge = std::pow(tau, 1.0 / static_cast<double>(d));
  for (auto& f : factors) f.diagonal().array() += ridge;
  // Built directly rather than through make_separable: with tau = 0 the
  // moment estimate may be singular (PSD), which whitening rejects later
  // but estimation itself must allow.
  RegularizationSpec spec;
  spec.kind = RegularizationSpec::Kind::separable;
  spec.factors = std::move(factors);
  return spec;
}

WhitenResult whiten_block(const Block& block, const RegularizationSpec& spec) {
  WhitenResult out;
  out.block = block;
  const Index d = block.order();
  if (spec.kind == RegularizationSpec::Kind::identity) {
    for (Index m = 0; m < d; ++m)
      out.inv_sqrt.push_back(
          Matrix::Identity(block.dims[static_cast<size_t>(m)],
                           block.dims[static_cast<size_t>(m)]));
    return out;
  }
  if (spec.kind != RegularizationSpec::Kind::separable)
    throw ConfigError("whiten_block: needs a separable (or identity) spec");
  if (static_cast<Index>(spec.factors.size()) != d)
    throw ConfigError("whiten_block: factor count does not match block order");

  DenseTensor stacked = block.stacked();
  for (Index m = 0; m < d; ++m) {
    Matrix k = spd_inv_sqrt(spec.factors[static_cast<size_t>(m)]);
    stacked = mode_product(stacked, m + 2, k);  // mode 1 is the sample index
    out.inv_sqrt.push_back(std::move(k));
  }
  out.block = Block::from_stacked(stacked);
  return out;
}

}  // namespace tgcca
