#include "tgcca/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tgcca {

DenseTensor Block::stacked() const {
  // Column-major n x p data is exactly the mode-1 vectorization of the
  // (d+1)-mode tensor whose first mode indexes samples.
  std::vector<Index> d{n()};
  d.insert(d.end(), dims.begin(), dims.end());
  Vector v(x.size());
  Eigen::Map<Matrix>(v.data(), x.rows(), x.cols()) = x;
  return DenseTensor(std::move(d), std::move(v));
}

Block Block::from_stacked(const DenseTensor& t) {
  if (t.order() < 2)
    throw ConfigError("sample-stacked tensor needs at least 2 modes");
  Block b;
  b.dims.assign(t.dims().begin() + 1, t.dims().end());
  const Index n = t.dims().front();
  b.x = Eigen::Map<const Matrix>(t.data().data(), n, t.size() / n);
  return b;
}

void BlockSet::validate() const {
  if (blocks.size() < 2) throw ConfigError("need at least 2 blocks");
  const Index n = blocks.front().n();
  if (n < 2) throw ConfigError("need at least 2 samples");
  for (const auto& b : blocks) {
    if (b.n() != n) throw ConfigError("blocks disagree on sample count");
    Index p = 1;
    for (Index pm : b.dims) p *= pm;
    if (p != b.p()) throw ConfigError("block dims do not match data width");
  }
}

void DesignMatrix::validate(Index num_blocks) const {
  if (c.rows() != num_blocks || c.cols() != num_blocks)
    throw ConfigError("design matrix shape does not match block count");
  if ((c - c.transpose()).cwiseAbs().maxCoeff() > 0.0)
    throw ConfigError("design matrix must be symmetric");
  if (c.minCoeff() < 0.0)
    throw ConfigError("design matrix entries must be nonnegative");
  bool any = false;
  for (Index l = 0; l < c.rows(); ++l)
    for (Index k = 0; k < c.cols(); ++k)
      if (l != k && c(l, k) > 0.0) any = true;
  if (!any) throw ConfigError("design matrix has no off-diagonal connection");
}

void SolverOptions::validate(const BlockSet& bs) const {
  if (eps_stop <= 0.0) throw ConfigError("eps_stop must be positive");
  if (max_iter < 1) throw ConfigError("max_iter must be positive");
  if (n_starts < 1) throw ConfigError("n_starts must be positive");
  if (ranks.size() != static_cast<size_t>(bs.size()))
    throw ConfigError("need one rank per block");
  if (!tau.empty() && tau.size() != static_cast<size_t>(bs.size()))
    throw ConfigError("need one tau per block (or none)");
  for (Index l = 0; l < bs.size(); ++l) {
    const auto& b = bs.blocks[static_cast<size_t>(l)];
    const Index r = ranks[static_cast<size_t>(l)];
    if (r < 1) throw ConfigError("ranks must be positive");
    if (orth.all_modes || b.order() == 2) {
      // Completely orthogonal factors (and the d=2 tandem) need every mode
      // to accommodate R orthonormal columns.
      for (Index pm : b.dims)
        if (r > pm)
          throw ConfigError("rank " + std::to_string(r) +
                            " exceeds a mode dimension required orthogonal");
    } else {
      const Index m = std::min<Index>(orth.mode, b.order());
      if (r > b.dims[static_cast<size_t>(m - 1)])
        throw ConfigError("rank exceeds the orthogonal mode's dimension");
    }
  }
}

PreprocessResult preprocess(BlockSet& bs) {
  PreprocessResult out;
  for (auto& b : bs.blocks) {
    const double n = static_cast<double>(b.n());
    b.x.rowwise() -= b.x.colwise().mean();
    const double s =
        std::sqrt(static_cast<double>(b.p()) / n) * b.x.norm();
    if (s == 0.0) throw NumericalError("preprocess: constant block");
    b.x /= s;
    out.scales.push_back(s);
  }
  return out;
}

double criterion_from_components(const std::vector<Vector>& y,
                                 const DesignMatrix& c, const SchemeG& g,
                                 Index n) {
  double crit = 0.0;
  const Index L = c.c.rows();
  for (Index l = 0; l < L; ++l)
    for (Index k = 0; k < L; ++k)
      if (c.c(l, k) != 0.0)
        crit += c.c(l, k) *
                g.g(y[static_cast<size_t>(l)].dot(y[static_cast<size_t>(k)]) /
                    static_cast<double>(n));
  return crit;
}

double criterion_value(const BlockSet& bs, const DesignMatrix& c,
                       const SchemeG& g, const std::vector<Vector>& w) {
  std::vector<Vector> y;
  y.reserve(w.size());
  for (size_t l = 0; l < w.size(); ++l) {
    if (w[l].size() != bs.blocks[l].p())
      throw ConfigError("criterion_value: canonical vector length mismatch");
    y.push_back(bs.blocks[l].x * w[l]);
  }
  return criterion_from_components(y, c, g, bs.n_samples());
}

Vector block_gradient(const BlockSet& bs, const DesignMatrix& c,
                      const SchemeG& g, const std::vector<Vector>& y,
                      Index l) {
  const Index n = bs.n_samples();
  const auto& yl = y[static_cast<size_t>(l)];
  Vector z = Vector::Zero(n);
  for (Index k = 0; k < bs.size(); ++k) {
    const double clk = c.c(l, k);
    if (clk == 0.0) continue;
    const auto& yk = y[static_cast<size_t>(k)];
    z += clk * g.gprime(yl.dot(yk) / static_cast<double>(n)) * yk;
  }
  return (2.0 / static_cast<double>(n)) *
         (bs.blocks[static_cast<size_t>(l)].x.transpose() * z);
}

}  // namespace tgcca
