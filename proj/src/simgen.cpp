#include "tgcca/simgen.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "tgcca/linalg.hpp"
#include "tgcca/log.hpp"

namespace tgcca {

namespace {

void require_2d(const std::vector<Index>& dims, const std::string& name) {
  if (dims.size() != 2)
    throw ConfigError(name + ": shape needs a 2-mode dim list");
}

Vector band_indicator(Index p, Index lo, Index hi) {
  if (lo < 0 || hi >= p || lo > hi)
    throw ConfigError("shape band out of range");
  Vector v = Vector::Zero(p);
  v.segment(lo, hi - lo + 1).setOnes();
  return v;
}

DenseTensor tensor_from_matrix(const Matrix& m) {
  DenseTensor t({m.rows(), m.cols()});
  t.data() = Eigen::Map<const Vector>(m.data(), m.size());
  return t;
}

}  // namespace

ShapeSpec shape_from_tensor(DenseTensor mask, const std::string& name) {
  ShapeSpec s;
  s.name = name;
  if (mask.order() == 1) {
    const double nrm = mask.data().norm();
    if (nrm <= 0.0) throw ConfigError("shape_from_tensor: zero mask");
    s.cp.lambda = Vector::Constant(1, nrm);
    s.cp.factors.push_back(mask.data() / nrm);
  } else if (mask.order() == 2) {
    Matrix m = mode_matricize(mask, 1);
    const Index rmax = std::min(m.rows(), m.cols());
    TruncatedSvd svd = truncated_svd(m, rmax);
    Index rank = 0;
    const double tol = 1e-12 * (svd.singular.size() ? svd.singular[0] : 0.0);
    while (rank < svd.singular.size() && svd.singular[rank] > tol) ++rank;
    if (rank == 0) throw ConfigError("shape_from_tensor: zero mask");
    s.cp.lambda = svd.singular.head(rank);
    s.cp.factors.push_back(svd.left.leftCols(rank));
    s.cp.factors.push_back(svd.right.leftCols(rank));
  } else {
    throw ConfigError("shape_from_tensor: only 1- and 2-mode shapes");
  }
  s.mask = std::move(mask);
  return s;
}

ShapeSpec make_rect(const std::vector<Index>& dims, Index r0, Index r1,
                    Index c0, Index c1) {
  require_2d(dims, "make_rect");
  Vector u = band_indicator(dims[0], r0, r1);
  Vector v = band_indicator(dims[1], c0, c1);
  ShapeSpec s = shape_from_tensor(tensor_from_matrix(u * v.transpose()),
                                  "rect");
  return s;
}

ShapeSpec make_cross(const std::vector<Index>& dims, Index r0, Index r1,
                     Index c0, Index c1) {
  require_2d(dims, "make_cross");
  Vector u = band_indicator(dims[0], r0, r1);
  Vector v = band_indicator(dims[1], c0, c1);
  // row band + column band, overlap = 2
  Matrix m = u * Vector::Ones(dims[1]).transpose() +
             Vector::Ones(dims[0]) * v.transpose();
  return shape_from_tensor(tensor_from_matrix(m), "cross");
}

ShapeSpec make_diag_band(const std::vector<Index>& dims, Index width) {
  require_2d(dims, "make_diag_band");
  if (width < 0) throw ConfigError("make_diag_band: negative width");
  Matrix m = Matrix::Zero(dims[0], dims[1]);
  for (Index i = 0; i < dims[0]; ++i)
    for (Index j = 0; j < dims[1]; ++j)
      if (std::abs(static_cast<long long>(i - j)) <= width) m(i, j) = 1.0;
  return shape_from_tensor(tensor_from_matrix(m), "diag-band");
}

ShapeSpec builtin_shape(const std::string& name,
                        const std::vector<Index>& dims) {
  require_2d(dims, "builtin_shape");
  const Index p1 = dims[0], p2 = dims[1];
  if (p1 < 3 || p2 < 3)
    throw ConfigError("builtin_shape: dims too small for " + name);
  const Index r0 = p1 / 3, r1 = std::min(p1 - 1, p1 / 3 + p1 / 3);
  const Index c0 = p2 / 3, c1 = std::min(p2 - 1, p2 / 3 + p2 / 3);
  if (name == "rect") return make_rect(dims, r0, r1, c0, c1);
  if (name == "cross") return make_cross(dims, r0, r1, c0, c1);
  if (name == "diag-band")
    return make_diag_band(dims, std::max<Index>(1, std::min(p1, p2) / 6));
  throw ConfigError("builtin_shape: unknown shape '" + name + "'");
}

void SimSpec::validate() const {
  if (blocks.empty()) throw ConfigError("SimSpec: no blocks");
  if (!(eta > 0.0)) throw ConfigError("SimSpec: eta must be > 0");
  if (n < 1) throw ConfigError("SimSpec: n must be >= 1");
  if (folds < 1) throw ConfigError("SimSpec: folds must be >= 1");
  for (const auto& b : blocks) {
    if (b.rho * b.rho > 1.0 + 1e-12)
      throw ConfigError("SimSpec: |rho| must be <= 1");
    if (b.w.vec_size() == 0 || b.w.reconstruct().norm() == 0.0)
      throw ConfigError("SimSpec: zero true vector");
    Index p = 1;
    for (Index d : b.dims) p *= d;
    if (p != b.w.vec_size())
      throw ConfigError("SimSpec: dims do not match true vector");
  }
}

Matrix make_noise(const std::vector<Index>& dims, const DenseTensor* shape,
                  std::mt19937_64& rng, bool zero_unstructured) {
  Index p = 1;
  for (Index d : dims) p *= d;
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix tu = Matrix::Zero(p, p);
  if (!zero_unstructured)
    for (Index j = 0; j < p; ++j)
      for (Index i = j; i < p; ++i) tu(i, j) = normal(rng);

  if (!shape) {
    if (zero_unstructured)
      throw ConfigError("make_noise: no shape and unstructured part disabled");
    return tu;
  }
  if (static_cast<Index>(shape->order()) != static_cast<Index>(dims.size()) ||
      shape->dims() != dims)
    throw ConfigError("make_noise: shape dims do not match block dims");
  Vector ts = shape->data();
  const double ts2 = ts.squaredNorm();  // ||ts ts'||_F = ||ts||^2
  if (ts2 <= 0.0) throw ConfigError("make_noise: zero structured shape");
  Matrix t(p, zero_unstructured ? 1 : p + 1);
  Index col = 0;
  if (!zero_unstructured) {
    const double tu_fro = (tu * tu.transpose()).norm();
    t.leftCols(p) = tu / std::sqrt(tu_fro);
    col = p;
  }
  t.col(col) = ts / std::sqrt(ts2);
  return t;
}

Matrix build_block_cov(const Vector& w, double eta, const Matrix& t) {
  const double w2 = w.squaredNorm();
  if (w2 <= 0.0) throw ConfigError("build_block_cov: zero vector");
  if (!(eta > 0.0)) throw ConfigError("build_block_cov: eta must be > 0");
  const Index p = w.size();
  if (t.rows() != p) throw ConfigError("build_block_cov: T row mismatch");
  Matrix s = (w * w.transpose()) / (w2 * w2);
  Matrix proj = Matrix::Identity(p, p) - (w * w.transpose()) / w2;
  Matrix pt = proj * t;
  Matrix e = pt * pt.transpose();
  const double e_fro = e.norm();
  // relative cutoff: projecting T can cancel to pure roundoff (~eps^2 of the
  // unprojected scale), which must not be re-amplified by the normalization
  const double tt_fro = (t * t.transpose()).norm();
  if (e_fro <= 1e-20 * tt_fro || tt_fro == 0.0) {
    log::info("build_block_cov: noise part vanishes, returning the pure "
              "signal covariance");
    return s;
  }
  Matrix sigma = s + (s.norm() / (eta * e_fro)) * e;
  return 0.5 * (sigma + sigma.transpose());
}

namespace {

// Factor G with G G' = m for a symmetric PSD matrix; tolerates tiny negative
// eigenvalues from roundoff.
Matrix psd_factor(const Matrix& m, const std::string& what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  if (es.info() != Eigen::Success)
    throw NumericalError(what + ": eigendecomposition failed");
  Vector ev = es.eigenvalues();
  const double floor = -1e-8 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (Index i = 0; i < ev.size(); ++i) {
    if (ev[i] < floor)
      throw NumericalError(what + ": not positive semidefinite (eigenvalue " +
                           std::to_string(ev[i]) + ")");
    ev[i] = std::sqrt(std::max(ev[i], 0.0));
  }
  return es.eigenvectors() * ev.asDiagonal();
}

}  // namespace

SimulatedData sample_dataset(const SimSpec& spec) {
  spec.validate();
  const size_t num_blocks = spec.blocks.size();

  SimulatedData out;
  std::vector<Matrix> factor(num_blocks);  // of Sigma - a a'
  {
    // model construction gets its own stream so fold contents depend only
    // on (seed, fold)
    std::seed_seq sq{spec.seed, static_cast<std::uint64_t>(0x6d6f64656cULL)};
    std::mt19937_64 model_rng(sq);
    for (size_t l = 0; l < num_blocks; ++l) {
      const auto& bs = spec.blocks[l];
      Vector w = bs.w.reconstruct();
      const DenseTensor* shape =
          bs.noise_shape ? &*bs.noise_shape : nullptr;
      Matrix t = make_noise(bs.dims, shape, model_rng);
      Matrix sigma = build_block_cov(w, spec.eta, t);
      Vector a = bs.rho * (sigma * w);
      Matrix cond = sigma - a * a.transpose();
      factor[l] = psd_factor(cond, "sample_dataset: conditional covariance");
      out.block_cov.push_back(std::move(sigma));
      out.a.push_back(std::move(a));
      out.true_w.push_back(std::move(w));
      out.true_cp.push_back(bs.w);
    }
  }

  for (int f = 0; f < spec.folds; ++f) {
    std::seed_seq sq{spec.seed, static_cast<std::uint64_t>(f) + 1};
    std::mt19937_64 rng(sq);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector z(spec.n);
    for (Index i = 0; i < spec.n; ++i) z[i] = normal(rng);
    BlockSet fold;
    for (size_t l = 0; l < num_blocks; ++l) {
      const Index p = out.true_w[l].size();
      Matrix eps(p, spec.n);
      for (Index j = 0; j < spec.n; ++j)
        for (Index i = 0; i < p; ++i) eps(i, j) = normal(rng);
      Block blk;
      blk.dims = spec.blocks[l].dims;
      blk.x = (out.a[l] * z.transpose() + factor[l] * eps).transpose();
      fold.blocks.push_back(std::move(blk));
    }
    out.folds.push_back(std::move(fold));
  }
  return out;
}

}  // namespace tgcca
