#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tgcca/tensor.hpp"

namespace tgcca {

/// One data block: n vectorized samples stacked as rows of X (n x p),
/// with the underlying per-sample mode dimensions.
struct Block {
  Matrix x;                 // n x p, row i = mode-1 vectorization of sample i
  std::vector<Index> dims;  // p_1..p_d, prod = p

  Index n() const { return x.rows(); }
  Index p() const { return x.cols(); }
  Index order() const { return static_cast<Index>(dims.size()); }

  /// The block as a sample-stacked (d+1)-mode tensor (mode 1 = samples).
  DenseTensor stacked() const;
  static Block from_stacked(const DenseTensor& t);
};

struct BlockSet {
  std::vector<Block> blocks;

  Index size() const { return static_cast<Index>(blocks.size()); }
  Index n_samples() const { return blocks.front().n(); }
  void validate() const;
};

struct DesignMatrix {
  Matrix c;  // L x L, symmetric, nonnegative
  void validate(Index num_blocks) const;
};

enum class Scheme { identity, square };

struct SchemeG {
  Scheme variant = Scheme::identity;
  double g(double x) const { return variant == Scheme::identity ? x : x * x; }
  double gprime(double x) const {
    return variant == Scheme::identity ? 1.0 : 2.0 * x;
  }
};

enum class Regime { separable, nonseparable };

struct OrthMode {
  bool all_modes = false;
  Index mode = 1;  // 1-based; used when all_modes is false

  bool is_orthogonal(Index m, Index d) const {
    if (all_modes || d == 1) return true;
    // A matrix tensor with orthogonality on one mode still needs Procrustes
    // on that mode only; callers override for the d=2 tandem path.
    return m == mode;
  }
};

struct SolverOptions {
  double eps_stop = 1e-10;
  int max_iter = 1000;
  int n_starts = 1;
  std::uint64_t seed = 0;
  OrthMode orth;
  std::vector<Index> ranks;  // R_l per block
  Regime regime = Regime::separable;
  std::vector<double> tau;  // shrinkage per block
  bool identity_m = false;  // force M_l = I (skips estimation)
  bool use_tandem = true;   // d=2 separable blocks use the tandem sweep
  bool track_constraints = false;

  void validate(const BlockSet& bs) const;
};

struct PreprocessResult {
  std::vector<double> scales;  // s_l per block
};

/// Column-center each block over samples, then divide by
/// s_l = sqrt(p_l/n) * ||X_l||_F (computed after centering). In place.
PreprocessResult preprocess(BlockSet& bs);

/// sum_{l,k} c_lk g(y_l.y_k / n) computed from components, never
/// materializing cross-covariances.
double criterion_from_components(const std::vector<Vector>& y,
                                 const DesignMatrix& c, const SchemeG& g,
                                 Index n);

double criterion_value(const BlockSet& bs, const DesignMatrix& c,
                       const SchemeG& g, const std::vector<Vector>& w);

/// Partial gradient of the criterion w.r.t. w_l, computed as
/// (2/n) X_l^T z_l with z_l = sum_k c_lk g'(y_l.y_k/n) y_k.
Vector block_gradient(const BlockSet& bs, const DesignMatrix& c,
                      const SchemeG& g, const std::vector<Vector>& y, Index l);

}  // namespace tgcca
