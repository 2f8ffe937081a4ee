#pragma once

#include <optional>
#include <random>
#include <string>

#include "tgcca/model.hpp"

namespace tgcca {

/// A 0/1 mask tensor together with its exact CP decomposition (orthogonal by
/// construction: SVD-based for 2-mode masks).
struct ShapeSpec {
  std::string name;
  DenseTensor mask;
  CpVector cp;  // reconstructs the mask exactly

  Index rank() const { return cp.rank(); }
};

/// Axis-aligned rectangle indicator on rows [r0,r1] x cols [c0,c1]
/// (0-based, inclusive); exact rank 1.
ShapeSpec make_rect(const std::vector<Index>& dims, Index r0, Index r1,
                    Index c0, Index c1);

/// Union of a row band and a column band with the overlap set to the sum;
/// exact rank 2 (stored via the SVD of the mask).
ShapeSpec make_cross(const std::vector<Index>& dims, Index r0, Index r1,
                     Index c0, Index c1);

/// Band mask |i - j| <= width around the diagonal; rank >= 3 for width >= 1
/// on square masks (stored via the SVD numerical rank).
ShapeSpec make_diag_band(const std::vector<Index>& dims, Index width);

/// Exact CP of an arbitrary 1- or 2-mode tensor via truncated SVD (used for
/// user-supplied shapes).
ShapeSpec shape_from_tensor(DenseTensor mask, const std::string& name);

/// Dispatch by name ("rect", "cross", "diag-band") with centered defaults
/// covering roughly a third of each axis.
ShapeSpec builtin_shape(const std::string& name,
                        const std::vector<Index>& dims);

struct SimBlockSpec {
  std::vector<Index> dims;
  CpVector w;        // true canonical vector
  double rho = 0.0;  // latent-factor loading, |rho| <= 1
  std::optional<DenseTensor> noise_shape;  // structured noise direction
};

struct SimSpec {
  std::vector<SimBlockSpec> blocks;
  double eta = 1.0;  // signal-to-noise control, > 0
  Index n = 100;     // samples per fold
  int folds = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Noise factor T such that T T' = Tu Tu'/||Tu Tu'||_F + ts ts'/||ts ts'||_F,
/// with Tu lower-triangular Gaussian and ts the vectorized shape. Without a
/// shape, T is the plain triangular factor. zero_unstructured is a test hook
/// that drops the Gaussian part.
Matrix make_noise(const std::vector<Index>& dims, const DenseTensor* shape,
                  std::mt19937_64& rng, bool zero_unstructured = false);

/// Sigma = S + (||S||_F / (eta ||E||_F)) E with S = ww'/||w||^4 and
/// E = P T T' P, P = I - ww'/||w||^2. Forces w' Sigma w = 1. When E = 0 the
/// noise-free S is returned with a log note.
Matrix build_block_cov(const Vector& w, double eta, const Matrix& t);

struct SimulatedData {
  std::vector<BlockSet> folds;
  std::vector<Vector> true_w;       // per block, length p_l
  std::vector<CpVector> true_cp;    // per block
  std::vector<Matrix> block_cov;    // Sigma_ll^eta per block
  std::vector<Vector> a;            // a_l = rho_l Sigma_l w_l
};

/// Latent factor model: z ~ N(0,1) shared across blocks,
/// x_l | z ~ N(a_l z, Sigma_l - a_l a_l'). One RNG stream per fold derived
/// from (seed, fold); covariances built from their own (seed-derived) stream.
SimulatedData sample_dataset(const SimSpec& spec);

}  // namespace tgcca
