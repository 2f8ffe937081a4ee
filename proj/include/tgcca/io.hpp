#pragma once

#include <string>

#include "tgcca/model.hpp"
#include "tgcca/simgen.hpp"

namespace tgcca {

// Tensor files: ASCII header "TNSRv1 f64 <d> <p_1> ... <p_d>\n" followed by
// prod(p_m) little-endian binary64 values in mode-1 vectorization order.
// Sample-stacked datasets are (d+1)-mode tensors with mode 1 = samples.

void write_tensor(const std::string& path, const DenseTensor& t);
DenseTensor read_tensor(const std::string& path);

/// Parse a simulation config (JSON text). Schema:
///   eta (or snr_db, eta = 10^(dB/20)), n, folds, seed,
///   blocks: [{dims, shape ("rect"|"cross"|"diag-band") or shape_file,
///             rho (default sqrt(0.8)), noise_shape (optional name or file)}]
SimSpec parse_sim_config(const std::string& json_text);

struct FitConfig {
  std::vector<std::string> block_paths;  // direct mode; empty with data_dir
  Matrix design;  // empty -> fully connected (ones off the diagonal)
  Scheme scheme = Scheme::identity;
  SolverOptions opts;
  std::string model = "tgcca";
};

/// Parse a fit config (JSON text). Schema: blocks (paths, optional when a
/// dataset manifest supplies them), design (matrix or "all"), scheme,
/// ranks, regime, tau (scalar or list), eps_stop, max_iter, n_starts, seed,
/// orth_mode ("all" or 1-based mode), identity_m, use_tandem, model.
FitConfig parse_fit_config(const std::string& json_text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace tgcca
