#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "tgcca/common.hpp"

namespace tgcca {

/// Nearest-rank quantile: the ceil(q*n)-th smallest value (1-based), q in
/// (0,1]; q = 0 returns the minimum.
inline double nearest_rank_quantile(std::vector<double> v, double q) {
  if (v.empty()) throw ConfigError("quantile of empty sample");
  if (q < 0.0 || q > 1.0) throw ConfigError("quantile level outside [0,1]");
  std::sort(v.begin(), v.end());
  const auto n = static_cast<long>(v.size());
  long rank = static_cast<long>(std::ceil(q * static_cast<double>(n)));
  rank = std::clamp(rank, 1L, n);
  return v[static_cast<size_t>(rank - 1)];
}

inline double median(std::vector<double> v) {
  return nearest_rank_quantile(std::move(v), 0.5);
}

}  // namespace tgcca
