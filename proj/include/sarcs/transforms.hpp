#pragma once

// The lower-triangular all-ones matrix S maps increments x' to signals
// x = S x'; its inverse is the first difference with x'_1 = x_1. Neither
// is ever materialized.

#include <cstddef>
#include <span>
#include <vector>

namespace sarcs {

inline std::vector<double> cumulative_transform(std::span<const double> xp) {
  std::vector<double> x(xp.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < xp.size(); ++i) x[i] = acc += xp[i];
  return x;
}

inline std::vector<double> difference_transform(std::span<const double> x) {
  std::vector<double> xp(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    xp[i] = i == 0 ? x[0] : x[i] - x[i - 1];
  return xp;
}

}  // namespace sarcs
