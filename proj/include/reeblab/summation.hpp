#pragma once
// Pairwise (cascade) summation: error O(log n) ulps instead of O(n).

#include <cstddef>
#include <vector>

namespace reeblab {

inline double pairwise_sum(const double* p, std::size_t n) {
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += p[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(p, half) + pairwise_sum(p + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& v) {
  return pairwise_sum(v.data(), v.size());
}

}  // namespace reeblab
