#pragma once

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace tarma::detail {

/// Type-7 empirical quantile of an ascending-sorted sample.
inline double type7_quantile(std::span<const double> sorted, double prob) {
  const int n = static_cast<int>(sorted.size());
  if (n == 1) return sorted[0];
  const double h = (n - 1) * prob;
  int lo = static_cast<int>(std::floor(h));
  if (lo > n - 2) lo = n - 2;
  const double frac = h - lo;
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

inline double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace tarma::detail
