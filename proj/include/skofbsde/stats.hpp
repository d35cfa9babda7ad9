#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace skofbsde {

// Pairwise (cascade) summation; fixed order, so results do not depend on the
// worker count that produced the inputs.
inline double pairwise_sum(std::span<const double> x) {
  if (x.size() <= 16) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t h = x.size() / 2;
  return pairwise_sum(x.first(h)) + pairwise_sum(x.subspan(h));
}

inline double pairwise_mean(std::span<const double> x) {
  return x.empty() ? 0.0 : pairwise_sum(x) / static_cast<double>(x.size());
}

}  // namespace skofbsde
