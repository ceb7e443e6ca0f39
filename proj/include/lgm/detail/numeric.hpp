#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace lgm::detail {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // 0.5 * ln(2 pi)

//! Stable log(sum(exp(v))) over a contiguous range of values.
template <typename Range>
double log_sum_exp(const Range& values) {
  double top = -std::numeric_limits<double>::infinity();
  for (double v : values) top = std::max(top, v);
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - top);
  return top + std::log(sum);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

}  // namespace lgm::detail
