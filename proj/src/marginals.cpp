#include "lgm/marginals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "lgm/error.hpp"

namespace lgm {

namespace {

// Standardized offsets beyond which a kernel's CDF is exactly 1 or its CDF/pdf
// exactly 0 in double precision.
constexpr double kUpperSaturation = 9.0;
constexpr double kLowerUnderflow = 40.0;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

double silverman_rule(double sd, double iqr, std::size_t n) {
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

double silverman_bandwidth(std::span<const double> column) {
  const std::size_t n = column.size();
  if (n < 2) throw DataError("bandwidth needs at least 2 values, got " + std::to_string(n));
  double mean = 0.0;
  for (double v : column) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : column) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sd > 0.0)) throw DataError("degenerate column: all values are identical");

  std::vector<double> sorted(column.begin(), column.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  return silverman_rule(sd, iqr, n);
}

MarginalModel::MarginalModel(std::vector<double> centers, double bandwidth)
    : centers_(std::move(centers)), bandwidth_(bandwidth) {
  if (centers_.size() < 2) throw DataError("marginal model needs at least 2 centers");
  if (!(bandwidth_ > 0.0) || !std::isfinite(bandwidth_)) throw DataError("marginal bandwidth must be positive");
  for (double c : centers_)
    if (!std::isfinite(c)) throw DataError("marginal centers must be finite");
  std::sort(centers_.begin(), centers_.end());
  build_table();
}

void MarginalModel::build_table() {
  table_lo_ = centers_.front() - kBracketWidths * bandwidth_;
  const double hi = centers_.back() + kBracketWidths * bandwidth_;
  table_step_ = (hi - table_lo_) / static_cast<double>(kTableSize);
  table_.resize(kTableSize + 1);
  for (std::size_t k = 0; k <= kTableSize; ++k) table_[k] = cdf(table_lo_ + static_cast<double>(k) * table_step_);
}

double MarginalModel::pdf(double x) const {
  const double h = bandwidth_;
  auto first = std::lower_bound(centers_.begin(), centers_.end(), x - kLowerUnderflow * h);
  auto last = std::upper_bound(first, centers_.end(), x + kLowerUnderflow * h);
  double sum = 0.0;
  for (auto it = first; it != last; ++it) {
    const double z = (x - *it) / h;
    sum += std::exp(-0.5 * z * z);
  }
  return sum / (static_cast<double>(centers_.size()) * h * std::sqrt(2.0 * std::numbers::pi));
}

double MarginalModel::cdf(double x) const {
  const double h = bandwidth_;
  // Centers far below x contribute exactly 1, far above exactly 0.
  auto first = std::lower_bound(centers_.begin(), centers_.end(), x - kUpperSaturation * h);
  auto last = std::upper_bound(first, centers_.end(), x + kLowerUnderflow * h);
  double sum = static_cast<double>(first - centers_.begin());
  for (auto it = first; it != last; ++it) sum += normal_cdf((x - *it) / h);
  return sum / static_cast<double>(centers_.size());
}

double MarginalModel::inverse_cdf(double u) const {
  if (!(u > 0.0 && u < 1.0)) throw InvalidArgument("inverse_cdf requires 0 < u < 1, got " + std::to_string(u));

  double lo, hi, f_lo, f_hi;
  if (u <= table_.front()) {
    hi = table_lo_;
    f_hi = table_.front();
    lo = hi - table_step_;
    while ((f_lo = cdf(lo)) > u) lo -= 2.0 * (hi - lo);
  } else if (u >= table_.back()) {
    lo = table_lo_ + static_cast<double>(kTableSize) * table_step_;
    f_lo = table_.back();
    hi = lo + table_step_;
    while ((f_hi = cdf(hi)) < u) hi += 2.0 * (hi - lo);
  } else {
    // table_[k] <= u < table_[k + 1]
    const auto it = std::upper_bound(table_.begin(), table_.end(), u);
    const auto k = static_cast<std::size_t>(it - table_.begin()) - 1;
    lo = table_lo_ + static_cast<double>(k) * table_step_;
    hi = lo + table_step_;
    f_lo = table_[k];
    f_hi = table_[k + 1];
  }

  // Safeguarded Newton: bisect whenever the Newton step leaves the bracket.
  double x = f_hi > f_lo ? lo + (u - f_lo) / (f_hi - f_lo) * (hi - lo) : 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double f = cdf(x) - u;
    if (std::abs(f) <= 1e-14) return x;
    if (f < 0.0) lo = x; else hi = x;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi)))
      return 0.5 * (lo + hi);
    const double slope = pdf(x);
    double next = slope > 0.0 ? x - f / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  return x;
}

double MarginalModel::sample(Rng& rng) const {
  const double center = centers_[rng.index(centers_.size())];
  return center + bandwidth_ * rng.normal();
}

MarginalModel fit_marginal(std::span<const double> column) {
  const double h = silverman_bandwidth(column);
  return MarginalModel(std::vector<double>(column.begin(), column.end()), h);
}

}  // namespace lgm
