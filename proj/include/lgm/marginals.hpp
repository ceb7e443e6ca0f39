#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lgm/random.hpp"

namespace lgm {

//! 0.9 * min(sd, iqr / 1.34) * n^(-1/5); falls back to sd alone when iqr == 0.
double silverman_rule(double sd, double iqr, std::size_t n);

//! Silverman bandwidth of a column (unbiased sd, linear-interpolation IQR).
//! Throws DataError when n < 2 or all values are identical.
double silverman_bandwidth(std::span<const double> column);

//! Univariate Gaussian-kernel density estimate with equal weights.
//!
//! Besides the centers and bandwidth, the model keeps a tabulated CDF on a
//! fixed grid spanning [min - 12h, max + 12h]. The table only narrows the
//! bracket for inverse_cdf; every returned value is computed from the exact
//! mixture.
class MarginalModel {
public:
  //! Throws DataError unless bandwidth > 0, centers finite and n >= 2.
  MarginalModel(std::vector<double> centers, double bandwidth);

  //! Sorted ascending.
  const std::vector<double>& centers() const { return centers_; }
  double bandwidth() const { return bandwidth_; }
  std::size_t size() const { return centers_.size(); }

  double pdf(double x) const;
  double cdf(double x) const;

  //! Solves cdf(x) = u to within 1e-12 in u. Throws InvalidArgument unless
  //! 0 < u < 1.
  double inverse_cdf(double u) const;

  //! Draw: uniformly chosen center plus N(0, h^2) noise.
  double sample(Rng& rng) const;

  static constexpr std::size_t kTableSize = 512;
  static constexpr double kBracketWidths = 12.0;

private:
  void build_table();

  std::vector<double> centers_;
  double bandwidth_;
  double table_lo_ = 0.0;
  double table_step_ = 0.0;
  std::vector<double> table_;
};

//! centers = column, bandwidth = silverman_bandwidth(column).
MarginalModel fit_marginal(std::span<const double> column);

}  // namespace lgm
