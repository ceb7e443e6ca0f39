#include "lgm/density_models.hpp"

#include <cmath>
#include <string>

#include "lgm/detail/numeric.hpp"
#include "lgm/error.hpp"
#include "lgm/random.hpp"

namespace lgm {

namespace {

constexpr double kRidgeLadder[] = {0.0, 1e-10, 1e-8, 1e-6};

// Pivots below this fraction of trace/d are treated as a failed factorization;
// they are rounding noise of an exactly singular matrix.
constexpr double kPivotFloor = 1e-13;

}  // namespace

GaussianModel::GaussianModel(Vector mean, Matrix covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  const Index d = mean_.size();
  if (d < 1 || covariance_.rows() != d || covariance_.cols() != d)
    throw InvalidArgument("gaussian model: mean and covariance shapes disagree");
  if (!mean_.allFinite() || !covariance_.allFinite()) throw NumericError("gaussian model: non-finite parameters");
  covariance_ = (0.5 * (covariance_ + covariance_.transpose())).eval();

  double scale = covariance_.trace() / static_cast<double>(d);
  if (!(scale > 0.0)) scale = 1.0;

  for (double step : kRidgeLadder) {
    const double ridge = step * scale;
    Matrix stabilized = covariance_;
    stabilized.diagonal().array() += ridge;
    Eigen::LLT<Matrix> llt(stabilized);
    if (llt.info() != Eigen::Success) continue;
    Matrix factor = llt.matrixL();
    if (factor.diagonal().minCoeff() * factor.diagonal().minCoeff() <= kPivotFloor * scale) continue;
    cholesky_ = std::move(factor);
    ridge_ = ridge;
    half_log_det_ = cholesky_.diagonal().array().log().sum();
    return;
  }
  throw NumericError("gaussian model: covariance is not positive definite even with ridge " +
                     std::to_string(kRidgeLadder[3] * scale));
}

GaussianModel fit_gaussian(const LatentMatrix& y) {
  const Index n = y.rows();
  if (n < 2) throw DataError("gaussian fit needs at least 2 rows, got " + std::to_string(n));
  Vector mean = y.data().colwise().mean();
  const Matrix centered = y.data().rowwise() - mean.transpose();
  Matrix cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  return GaussianModel(std::move(mean), std::move(cov));
}

Matrix sample_gaussian(const GaussianModel& model, std::size_t count, std::uint64_t seed) {
  const Index d = model.dim();
  Rng rng(seed);
  Matrix z(static_cast<Index>(count), d);
  for (Index i = 0; i < z.rows(); ++i)
    for (Index j = 0; j < d; ++j) z(i, j) = rng.normal();
  Matrix out = z * model.cholesky_factor().transpose();
  out.rowwise() += model.mean().transpose();
  return out;
}

Vector log_density_rows(const GaussianModel& model, const Matrix& x) {
  if (x.cols() != model.dim()) throw InvalidArgument("log_density: dimension mismatch");
  Matrix diff = (x.rowwise() - model.mean().transpose()).transpose();
  model.cholesky_factor().triangularView<Eigen::Lower>().solveInPlace(diff);
  const double constant = -model.half_log_det() - static_cast<double>(model.dim()) * detail::kLogSqrt2Pi;
  return (-0.5 * diff.colwise().squaredNorm().array() + constant).matrix().transpose();
}

double log_density(const GaussianModel& model, const Vector& x) {
  return log_density_rows(model, x.transpose())(0);
}

IndependentModel::IndependentModel(std::vector<MarginalModel> margins) : margins_(std::move(margins)) {
  if (margins_.empty()) throw InvalidArgument("independent model needs at least one margin");
}

std::vector<MarginalModel> fit_margins(const LatentMatrix& y) {
  std::vector<MarginalModel> margins;
  margins.reserve(static_cast<std::size_t>(y.cols()));
  std::vector<double> column(static_cast<std::size_t>(y.rows()));
  for (Index j = 0; j < y.cols(); ++j) {
    for (Index i = 0; i < y.rows(); ++i) column[static_cast<std::size_t>(i)] = y(i, j);
    try {
      margins.push_back(fit_marginal(column));
    } catch (const DataError& e) {
      throw DataError("column " + std::to_string(j) + ": " + e.what());
    }
  }
  return margins;
}

IndependentModel fit_independent(const LatentMatrix& y) { return IndependentModel(fit_margins(y)); }

Matrix sample_independent(const IndependentModel& model, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  Matrix out(static_cast<Index>(count), model.dim());
  for (Index i = 0; i < out.rows(); ++i)
    for (Index j = 0; j < out.cols(); ++j) out(i, j) = model.margins()[static_cast<std::size_t>(j)].sample(rng);
  return out;
}

}  // namespace lgm
