#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "lgm/density_models.hpp"
#include "lgm/detail/numeric.hpp"
#include "lgm/error.hpp"
#include "lgm/random.hpp"

namespace lgm {

namespace {

// Squared distances between rows of a and rows of b, both already divided by
// the per-dimension bandwidths. Entries are clamped at 0.
Matrix scaled_squared_distances(const Matrix& a, const Matrix& b) {
  Matrix out = -2.0 * (a * b.transpose());
  out.colwise() += a.rowwise().squaredNorm();
  out.rowwise() += b.rowwise().squaredNorm().transpose();
  return out.cwiseMax(0.0);
}

// Sum over test rows of log KDE density, for a kernel scale `factor` applied
// on top of the base bandwidths. `dist2` holds test x train scaled distances.
double held_out_log_likelihood(const Matrix& dist2, double factor, double log_norm) {
  const double inv = -0.5 / (factor * factor);
  const Index d_train = dist2.cols();
  double total = 0.0;
  for (Index i = 0; i < dist2.rows(); ++i) {
    const auto row = dist2.row(i);
    const double top = inv * row.minCoeff();
    double sum = 0.0;
    for (Index k = 0; k < d_train; ++k) sum += std::exp(inv * row(k) - top);
    total += top + std::log(sum);
  }
  return total - static_cast<double>(dist2.rows()) * (log_norm + std::log(static_cast<double>(d_train)));
}

}  // namespace

MkdeModel::MkdeModel(Matrix centers, Vector bandwidths)
    : centers_(std::move(centers)), bandwidths_(std::move(bandwidths)) {
  if (centers_.rows() < 1 || centers_.cols() < 1) throw InvalidArgument("mkde: no centers");
  if (bandwidths_.size() != centers_.cols()) throw InvalidArgument("mkde: bandwidth count must equal dimension");
  if (!((bandwidths_.array() > 0.0).all()) || !bandwidths_.allFinite())
    throw InvalidArgument("mkde: bandwidths must be positive");
}

std::vector<double> default_bandwidth_grid() {
  std::vector<double> grid;
  for (int k = -4; k <= 4; ++k) grid.push_back(std::pow(2.0, 0.5 * k));
  return grid;
}

MkdeFit fit_mkde_cv(const LatentMatrix& y, const MkdeOptions& options, std::uint64_t seed) {
  const Index n = y.rows();
  const Index d = y.cols();
  if (options.grid.empty()) throw InvalidArgument("mkde: bandwidth grid is empty");
  for (double g : options.grid)
    if (!(g > 0.0) || !std::isfinite(g)) throw InvalidArgument("mkde: grid factors must be positive");
  if (options.folds < 2 || options.folds > n) {
    throw InvalidArgument("mkde: folds=" + std::to_string(options.folds) + " must satisfy 2 <= folds <= n=" +
                          std::to_string(n));
  }

  Vector base(d);
  std::vector<double> column(static_cast<std::size_t>(n));
  for (Index j = 0; j < d; ++j) {
    for (Index i = 0; i < n; ++i) column[static_cast<std::size_t>(i)] = y(i, j);
    try {
      base(j) = silverman_bandwidth(column);
    } catch (const DataError& e) {
      throw DataError("column " + std::to_string(j) + ": " + e.what());
    }
  }

  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(seed);
  for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);

  const Matrix scaled = y.data().array().rowwise() / base.transpose().array();
  std::vector<double> scores(options.grid.size(), 0.0);
  for (int f = 0; f < options.folds; ++f) {
    const Index begin = n * f / options.folds;
    const Index end = n * (f + 1) / options.folds;
    Matrix test(end - begin, d);
    Matrix train(n - (end - begin), d);
    for (Index k = 0, t = 0, r = 0; k < n; ++k) {
      const auto row = scaled.row(perm[static_cast<std::size_t>(k)]);
      if (k >= begin && k < end) test.row(t++) = row;
      else train.row(r++) = row;
    }
    const Matrix dist2 = scaled_squared_distances(test, train);
    for (std::size_t g = 0; g < options.grid.size(); ++g) {
      const double factor = options.grid[g];
      const double log_norm = static_cast<double>(d) * (detail::kLogSqrt2Pi + std::log(factor)) +
                              base.array().log().sum();
      scores[g] += held_out_log_likelihood(dist2, factor, log_norm) / static_cast<double>(test.rows());
    }
  }
  for (double& s : scores) s /= static_cast<double>(options.folds);

  // Best score; ties go to the smaller factor.
  std::size_t best = 0;
  for (std::size_t g = 1; g < scores.size(); ++g) {
    if (scores[g] > scores[best] || (scores[g] == scores[best] && options.grid[g] < options.grid[best])) best = g;
  }
  const double factor = options.grid[best];
  return MkdeFit{MkdeModel(y.data(), base * factor), factor, std::move(scores)};
}

Matrix sample_mkde(const MkdeModel& model, std::size_t count, std::uint64_t seed) {
  const Index d = model.dim();
  Rng rng(seed);
  Matrix out(static_cast<Index>(count), d);
  for (Index i = 0; i < out.rows(); ++i) {
    const auto c = static_cast<Index>(rng.index(static_cast<std::size_t>(model.centers().rows())));
    for (Index j = 0; j < d; ++j) out(i, j) = model.centers()(c, j) + model.bandwidths()(j) * rng.normal();
  }
  return out;
}

double log_density(const MkdeModel& model, const Vector& x) {
  if (x.size() != model.dim()) throw InvalidArgument("log_density: dimension mismatch");
  const Matrix& c = model.centers();
  const Vector& h = model.bandwidths();
  Vector terms(c.rows());
  for (Index k = 0; k < c.rows(); ++k) {
    terms(k) = -0.5 * ((x.transpose() - c.row(k)).array() / h.transpose().array()).square().sum();
  }
  const double log_norm = static_cast<double>(model.dim()) * detail::kLogSqrt2Pi + h.array().log().sum() +
                          std::log(static_cast<double>(c.rows()));
  return detail::log_sum_exp(terms) - log_norm;
}

}  // namespace lgm
