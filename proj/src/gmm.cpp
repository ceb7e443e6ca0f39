#include <algorithm>
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

constexpr double kEmptyComponentMass = 1e-12;
constexpr int kMaxReseeds = 3;
// Responsibilities below exp(-700) are dropped; they only feed subnormal
// arithmetic into the covariance products.
constexpr double kLogResponsibilityFloor = -700.0;

std::vector<Index> kmeans_plus_plus_seeds(const Matrix& x, Index count, Rng& rng) {
  const Index n = x.rows();
  std::vector<Index> chosen{static_cast<Index>(rng.index(static_cast<std::size_t>(n)))};
  Vector nearest = (x.rowwise() - x.row(chosen[0])).rowwise().squaredNorm();
  while (static_cast<Index>(chosen.size()) < count) {
    const double total = nearest.sum();
    Index next = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      next = n - 1;
      for (Index i = 0; i < n; ++i) {
        acc += nearest(i);
        if (acc > target && nearest(i) > 0.0) {
          next = i;
          break;
        }
      }
    } else {
      next = static_cast<Index>(rng.index(static_cast<std::size_t>(n)));
    }
    chosen.push_back(next);
    nearest = nearest.cwiseMin((x.rowwise() - x.row(next)).rowwise().squaredNorm());
  }
  return chosen;
}

std::vector<Index> random_row_seeds(Index n, Index count, Rng& rng) {
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (Index i = 0; i < count; ++i) {
    const auto j = static_cast<std::size_t>(i) + rng.index(static_cast<std::size_t>(n - i));
    std::swap(perm[static_cast<std::size_t>(i)], perm[j]);
  }
  perm.resize(static_cast<std::size_t>(count));
  return perm;
}

// log(w_m) + log N(x_i | component m) for every row i and component m.
Matrix joint_log_densities(const Vector& weights, const std::vector<GaussianModel>& components, const Matrix& x) {
  Matrix out(x.rows(), weights.size());
  for (Index m = 0; m < weights.size(); ++m) {
    out.col(m) = log_density_rows(components[static_cast<std::size_t>(m)], x);
    out.col(m).array() += std::log(weights(m));
  }
  return out;
}

}  // namespace

GmmModel::GmmModel(Vector weights, std::vector<GaussianModel> components)
    : weights_(std::move(weights)), components_(std::move(components)) {
  if (weights_.size() < 1 || static_cast<std::size_t>(weights_.size()) != components_.size())
    throw InvalidArgument("gmm: weight count must equal component count");
  if ((weights_.array() < 0.0).any() || std::abs(weights_.sum() - 1.0) > 1e-12)
    throw InvalidArgument("gmm: weights must be a probability vector");
  for (const auto& c : components_)
    if (c.dim() != components_.front().dim()) throw InvalidArgument("gmm: component dimensions differ");
}

GmmFit fit_gmm_em(const LatentMatrix& y, const GmmOptions& options, std::uint64_t seed) {
  const Matrix& x = y.data();
  const Index n = x.rows();
  const Index M = options.components;
  if (M < 1 || M > n) {
    throw InvalidArgument("gmm: component count M=" + std::to_string(M) + " must satisfy 1 <= M <= n=" +
                          std::to_string(n));
  }
  if (options.max_iters < 1) throw InvalidArgument("gmm: max_iters must be positive");

  Rng rng(seed);
  const auto seeds = options.init == GmmInit::kmeans_plus_plus ? kmeans_plus_plus_seeds(x, M, rng)
                                                               : random_row_seeds(n, M, rng);
  const Vector overall_mean = x.colwise().mean();
  const Matrix overall_centered = x.rowwise() - overall_mean.transpose();
  const Matrix sample_cov =
      (overall_centered.transpose() * overall_centered) / static_cast<double>(std::max<Index>(n - 1, 1));

  Vector weights = Vector::Constant(M, 1.0 / static_cast<double>(M));
  std::vector<GaussianModel> components;
  components.reserve(static_cast<std::size_t>(M));
  for (Index s : seeds) components.emplace_back(x.row(s).transpose(), sample_cov);

  std::vector<double> history;
  std::vector<std::size_t> reseed_points;
  int reseeds = 0;
  bool converged = false;

  Matrix log_joint = joint_log_densities(weights, components, x);
  Vector row_ll(n);
  auto e_step = [&]() {
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
      row_ll(i) = detail::log_sum_exp(log_joint.row(i));
      total += row_ll(i);
    }
    if (!std::isfinite(total)) throw NumericError("gmm: log-likelihood is not finite");
    return total;
  };
  history.push_back(e_step());

  Matrix resp(n, M);
  for (int iter = 1; iter <= options.max_iters; ++iter) {
    for (Index m = 0; m < M; ++m) {
      const auto log_r = (log_joint.col(m) - row_ll).array();
      resp.col(m) = (log_r < kLogResponsibilityFloor).select(0.0, log_r.exp()).matrix();
    }

    std::vector<bool> reseeded_component(static_cast<std::size_t>(M), false);
    Vector mass = resp.colwise().sum();
    for (Index m = 0; m < M; ++m) {
      if (mass(m) >= kEmptyComponentMass) continue;
      if (++reseeds > kMaxReseeds) {
        throw NumericError("gmm: component " + std::to_string(m) + " collapsed after " +
                           std::to_string(kMaxReseeds) + " re-seeds");
      }
      reseeded_component[static_cast<std::size_t>(m)] = true;
    }
    const bool reseeded = std::find(reseeded_component.begin(), reseeded_component.end(), true) !=
                          reseeded_component.end();
    if (reseeded) reseed_points.push_back(history.size());

    for (Index m = 0; m < M; ++m) {
      if (reseeded_component[static_cast<std::size_t>(m)]) {
        // Restart at the worst-explained row with the data covariance.
        Index worst = 0;
        row_ll.minCoeff(&worst);
        components[static_cast<std::size_t>(m)] = GaussianModel(x.row(worst).transpose(), sample_cov);
        mass(m) = 1.0;
        continue;
      }
      const auto r = resp.col(m);
      const double nm = mass(m);
      Vector mean = (x.transpose() * r) / nm;
      Matrix weighted = (x.rowwise() - mean.transpose()).array().colwise() * r.array().sqrt();
      Matrix cov = (weighted.transpose() * weighted) / nm;
      components[static_cast<std::size_t>(m)] = GaussianModel(std::move(mean), std::move(cov));
    }
    weights = mass / mass.sum();

    log_joint = joint_log_densities(weights, components, x);
    history.push_back(e_step());
    const double gain = (history.back() - history[history.size() - 2]) / static_cast<double>(n);
    if (!reseeded && gain < options.tol) {
      converged = true;
      break;
    }
  }
  return GmmFit{GmmModel(std::move(weights), std::move(components)), std::move(history), std::move(reseed_points),
                converged};
}

Matrix sample_gmm(const GmmModel& model, std::size_t count, std::uint64_t seed) {
  const Index d = model.dim();
  Rng rng(seed);
  Vector cumulative(model.size());
  std::partial_sum(model.weights().begin(), model.weights().end(), cumulative.begin());
  Matrix out(static_cast<Index>(count), d);
  Vector z(d);
  for (Index i = 0; i < out.rows(); ++i) {
    const double u = rng.uniform() * cumulative(model.size() - 1);
    Index m = 0;
    while (m + 1 < model.size() && !(u < cumulative(m))) ++m;
    for (Index j = 0; j < d; ++j) z(j) = rng.normal();
    const auto& c = model.components()[static_cast<std::size_t>(m)];
    out.row(i) = (c.mean() + c.cholesky_factor().triangularView<Eigen::Lower>() * z).transpose();
  }
  return out;
}

Vector log_density_rows(const GmmModel& model, const Matrix& x) {
  if (x.cols() != model.dim()) throw InvalidArgument("log_density: dimension mismatch");
  const Matrix joint = joint_log_densities(model.weights(), model.components(), x);
  Vector out(x.rows());
  for (Index i = 0; i < x.rows(); ++i) out(i) = detail::log_sum_exp(joint.row(i));
  return out;
}

double log_density(const GmmModel& model, const Vector& x) { return log_density_rows(model, x.transpose())(0); }

}  // namespace lgm
