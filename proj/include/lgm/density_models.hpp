#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lgm/core.hpp"
#include "lgm/marginals.hpp"

namespace lgm {

// ---------------------------------------------------------------------------
// Multivariate Gaussian
// ---------------------------------------------------------------------------

//! Mean, covariance and a Cholesky factor of (covariance + ridge * I).
//!
//! The ridge is the smallest of {0, 1e-10, 1e-8, 1e-6} * trace / d for which
//! the factorization succeeds (trace / d is replaced by 1 for an all-zero
//! covariance). Construction throws NumericError if none works.
class GaussianModel {
public:
  GaussianModel(Vector mean, Matrix covariance);

  const Vector& mean() const { return mean_; }
  const Matrix& covariance() const { return covariance_; }
  //! Lower triangular.
  const Matrix& cholesky_factor() const { return cholesky_; }
  double ridge() const { return ridge_; }
  Index dim() const { return mean_.size(); }

  //! log|L| summed over the diagonal, i.e. half the log-determinant.
  double half_log_det() const { return half_log_det_; }

private:
  Vector mean_;
  Matrix covariance_;
  Matrix cholesky_;
  double ridge_ = 0.0;
  double half_log_det_ = 0.0;
};

//! Column means and unbiased (n - 1) sample covariance. Needs n >= 2.
GaussianModel fit_gaussian(const LatentMatrix& y);

//! Rows mean + L z with z standard normal.
Matrix sample_gaussian(const GaussianModel& model, std::size_t count, std::uint64_t seed);

double log_density(const GaussianModel& model, const Vector& x);

//! Log densities of every row of x (n x d).
Vector log_density_rows(const GaussianModel& model, const Matrix& x);

// ---------------------------------------------------------------------------
// Gaussian mixture fitted by EM
// ---------------------------------------------------------------------------

class GmmModel {
public:
  //! Weights must be nonnegative and sum to 1 within 1e-12.
  GmmModel(Vector weights, std::vector<GaussianModel> components);

  const Vector& weights() const { return weights_; }
  const std::vector<GaussianModel>& components() const { return components_; }
  Index size() const { return weights_.size(); }
  Index dim() const { return components_.front().dim(); }

private:
  Vector weights_;
  std::vector<GaussianModel> components_;
};

enum class GmmInit {
  kmeans_plus_plus,  //!< D^2-weighted seeding of the means
  random_rows,       //!< means at distinct uniformly chosen rows
};

struct GmmOptions {
  Index components = 10;
  int max_iters = 100;
  //! Stop once the mean per-row log-likelihood improves by less than this.
  double tol = 1e-3;
  GmmInit init = GmmInit::kmeans_plus_plus;
};

struct GmmFit {
  GmmModel model;
  //! Total log-likelihood after each E-step, starting with the initial parameters.
  std::vector<double> log_likelihood;
  //! Positions in log_likelihood where a component was re-seeded; the
  //! sequence is only monotone between these points.
  std::vector<std::size_t> reseed_points;
  bool converged = false;
};

//! Full-covariance EM. Initial covariances are the sample covariance and the
//! initial weights uniform. A component whose responsibility mass falls below
//! 1e-12 is re-seeded at the row with the lowest mixture likelihood, at most
//! three times in total; the fourth collapse is a NumericError.
GmmFit fit_gmm_em(const LatentMatrix& y, const GmmOptions& options, std::uint64_t seed);

Matrix sample_gmm(const GmmModel& model, std::size_t count, std::uint64_t seed);

double log_density(const GmmModel& model, const Vector& x);
Vector log_density_rows(const GmmModel& model, const Matrix& x);

// ---------------------------------------------------------------------------
// Multivariate KDE with diagonal bandwidth
// ---------------------------------------------------------------------------

class MkdeModel {
public:
  MkdeModel(Matrix centers, Vector bandwidths);

  const Matrix& centers() const { return centers_; }
  const Vector& bandwidths() const { return bandwidths_; }
  Index dim() const { return centers_.cols(); }

private:
  Matrix centers_;
  Vector bandwidths_;
};

//! Scale factors 2^(k/2) for k = -4..4.
std::vector<double> default_bandwidth_grid();

struct MkdeOptions {
  std::vector<double> grid = default_bandwidth_grid();
  int folds = 10;
};

struct MkdeFit {
  MkdeModel model;
  double factor = 1.0;
  //! Mean held-out log-likelihood per grid entry.
  std::vector<double> cv_scores;
};

//! Per-dimension Silverman bandwidths scaled by the grid factor with the best
//! mean held-out log-likelihood over `folds` random folds (ties go to the
//! smaller factor).
MkdeFit fit_mkde_cv(const LatentMatrix& y, const MkdeOptions& options, std::uint64_t seed);

Matrix sample_mkde(const MkdeModel& model, std::size_t count, std::uint64_t seed);

double log_density(const MkdeModel& model, const Vector& x);

// ---------------------------------------------------------------------------
// Independent margins
// ---------------------------------------------------------------------------

class IndependentModel {
public:
  explicit IndependentModel(std::vector<MarginalModel> margins);

  const std::vector<MarginalModel>& margins() const { return margins_; }
  Index dim() const { return static_cast<Index>(margins_.size()); }

private:
  std::vector<MarginalModel> margins_;
};

IndependentModel fit_independent(const LatentMatrix& y);

Matrix sample_independent(const IndependentModel& model, std::size_t count, std::uint64_t seed);

//! One marginal per column of y.
std::vector<MarginalModel> fit_margins(const LatentMatrix& y);

}  // namespace lgm
