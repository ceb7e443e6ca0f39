#include "lgm/beta_copula.hpp"

#include <boost/math/special_functions/beta.hpp>

#include "lgm/density_models.hpp"
#include "lgm/error.hpp"
#include "lgm/random.hpp"

namespace lgm {

namespace {

// Draws copula rows from the given ranks (restricted to `rows`) and pushes each
// coordinate through the matching margin's inverse CDF.
EbcSample draw(const Eigen::MatrixXi& ranks, const std::vector<Index>& rows, const std::vector<MarginalModel>& margins,
               std::size_t count, std::uint64_t seed) {
  const Index d = ranks.cols();
  const double n_plus_1 = static_cast<double>(ranks.rows()) + 1.0;
  Rng rng(seed);
  EbcSample out{Matrix(static_cast<Index>(count), d), Matrix(static_cast<Index>(count), d)};
  for (Index i = 0; i < out.copula.rows(); ++i) {
    const Index row = rows[rng.index(rows.size())];
    for (Index j = 0; j < d; ++j) {
      const double r = ranks(row, j);
      out.copula(i, j) = rng.beta(r, n_plus_1 - r);
    }
  }
  for (Index i = 0; i < out.copula.rows(); ++i)
    for (Index j = 0; j < d; ++j)
      out.latent(i, j) = margins[static_cast<std::size_t>(j)].inverse_cdf(out.copula(i, j));
  return out;
}

std::vector<Index> all_rows(Index n) {
  std::vector<Index> rows(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) rows[static_cast<std::size_t>(i)] = i;
  return rows;
}

}  // namespace

EbcModel::EbcModel(LatentMatrix data, RankMatrix ranks, std::vector<MarginalModel> margins,
                   std::optional<std::vector<std::string>> labels)
    : data_(std::move(data)), ranks_(std::move(ranks)), margins_(std::move(margins)), labels_(std::move(labels)) {
  if (ranks_.rows() != data_.rows() || ranks_.cols() != data_.cols())
    throw InvalidArgument("ebc: rank matrix shape does not match data");
  if (static_cast<Index>(margins_.size()) != data_.cols()) throw InvalidArgument("ebc: one margin per dimension");
  if (labels_) {
    if (static_cast<Index>(labels_->size()) != data_.rows())
      throw DataError("ebc: " + std::to_string(labels_->size()) + " labels for " + std::to_string(data_.rows()) +
                      " rows");
    for (Index i = 0; i < data_.rows(); ++i) group_index_[(*labels_)[static_cast<std::size_t>(i)]].push_back(i);
  }
}

const std::vector<Index>& EbcModel::group_rows(const std::string& label) const {
  if (!labels_) throw DataError("model was fitted without labels; no group '" + label + "'");
  auto it = group_index_.find(label);
  if (it == group_index_.end()) throw DataError("unknown group '" + label + "'");
  return it->second;
}

EbcModel fit_ebc(const LatentMatrix& y, std::optional<std::vector<std::string>> labels) {
  if (y.rows() < 2) throw DataError("ebc fit needs at least 2 rows");
  return EbcModel(y, compute_ranks(y), fit_margins(y), std::move(labels));
}

EbcModel fit_ebc(const LabeledLatentMatrix& y) { return fit_ebc(y.matrix, y.labels); }

double ebc_cdf(const EbcModel& model, const Vector& u) {
  if (u.size() != model.dim()) throw InvalidArgument("ebc_cdf: expected " + std::to_string(model.dim()) + " coordinates");
  for (Index j = 0; j < u.size(); ++j)
    if (!(u(j) >= 0.0 && u(j) <= 1.0)) throw InvalidArgument("ebc_cdf: coordinates must lie in [0, 1]");

  const auto& ranks = model.ranks().ranks();
  const double n_plus_1 = static_cast<double>(ranks.rows()) + 1.0;
  double total = 0.0;
  for (Index i = 0; i < ranks.rows(); ++i) {
    double product = 1.0;
    for (Index j = 0; j < ranks.cols() && product > 0.0; ++j) {
      const double r = ranks(i, j);
      if (u(j) >= 1.0) continue;
      product *= u(j) <= 0.0 ? 0.0 : boost::math::ibeta(r, n_plus_1 - r, u(j));
    }
    total += product;
  }
  return total / static_cast<double>(ranks.rows());
}

EbcSample sample_ebc(const EbcModel& model, std::size_t count, std::uint64_t seed) {
  return draw(model.ranks().ranks(), all_rows(model.rows()), model.margins(), count, seed);
}

EbcSample sample_ebc_targeted(const EbcModel& model, const std::string& group, std::size_t count,
                              std::uint64_t seed) {
  const auto& rows = model.group_rows(group);
  if (rows.empty()) throw DataError("group '" + group + "' is empty");
  return draw(model.ranks().ranks(), rows, model.margins(), count, seed);
}

EbcSample recombine(const EbcModel& dependence, const std::string& group_a, const EbcModel& margins,
                    const std::string& group_b, std::size_t count, std::uint64_t seed) {
  if (dependence.dim() != margins.dim()) {
    throw InvalidArgument("recombine: dimension mismatch (" + std::to_string(dependence.dim()) + " vs " +
                          std::to_string(margins.dim()) + ")");
  }
  const auto& rows_a = dependence.group_rows(group_a);
  const auto& rows_b = margins.group_rows(group_b);
  if (&dependence == &margins && group_a == group_b) return sample_ebc_targeted(dependence, group_a, count, seed);
  if (rows_b.size() < 2) throw DataError("recombine: group '" + group_b + "' needs at least 2 rows for margins");

  // Global ranks are a monotone relabeling of the values (ties included), so
  // re-ranking them inside A gives A's own ranks.
  Eigen::MatrixXi subset(static_cast<Index>(rows_a.size()), dependence.dim());
  for (std::size_t k = 0; k < rows_a.size(); ++k) subset.row(static_cast<Index>(k)) = dependence.ranks().ranks().row(rows_a[k]);
  const RankMatrix local = compute_ranks(subset);

  const auto margins_b = fit_margins(margins.data().select_rows(rows_b));
  return draw(local.ranks(), all_rows(local.rows()), margins_b, count, seed);
}

}  // namespace lgm
