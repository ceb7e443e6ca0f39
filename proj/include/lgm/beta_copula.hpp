#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lgm/core.hpp"
#include "lgm/marginals.hpp"

namespace lgm {

//! Empirical beta copula over a latent matrix.
//!
//!   C(u) = (1/n) sum_i prod_j BetaCDF(u_j; r_ij, n + 1 - r_ij)
//!
//! with r the column ranks of the fit data and KDE margins for rescaling.
//! The fit data is retained so that sub-groups can be re-ranked and have their
//! own margins fitted for recombination.
class EbcModel {
public:
  EbcModel(LatentMatrix data, RankMatrix ranks, std::vector<MarginalModel> margins,
           std::optional<std::vector<std::string>> labels);

  const LatentMatrix& data() const { return data_; }
  const RankMatrix& ranks() const { return ranks_; }
  const std::vector<MarginalModel>& margins() const { return margins_; }
  const std::optional<std::vector<std::string>>& labels() const { return labels_; }
  //! Label -> 0-based row indices, ascending. Empty when fitted without labels.
  const std::map<std::string, std::vector<Index>>& group_index() const { return group_index_; }

  Index rows() const { return data_.rows(); }
  Index dim() const { return data_.cols(); }

  //! Throws DataError for labels that are not present in the fit data.
  const std::vector<Index>& group_rows(const std::string& label) const;

private:
  LatentMatrix data_;
  RankMatrix ranks_;
  std::vector<MarginalModel> margins_;
  std::optional<std::vector<std::string>> labels_;
  std::map<std::string, std::vector<Index>> group_index_;
};

//! Ranks, per-column KDE margins and (optionally) the label index.
EbcModel fit_ebc(const LatentMatrix& y, std::optional<std::vector<std::string>> labels = std::nullopt);
EbcModel fit_ebc(const LabeledLatentMatrix& y);

//! Throws InvalidArgument if u is outside [0, 1]^d or has the wrong size.
double ebc_cdf(const EbcModel& model, const Vector& u);

struct EbcSample {
  Matrix copula;  //!< count x d, strictly inside (0, 1)
  Matrix latent;  //!< count x d, copula coordinates through the inverse margin CDFs
};

//! Per output row: I uniform over the fit rows, u_j ~ Beta(R_Ij, n + 1 - R_Ij),
//! latent_j = F_j^{-1}(u_j).
EbcSample sample_ebc(const EbcModel& model, std::size_t count, std::uint64_t seed);

//! As sample_ebc, with I drawn only from the rows carrying `group`.
EbcSample sample_ebc_targeted(const EbcModel& model, const std::string& group, std::size_t count,
                              std::uint64_t seed);

//! Dependence from group A of `dependence`, margins from group B of `margins`.
//!
//! Copula rows follow the sampling scheme above on A's rows with ranks
//! recomputed inside A; rescaling uses KDE margins fitted on B's rows only.
//! When both sides name the same group of the same model this is exactly
//! sample_ebc_targeted.
EbcSample recombine(const EbcModel& dependence, const std::string& group_a, const EbcModel& margins,
                    const std::string& group_b, std::size_t count, std::uint64_t seed);

}  // namespace lgm
