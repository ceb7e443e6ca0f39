#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace lgm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

//! n x d matrix of latent codes. Immutable; n >= 1, d >= 1, all entries finite.
class LatentMatrix {
public:
  //! Throws DataError if the shape is empty or any entry is NaN/Inf.
  explicit LatentMatrix(Matrix data);

  const Matrix& data() const { return data_; }
  Index rows() const { return data_.rows(); }
  Index cols() const { return data_.cols(); }
  double operator()(Index i, Index j) const { return data_(i, j); }

  //! Subset of rows, in the order given.
  LatentMatrix select_rows(const std::vector<Index>& rows) const;

private:
  Matrix data_;
};

//! Column-wise ranks r_ij = #{k : y_kj <= y_ij}; ties share the maximal rank.
class RankMatrix {
public:
  explicit RankMatrix(Eigen::MatrixXi ranks) : ranks_(std::move(ranks)) {}

  const Eigen::MatrixXi& ranks() const { return ranks_; }
  Index rows() const { return ranks_.rows(); }
  Index cols() const { return ranks_.cols(); }
  int operator()(Index i, Index j) const { return ranks_(i, j); }

private:
  Eigen::MatrixXi ranks_;
};

//! Latent matrix with one categorical label per row.
struct LabeledLatentMatrix {
  LabeledLatentMatrix(LatentMatrix m, std::vector<std::string> l);

  LatentMatrix matrix;
  std::vector<std::string> labels;
};

RankMatrix compute_ranks(const LatentMatrix& y);

//! Ranks of an integer matrix under the same rule. Used to re-rank a subset of
//! rows from previously computed ranks.
RankMatrix compute_ranks(const Eigen::MatrixXi& values);

struct HoldoutSplit {
  LatentMatrix train;
  LatentMatrix holdout;
};

//! Random disjoint row partition. Rows keep their original relative order
//! inside each part.
HoldoutSplit split_holdout(const LatentMatrix& y, std::size_t holdout_count, std::uint64_t seed);

//! Partition indices used by split_holdout (train, holdout).
std::pair<std::vector<Index>, std::vector<Index>> holdout_indices(Index n, std::size_t holdout_count,
                                                                  std::uint64_t seed);

// ---------------------------------------------------------------------------
// Matrix files
//
// CSV:    header "dim_0,...,dim_{d-1}" with an optional trailing "label" column.
// Binary: "LGM1", u64 n, u64 d, then n*d little-endian f64 in row-major order.
// ---------------------------------------------------------------------------

enum class MatrixFormat { csv, binary };

//! ".csv" (any case) selects CSV; everything else is binary.
MatrixFormat format_for_path(const std::filesystem::path& path);

struct MatrixFile {
  Matrix data;
  std::optional<std::vector<std::string>> labels;
};

//! Writes a matrix (possibly with zero rows). Labels are only representable in
//! CSV; passing labels with the binary format is an InvalidArgument.
void save_matrix(const Matrix& y, const std::filesystem::path& path,
                 const std::vector<std::string>* labels = nullptr);
void save_matrix(const LatentMatrix& y, const std::filesystem::path& path);

//! Reads either format, detected from the file's leading bytes. Zero-row files
//! are accepted here.
MatrixFile read_matrix_file(const std::filesystem::path& path);

//! Reads a file and validates it as a LatentMatrix ("zero rows" is an error).
LatentMatrix load_matrix(const std::filesystem::path& path);

//! Like load_matrix but requires a label column.
LabeledLatentMatrix load_labeled_matrix(const std::filesystem::path& path);

}  // namespace lgm
