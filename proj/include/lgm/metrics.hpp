#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lgm/core.hpp"

namespace lgm {

//! Largest sample size accepted by emd.
inline constexpr Index kMaxEmdSamples = 2048;

//! Minimum-cost perfect matching of a square cost matrix (Hungarian method
//! with potentials, O(n^3)). Returns the column assigned to each row.
std::vector<Index> optimal_assignment(const Matrix& cost);

//! Euclidean distance matrix between rows of x and rows of y.
Matrix pairwise_distances(const Matrix& x, const Matrix& y);

//! Earth mover distance between two equal-size samples with Euclidean ground
//! cost: the optimal one-to-one matching cost divided by n.
double emd(const Matrix& x, const Matrix& y);

//! Median of the pairwise Euclidean distances within `pooled` (i < j).
double median_pairwise_distance(const Matrix& pooled);

//! Biased squared MMD with kernel exp(-|a - b|^2 / (2 h^2)), clamped at 0.
//! Without a bandwidth, h is the median pairwise distance of the pooled rows.
double mmd(const Matrix& x, const Matrix& y, std::optional<double> bandwidth = std::nullopt);

//! Leave-one-out 1-nearest-neighbour accuracy on the pooled, labelled sample
//! (x rows first). Distance ties go to the lower pooled index.
double one_nn_accuracy(const Matrix& x, const Matrix& y);

struct EvalReport {
  double emd = 0.0;
  double mmd = 0.0;
  double onenn_accuracy = 0.0;
  std::size_t real_size = 0;
  std::size_t synthetic_size = 0;

  //! {"emd":...,"mmd":...,"onenn_accuracy":...,"sample_sizes":[real,synthetic]}
  std::string to_json() const;
};

EvalReport evaluate(const Matrix& real, const Matrix& synthetic, std::optional<double> bandwidth = std::nullopt);

struct NeighborMatch {
  Index index;
  double distance;
};

//! For every query row, its k nearest reference rows (ties to the lower index).
std::vector<std::vector<NeighborMatch>> nearest_neighbors(const Matrix& queries, const Matrix& reference,
                                                          std::size_t k = 1);

}  // namespace lgm
