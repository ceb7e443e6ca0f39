#include "lgm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <json.hpp>

#include "lgm/error.hpp"

namespace lgm {

namespace {

double row_distance(const Matrix& a, Index i, const Matrix& b, Index k) {
  double s = 0.0;
  for (Index j = 0; j < a.cols(); ++j) {
    const double diff = a(i, j) - b(k, j);
    s += diff * diff;
  }
  return std::sqrt(s);
}

double mean_kernel(const Matrix& a, const Matrix& b, double inv_two_h2) {
  double total = 0.0;
  for (Index i = 0; i < a.rows(); ++i) {
    double row = 0.0;
    for (Index k = 0; k < b.rows(); ++k) {
      const double dist = row_distance(a, i, b, k);
      row += std::exp(-dist * dist * inv_two_h2);
    }
    total += row;
  }
  return total / (static_cast<double>(a.rows()) * static_cast<double>(b.rows()));
}

void require_same_dim(const Matrix& x, const Matrix& y, const char* what) {
  if (x.cols() != y.cols())
    throw InvalidArgument(std::string(what) + ": dimension mismatch (" + std::to_string(x.cols()) + " vs " +
                          std::to_string(y.cols()) + ")");
}

}  // namespace

std::vector<Index> optimal_assignment(const Matrix& cost) {
  const Index n = cost.rows();
  if (cost.cols() != n) throw InvalidArgument("optimal_assignment: cost matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; column 0 is a virtual start.
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<Index> match(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
  std::vector<double> minv(static_cast<std::size_t>(n + 1));
  std::vector<char> used(static_cast<std::size_t>(n + 1));

  for (Index i = 1; i <= n; ++i) {
    match[0] = i;
    Index j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const Index i0 = match[static_cast<std::size_t>(j0)];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[sj];
        if (cur < minv[sj]) {
          minv[sj] = cur;
          way[sj] = j0;
        }
        if (minv[sj] < delta) {
          delta = minv[sj];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (used[sj]) {
          u[static_cast<std::size_t>(match[sj])] += delta;
          v[sj] -= delta;
        } else {
          minv[sj] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const Index j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<Index> assignment(static_cast<std::size_t>(n));
  for (Index j = 1; j <= n; ++j) assignment[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return assignment;
}

Matrix pairwise_distances(const Matrix& x, const Matrix& y) {
  require_same_dim(x, y, "pairwise_distances");
  Matrix out(x.rows(), y.rows());
  for (Index i = 0; i < x.rows(); ++i)
    for (Index k = 0; k < y.rows(); ++k) out(i, k) = row_distance(x, i, y, k);
  return out;
}

double emd(const Matrix& x, const Matrix& y) {
  require_same_dim(x, y, "emd");
  if (x.rows() != y.rows())
    throw InvalidArgument("emd: sample sizes differ (" + std::to_string(x.rows()) + " vs " + std::to_string(y.rows()) +
                          ")");
  if (x.rows() < 1) throw InvalidArgument("emd: empty samples");
  if (x.rows() > kMaxEmdSamples) throw InvalidArgument("emd: at most " + std::to_string(kMaxEmdSamples) + " samples");
  const Matrix cost = pairwise_distances(x, y);
  const auto assignment = optimal_assignment(cost);
  double total = 0.0;
  for (Index i = 0; i < x.rows(); ++i) total += cost(i, assignment[static_cast<std::size_t>(i)]);
  return total / static_cast<double>(x.rows());
}

double median_pairwise_distance(const Matrix& pooled) {
  const Index n = pooled.rows();
  if (n < 2) throw InvalidArgument("median_pairwise_distance needs at least 2 rows");
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i)
    for (Index k = i + 1; k < n; ++k) dists.push_back(row_distance(pooled, i, pooled, k));
  const std::size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
  double median = dists[mid];
  if (dists.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return median;
}

double mmd(const Matrix& x, const Matrix& y, std::optional<double> bandwidth) {
  require_same_dim(x, y, "mmd");
  if (x.rows() < 2 || y.rows() < 2) throw InvalidArgument("mmd needs at least 2 rows per sample");
  double h = 0.0;
  if (bandwidth) {
    h = *bandwidth;
    if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("mmd: bandwidth must be positive");
  } else {
    Matrix pooled(x.rows() + y.rows(), x.cols());
    pooled << x, y;
    h = median_pairwise_distance(pooled);
    // All points coincide: every kernel value is 1 for any width.
    if (!(h > 0.0)) h = 1.0;
  }
  const double inv = 1.0 / (2.0 * h * h);
  const double value = mean_kernel(x, x, inv) + mean_kernel(y, y, inv) - 2.0 * mean_kernel(x, y, inv);
  return std::max(value, 0.0);
}

double one_nn_accuracy(const Matrix& x, const Matrix& y) {
  require_same_dim(x, y, "one_nn_accuracy");
  if (x.rows() != y.rows())
    throw InvalidArgument("one_nn_accuracy: sample sizes differ (" + std::to_string(x.rows()) + " vs " +
                          std::to_string(y.rows()) + ")");
  if (x.rows() < 2) throw InvalidArgument("one_nn_accuracy needs at least 2 rows per sample");
  const Index n = x.rows();
  Matrix pooled(2 * n, x.cols());
  pooled << x, y;
  Index correct = 0;
  for (Index i = 0; i < 2 * n; ++i) {
    Index best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < 2 * n; ++k) {
      if (k == i) continue;
      const double dist = row_distance(pooled, i, pooled, k);
      if (dist < best_dist) {
        best_dist = dist;
        best = k;
      }
    }
    if ((i < n) == (best < n)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(2 * n);
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["emd"] = emd;
  j["mmd"] = mmd;
  j["onenn_accuracy"] = onenn_accuracy;
  j["sample_sizes"] = {real_size, synthetic_size};
  return j.dump();
}

EvalReport evaluate(const Matrix& real, const Matrix& synthetic, std::optional<double> bandwidth) {
  EvalReport report;
  report.emd = emd(real, synthetic);
  report.mmd = mmd(real, synthetic, bandwidth);
  report.onenn_accuracy = one_nn_accuracy(real, synthetic);
  report.real_size = static_cast<std::size_t>(real.rows());
  report.synthetic_size = static_cast<std::size_t>(synthetic.rows());
  return report;
}

std::vector<std::vector<NeighborMatch>> nearest_neighbors(const Matrix& queries, const Matrix& reference,
                                                          std::size_t k) {
  require_same_dim(queries, reference, "nearest_neighbors");
  if (k < 1 || k > static_cast<std::size_t>(reference.rows()))
    throw InvalidArgument("nearest_neighbors: k must be in [1, reference rows]");
  std::vector<std::vector<NeighborMatch>> out(static_cast<std::size_t>(queries.rows()));
  std::vector<NeighborMatch> all(static_cast<std::size_t>(reference.rows()));
  for (Index i = 0; i < queries.rows(); ++i) {
    for (Index r = 0; r < reference.rows(); ++r) all[static_cast<std::size_t>(r)] = {r, row_distance(queries, i, reference, r)};
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                      [](const NeighborMatch& a, const NeighborMatch& b) {
                        return a.distance != b.distance ? a.distance < b.distance : a.index < b.index;
                      });
    out[static_cast<std::size_t>(i)].assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
  }
  return out;
}

}  // namespace lgm
