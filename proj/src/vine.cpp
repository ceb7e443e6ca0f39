#include "lgm/vine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include <boost/math/special_functions/erf.hpp>

#include "lgm/density_models.hpp"
#include "lgm/detail/numeric.hpp"
#include "lgm/error.hpp"
#include "lgm/random.hpp"

namespace lgm {

namespace {

constexpr double kMaxAbsRho = 0.9999;
constexpr double kUnitLow = std::numeric_limits<double>::min();
constexpr double kUnitHigh = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;

double clamp_unit(double p) { return std::clamp(p, kUnitLow, kUnitHigh); }

double normal_quantile(double p) {
  // Reflect the upper half so that 1 - p is computed exactly.
  if (p > 0.5) return -normal_quantile(1.0 - p);
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

// Merge sort that counts strict inversions.
std::int64_t count_inversions(std::vector<double>& v, std::vector<double>& scratch, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::int64_t swaps = count_inversions(v, scratch, lo, mid) + count_inversions(v, scratch, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += static_cast<std::int64_t>(mid - i);
      scratch[k++] = v[j++];
    } else {
      scratch[k++] = v[i++];
    }
  }
  while (i < mid) scratch[k++] = v[i++];
  while (j < hi) scratch[k++] = v[j++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo), scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

template <typename Eq>
std::int64_t tied_pairs(std::size_t n, Eq same) {
  std::int64_t ties = 0;
  std::size_t run = 1;
  for (std::size_t k = 1; k <= n; ++k) {
    if (k < n && same(k - 1, k)) {
      ++run;
    } else {
      ties += static_cast<std::int64_t>(run) * static_cast<std::int64_t>(run - 1) / 2;
      run = 1;
    }
  }
  return ties;
}

struct UnionFind {
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int a) {
    while (parent[static_cast<std::size_t>(a)] != a) a = parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
    return a;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    return true;
  }
  std::vector<int> parent;
};

struct Candidate {
  int node_a;  // node_a < node_b
  int node_b;
  double weight;
  std::size_t id = 0;
};

// Maximum spanning tree; ties resolved toward the lexicographically smaller pair.
std::vector<Candidate> max_spanning_tree(int nodes, std::vector<Candidate> candidates) {
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    if (x.weight != y.weight) return x.weight > y.weight;
    if (x.node_a != y.node_a) return x.node_a < y.node_a;
    return x.node_b < y.node_b;
  });
  UnionFind uf(nodes);
  std::vector<Candidate> chosen;
  for (const auto& c : candidates) {
    if (uf.unite(c.node_a, c.node_b)) chosen.push_back(c);
    if (static_cast<int>(chosen.size()) == nodes - 1) break;
  }
  return chosen;
}

std::vector<int> complete_set(const VineEdge& e) {
  std::vector<int> s = e.conditioning;
  s.push_back(e.first);
  s.push_back(e.second);
  std::sort(s.begin(), s.end());
  return s;
}

double rho_from_tau(double tau) { return std::clamp(std::sin(0.5 * std::numbers::pi * tau), -kMaxAbsRho, kMaxAbsRho); }

// Conditional pseudo-observations of one tree: F(first | second, D) and
// F(second | first, D) per edge.
struct LevelValues {
  std::vector<Vector> given_second;
  std::vector<Vector> given_first;
};

Vector h_column(const Vector& u, const Vector& v, double rho) {
  Vector out(u.size());
  for (Index i = 0; i < u.size(); ++i) out(i) = gaussian_h(u(i), v(i), rho);
  return out;
}

}  // namespace

double kendall_tau(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n != y.size()) throw InvalidArgument("kendall_tau: lengths differ");
  if (n < 2) throw InvalidArgument("kendall_tau needs at least 2 observations");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
  });
  const std::int64_t tied_x = tied_pairs(n, [&](std::size_t a, std::size_t b) { return x[order[a]] == x[order[b]]; });
  const std::int64_t tied_xy = tied_pairs(n, [&](std::size_t a, std::size_t b) {
    return x[order[a]] == x[order[b]] && y[order[a]] == y[order[b]];
  });

  std::vector<double> ys(n), scratch(n);
  for (std::size_t k = 0; k < n; ++k) ys[k] = y[order[k]];
  const std::int64_t swaps = count_inversions(ys, scratch, 0, n);  // leaves ys sorted
  const std::int64_t tied_y = tied_pairs(n, [&](std::size_t a, std::size_t b) { return ys[a] == ys[b]; });

  const auto total = static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n - 1) / 2;
  const std::int64_t net = total - tied_x - tied_y + tied_xy - 2 * swaps;
  return static_cast<double>(net) / static_cast<double>(total);
}

double gaussian_h(double u, double v, double rho) {
  if (rho == 0.0) return u;
  const double z = (normal_quantile(clamp_unit(u)) - rho * normal_quantile(clamp_unit(v))) / std::sqrt(1.0 - rho * rho);
  return clamp_unit(detail::normal_cdf(z));
}

double gaussian_h_inverse(double w, double v, double rho) {
  if (rho == 0.0) return w;
  const double z = normal_quantile(clamp_unit(w)) * std::sqrt(1.0 - rho * rho) + rho * normal_quantile(clamp_unit(v));
  return clamp_unit(detail::normal_cdf(z));
}

void validate_vine_structure(const VineTrees& trees, int dim) {
  auto fail = [](int tree, const std::string& what) {
    throw DataError("vine tree " + std::to_string(tree + 1) + ": " + what);
  };
  if (dim < 2) throw DataError("vine needs at least 2 variables");
  if (static_cast<int>(trees.size()) != dim - 1)
    throw DataError("vine has " + std::to_string(trees.size()) + " trees, expected " + std::to_string(dim - 1));

  for (int t = 0; t < dim - 1; ++t) {
    const auto& tree = trees[static_cast<std::size_t>(t)];
    const int nodes = dim - t;  // tree 1 on variables, tree k on the d - k + 1 edges of tree k - 1
    if (static_cast<int>(tree.size()) != nodes - 1)
      fail(t, "has " + std::to_string(tree.size()) + " edges, expected " + std::to_string(nodes - 1));
    UnionFind uf(nodes);
    for (const auto& e : tree) {
      if (e.child_first < 0 || e.child_first >= nodes || e.child_second < 0 || e.child_second >= nodes)
        fail(t, t == 0 ? "edge endpoint outside the variable set" : "edge endpoint is not an edge of the previous tree");
      if (!uf.unite(e.child_first, e.child_second)) fail(t, "contains a cycle or repeated edge");
      if (!(std::abs(e.rho) < 1.0)) fail(t, "pair parameter outside (-1, 1)");
      if (e.first >= e.second) fail(t, "conditioned pair must be ordered");
      if (!std::is_sorted(e.conditioning.begin(), e.conditioning.end())) fail(t, "conditioning set not sorted");
      if (static_cast<int>(e.conditioning.size()) != t) fail(t, "conditioning set has the wrong size");

      if (t == 0) {
        if (e.child_first != e.first || e.child_second != e.second) fail(t, "endpoints disagree with the conditioned pair");
        continue;
      }
      const auto& prev = trees[static_cast<std::size_t>(t - 1)];
      const auto a = complete_set(prev[static_cast<std::size_t>(e.child_first)]);
      const auto b = complete_set(prev[static_cast<std::size_t>(e.child_second)]);
      // Proximity: the joined edges must share exactly one node of tree t - 1.
      const auto& pa = prev[static_cast<std::size_t>(e.child_first)];
      const auto& pb = prev[static_cast<std::size_t>(e.child_second)];
      int shared = 0;
      for (int x : {pa.child_first, pa.child_second})
        for (int y : {pb.child_first, pb.child_second}) shared += x == y;
      if (shared != 1) fail(t, "joined edges do not share exactly one node");

      std::vector<int> common, only_a, only_b;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
      std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(only_a));
      std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(only_b));
      if (common != e.conditioning) fail(t, "conditioning set is not the intersection of the joined edges");
      if (only_a.size() != 1 || only_b.size() != 1 || only_a[0] != e.first || only_b[0] != e.second)
        fail(t, "conditioned pair disagrees with the joined edges");
    }
  }
}

VineTrees select_structure(const Matrix& u, int truncation) {
  const int d = static_cast<int>(u.cols());
  const Index n = u.rows();
  if (d < 2) throw InvalidArgument("vine needs at least 2 dimensions");
  if (n < 2) throw InvalidArgument("vine needs at least 2 observations");

  auto tau_of = [&](const Vector& a, const Vector& b) {
    return kendall_tau(std::span<const double>(a.data(), static_cast<std::size_t>(n)),
                       std::span<const double>(b.data(), static_cast<std::size_t>(n)));
  };

  VineTrees trees;
  LevelValues values;

  // Tree 1 on the variables.
  {
    std::vector<Vector> columns(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) columns[static_cast<std::size_t>(j)] = u.col(j);
    std::vector<Candidate> candidates;
    std::vector<double> taus;
    for (int a = 0; a < d; ++a) {
      for (int b = a + 1; b < d; ++b) {
        const double tau = truncation >= 1 ? tau_of(columns[static_cast<std::size_t>(a)], columns[static_cast<std::size_t>(b)]) : 0.0;
        candidates.push_back({a, b, std::abs(tau)});
        taus.push_back(tau);
      }
    }
    auto pair_index = [d](int a, int b) { return static_cast<std::size_t>(a * d - a * (a + 1) / 2 + (b - a - 1)); };
    std::vector<VineEdge> tree;
    for (const auto& c : max_spanning_tree(d, candidates)) {
      VineEdge e;
      e.first = c.node_a;
      e.second = c.node_b;
      e.child_first = c.node_a;
      e.child_second = c.node_b;
      if (truncation >= 1) {
        e.rho = rho_from_tau(taus[pair_index(c.node_a, c.node_b)]);
        const auto& x = columns[static_cast<std::size_t>(e.first)];
        const auto& y = columns[static_cast<std::size_t>(e.second)];
        values.given_second.push_back(h_column(x, y, e.rho));
        values.given_first.push_back(h_column(y, x, e.rho));
      }
      tree.push_back(std::move(e));
    }
    trees.push_back(std::move(tree));
  }

  for (int t = 1; t < d - 1; ++t) {
    const auto& prev = trees.back();
    const int nodes = static_cast<int>(prev.size());
    const bool fitted = t < truncation;

    std::vector<std::vector<int>> incident(static_cast<std::size_t>(t == 1 ? d : static_cast<int>(trees[static_cast<std::size_t>(t - 2)].size())));
    for (int p = 0; p < nodes; ++p) {
      incident[static_cast<std::size_t>(prev[static_cast<std::size_t>(p)].child_first)].push_back(p);
      incident[static_cast<std::size_t>(prev[static_cast<std::size_t>(p)].child_second)].push_back(p);
    }
    std::vector<std::vector<int>> sets(static_cast<std::size_t>(nodes));
    for (int p = 0; p < nodes; ++p) sets[static_cast<std::size_t>(p)] = complete_set(prev[static_cast<std::size_t>(p)]);

    // Value of `var` conditioned on the rest of node p's complete set.
    auto node_value = [&](int p, int var) -> const Vector& {
      const auto& e = prev[static_cast<std::size_t>(p)];
      return var == e.first ? values.given_second[static_cast<std::size_t>(p)] : values.given_first[static_cast<std::size_t>(p)];
    };

    struct Join {
      int x, y;  // conditioned variables contributed by node_a and node_b
      std::vector<int> common;
      double tau;
    };
    std::vector<Candidate> candidates;
    std::vector<Join> joins;
    for (const auto& list : incident) {
      for (std::size_t i = 0; i < list.size(); ++i) {
        for (std::size_t k = i + 1; k < list.size(); ++k) {
          const int p = std::min(list[i], list[k]);
          const int q = std::max(list[i], list[k]);
          const auto& a = sets[static_cast<std::size_t>(p)];
          const auto& b = sets[static_cast<std::size_t>(q)];
          Join join;
          std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(join.common));
          std::vector<int> only_a, only_b;
          std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(only_a));
          std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(only_b));
          join.x = only_a.front();
          join.y = only_b.front();
          join.tau = fitted ? tau_of(node_value(p, join.x), node_value(q, join.y)) : 0.0;
          candidates.push_back({p, q, std::abs(join.tau), joins.size()});
          joins.push_back(std::move(join));
        }
      }
    }
    const auto chosen = max_spanning_tree(nodes, std::move(candidates));

    LevelValues next;
    std::vector<VineEdge> tree;
    for (const auto& c : chosen) {
      const Join& join = joins[c.id];
      VineEdge e;
      const bool x_first = join.x < join.y;
      e.first = x_first ? join.x : join.y;
      e.second = x_first ? join.y : join.x;
      e.child_first = x_first ? c.node_a : c.node_b;
      e.child_second = x_first ? c.node_b : c.node_a;
      e.conditioning = join.common;
      if (fitted) {
        e.rho = rho_from_tau(join.tau);
        const Vector& vf = node_value(e.child_first, e.first);
        const Vector& vs = node_value(e.child_second, e.second);
        next.given_second.push_back(h_column(vf, vs, e.rho));
        next.given_first.push_back(h_column(vs, vf, e.rho));
      }
      tree.push_back(std::move(e));
    }
    trees.push_back(std::move(tree));
    values = std::move(next);
  }
  return trees;
}

VineModel::VineModel(VineTrees trees, int truncation, std::vector<MarginalModel> margins)
    : trees_(std::move(trees)), truncation_(truncation), margins_(std::move(margins)) {
  const int d = dim();
  if (truncation_ < 1 || truncation_ > d - 1)
    throw InvalidArgument("vine truncation level " + std::to_string(truncation_) + " must be in [1, " +
                          std::to_string(d - 1) + "]");
  validate_vine_structure(trees_, d);
  for (int t = truncation_; t < d - 1; ++t)
    for (const auto& e : trees_[static_cast<std::size_t>(t)])
      if (e.rho != 0.0) throw DataError("vine: edge above the truncation level is not independence");
  build_sampling_plan();
}

void VineModel::build_sampling_plan() {
  const int d = dim();
  std::vector<std::vector<bool>> removed;
  for (const auto& tree : trees_) removed.emplace_back(tree.size(), false);
  chains_.assign(static_cast<std::size_t>(d), {});
  std::vector<int> drawn_last_first;
  std::vector<bool> placed(static_cast<std::size_t>(d), false);

  // Peel off one conditioned variable of the single remaining top edge at a
  // time; the edges holding it form one per tree and leave a smaller vine.
  for (int top = d - 2; top >= 0; --top) {
    int edge = -1;
    for (int e = 0; e < static_cast<int>(trees_[static_cast<std::size_t>(top)].size()); ++e)
      if (!removed[static_cast<std::size_t>(top)][static_cast<std::size_t>(e)]) edge = e;
    const int var = trees_[static_cast<std::size_t>(top)][static_cast<std::size_t>(edge)].second;

    std::vector<ChainStep> chain;
    for (int t = top; t >= 0; --t) {
      int found = -1;
      for (int e = 0; e < static_cast<int>(trees_[static_cast<std::size_t>(t)].size()); ++e) {
        const auto& ed = trees_[static_cast<std::size_t>(t)][static_cast<std::size_t>(e)];
        if (removed[static_cast<std::size_t>(t)][static_cast<std::size_t>(e)] || (ed.first != var && ed.second != var)) continue;
        if (found >= 0) throw DataError("vine: variable " + std::to_string(var) + " is not peelable");
        found = e;
      }
      if (found < 0) throw DataError("vine: variable " + std::to_string(var) + " missing from tree " + std::to_string(t + 1));
      removed[static_cast<std::size_t>(t)][static_cast<std::size_t>(found)] = true;
      const auto& ed = trees_[static_cast<std::size_t>(t)][static_cast<std::size_t>(found)];
      chain.push_back({t, found, ed.first == var ? ed.second : ed.first});
    }
    std::reverse(chain.begin(), chain.end());
    // The var-side child of each step must be the previous step's edge.
    for (std::size_t s = 1; s < chain.size(); ++s) {
      const auto& ed = trees_[static_cast<std::size_t>(chain[s].tree)][static_cast<std::size_t>(chain[s].edge)];
      const int var_child = ed.first == var ? ed.child_first : ed.child_second;
      if (var_child != chain[s - 1].edge) throw DataError("vine: inconsistent conditioning chain");
    }
    chains_[static_cast<std::size_t>(var)] = std::move(chain);
    placed[static_cast<std::size_t>(var)] = true;
    drawn_last_first.push_back(var);
  }
  order_.clear();
  for (int v = 0; v < d; ++v)
    if (!placed[static_cast<std::size_t>(v)]) order_.push_back(v);
  if (order_.size() != 1) throw DataError("vine: sampling plan did not reduce to one variable");
  order_.insert(order_.end(), drawn_last_first.rbegin(), drawn_last_first.rend());
}

VineModel fit_vine(const LatentMatrix& y, int truncation) {
  const int d = static_cast<int>(y.cols());
  if (d < 2) throw InvalidArgument("vine needs at least 2 dimensions");
  if (truncation < 1 || truncation > d - 1)
    throw InvalidArgument("vine truncation level " + std::to_string(truncation) + " must be in [1, " +
                          std::to_string(d - 1) + "]");
  auto margins = fit_margins(y);
  const RankMatrix ranks = compute_ranks(y);
  const Matrix u = ranks.ranks().cast<double>() / (static_cast<double>(y.rows()) + 1.0);
  return VineModel(select_structure(u, truncation), truncation, std::move(margins));
}

VineSample sample_vine(const VineModel& model, std::size_t count, std::uint64_t seed) {
  const int d = model.dim();
  const auto& trees = model.trees();
  Rng rng(seed);
  VineSample out{Matrix(static_cast<Index>(count), d), Matrix(static_cast<Index>(count), d)};

  // Per-row conditional values of every edge, indexed like trees.
  std::vector<std::vector<double>> given_second, given_first;
  for (const auto& tree : trees) {
    given_second.emplace_back(tree.size());
    given_first.emplace_back(tree.size());
  }
  std::vector<double> u(static_cast<std::size_t>(d));
  std::vector<double> inputs(static_cast<std::size_t>(d));

  auto partner_input = [&](const VineModel::ChainStep& step) {
    if (step.tree == 0) return u[static_cast<std::size_t>(step.partner)];
    const auto& e = trees[static_cast<std::size_t>(step.tree)][static_cast<std::size_t>(step.edge)];
    const int child = step.partner == e.first ? e.child_first : e.child_second;
    const auto& c = trees[static_cast<std::size_t>(step.tree - 1)][static_cast<std::size_t>(child)];
    const auto t = static_cast<std::size_t>(step.tree - 1);
    return step.partner == c.first ? given_second[t][static_cast<std::size_t>(child)]
                                   : given_first[t][static_cast<std::size_t>(child)];
  };

  for (Index row = 0; row < out.copula.rows(); ++row) {
    for (int var : model.sampling_order()) {
      const auto& chain = model.chains()[static_cast<std::size_t>(var)];
      double x = rng.uniform();
      for (std::size_t s = chain.size(); s-- > 0;) {
        const auto& e = trees[static_cast<std::size_t>(chain[s].tree)][static_cast<std::size_t>(chain[s].edge)];
        x = gaussian_h_inverse(x, partner_input(chain[s]), e.rho);
        inputs[s] = x;
      }
      u[static_cast<std::size_t>(var)] = x;
      for (std::size_t s = 0; s < chain.size(); ++s) {
        const auto t = static_cast<std::size_t>(chain[s].tree);
        const auto idx = static_cast<std::size_t>(chain[s].edge);
        const auto& e = trees[t][idx];
        const double mine = inputs[s];
        const double other = partner_input(chain[s]);
        const double mine_given = gaussian_h(mine, other, e.rho);
        const double other_given = gaussian_h(other, mine, e.rho);
        if (var == e.first) {
          given_second[t][idx] = mine_given;
          given_first[t][idx] = other_given;
        } else {
          given_first[t][idx] = mine_given;
          given_second[t][idx] = other_given;
        }
      }
    }
    for (int j = 0; j < d; ++j) out.copula(row, j) = u[static_cast<std::size_t>(j)];
  }
  for (Index i = 0; i < out.copula.rows(); ++i)
    for (int j = 0; j < d; ++j) out.latent(i, j) = model.margins()[static_cast<std::size_t>(j)].inverse_cdf(out.copula(i, j));
  return out;
}

}  // namespace lgm
