#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lgm/core.hpp"
#include "lgm/marginals.hpp"

namespace lgm {

//! Kendall's tau, (concordant - discordant) / (n (n - 1) / 2) with tied pairs
//! counted as neither. O(n log n). Throws InvalidArgument for n < 2 or unequal
//! lengths.
double kendall_tau(std::span<const double> x, std::span<const double> y);

//! Gaussian pair-copula h-function P(U <= u | V = v) with correlation rho.
//! Exactly u when rho == 0.
double gaussian_h(double u, double v, double rho);

//! Inverse of gaussian_h in its first argument.
double gaussian_h_inverse(double w, double v, double rho);

//! One pair copula c_{first,second | conditioning}.
struct VineEdge {
  int first = 0;   //!< conditioned variable, first < second
  int second = 0;
  std::vector<int> conditioning;  //!< sorted
  double rho = 0.0;               //!< 0 means independence
  //! Nodes of the previous tree joined by this edge. In tree 1 these are the
  //! variables themselves; above, indices into the previous tree's edges.
  //! child_first is the node whose conditioned set holds `first`.
  int child_first = 0;
  int child_second = 0;
};

using VineTrees = std::vector<std::vector<VineEdge>>;

//! Throws DataError naming the first violated rule: every tree connected and
//! acyclic with d - k edges at level k; tree 1 on variables 0..d-1; tree k >= 2
//! on the edges of tree k - 1; joined nodes sharing exactly one node. Also
//! checks the conditioned/conditioning sets against the children and that
//! every rho lies strictly inside (-1, 1).
void validate_vine_structure(const VineTrees& trees, int dim);

//! Greedy maximum-spanning-tree selection on |tau|, one tree at a time, with
//! Gaussian pair parameters rho = sin(pi tau / 2) for trees 1..truncation.
//! Higher trees are completed with independence edges chosen by the same
//! rule with all weights equal, so the result always has d - 1 trees.
//! Ties between candidate edges go to the lexicographically smaller node pair.
//! `u` is n x d on the copula scale.
VineTrees select_structure(const Matrix& u, int truncation);

class VineModel {
public:
  VineModel(VineTrees trees, int truncation, std::vector<MarginalModel> margins);

  const VineTrees& trees() const { return trees_; }
  int truncation_level() const { return truncation_; }
  const std::vector<MarginalModel>& margins() const { return margins_; }
  int dim() const { return static_cast<int>(margins_.size()); }

  //! Order in which variables are drawn during sampling.
  const std::vector<int>& sampling_order() const { return order_; }

  struct ChainStep {
    int tree;     //!< 0-based tree level
    int edge;     //!< index within that tree
    int partner;  //!< the other conditioned variable
  };
  //! chains()[v]: the edges holding v in their conditioned set whose partner
  //! is drawn before v, from tree 1 upward.
  const std::vector<std::vector<ChainStep>>& chains() const { return chains_; }

private:
  void build_sampling_plan();

  VineTrees trees_;
  int truncation_;
  std::vector<MarginalModel> margins_;
  std::vector<int> order_;
  std::vector<std::vector<ChainStep>> chains_;
};

inline int default_truncation(int dim) { return dim - 1 < 5 ? dim - 1 : 5; }

//! KDE margins on each column, pseudo-observations r / (n + 1), then
//! select_structure. Throws InvalidArgument unless 1 <= truncation <= d - 1.
VineModel fit_vine(const LatentMatrix& y, int truncation);

struct VineSample {
  Matrix copula;
  Matrix latent;
};

//! Inverse Rosenblatt transform through the vine followed by the inverse
//! margin CDFs.
VineSample sample_vine(const VineModel& model, std::size_t count, std::uint64_t seed);

}  // namespace lgm
