#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "patron/matrix.hpp"
#include "patron/params.hpp"
#include "patron/partition.hpp"
#include "patron/propagation.hpp"

namespace patron {

// One entry of a cluster's cross-cluster neighbor list. Neighbors that are
// current selections remember their cluster slot so that the penalty can
// follow that slot's most recent choice during a sweep.
struct CrossNeighbor {
  static constexpr std::size_t kLabeledPool = std::numeric_limits<std::size_t>::max();

  std::size_t sample = 0;
  std::size_t slot = kLabeledPool;  // cluster slot, or kLabeledPool for D_l members

  bool is_labeled() const noexcept { return slot == kLabeledPool; }
  friend bool operator==(const CrossNeighbor&, const CrossNeighbor&) = default;
};

struct CrossKnn {
  std::vector<std::vector<CrossNeighbor>> per_cluster;
};

// For each selection q_i, its min(k_prime, |pool| - 1) nearest members of the
// pool Q (plus D_l when `multi_round`), q_i itself excluded. Squared
// Euclidean distance, ties by smaller sample index. A pool of one sample
// yields empty lists.
CrossKnn cross_knn(const SelectionState& state, const MatrixF& embeddings, std::size_t k_prime, bool multi_round);

enum class SweepMode {
  GaussSeidel,  // clusters see selections already updated earlier in the sweep
  Jacobi,       // every cluster sees the selections from the start of the sweep
};

// Initialization score minus gamma * sum_k [margin - ||z_j - z_k||^2]_+ over the
// cluster's cross neighbors, with neighbor positions taken from `current`.
double rewrite_score(std::size_t sample, std::size_t cluster, const Partition& part, const UncertaintyVectors& unc,
                     const MatrixF& embeddings, const CrossKnn& cknn, std::span<const std::size_t> current,
                     const HyperParams& params) noexcept;

// Re-solves every cluster's choice in ascending cluster order. Candidates that
// are selected by another cluster or belong to D_l are skipped; ties go to
// the smaller sample index.
SelectionState rewrite_step(const SelectionState& state, const Partition& part, const UncertaintyVectors& unc,
                            const CrossKnn& cknn, const HyperParams& params, const MatrixF& embeddings,
                            SweepMode mode = SweepMode::GaussSeidel);

// Greedy initialization followed by up to params.iterations rounds of
// (cross_knn, rewrite_step), stopping early once a round leaves Q unchanged.
SelectionState run_ptr(const Partition& part, const UncertaintyVectors& unc, const HyperParams& params,
                       const MatrixF& embeddings, std::span<const std::size_t> labeled_pool = {},
                       SweepMode mode = SweepMode::GaussSeidel);

}  // namespace patron
