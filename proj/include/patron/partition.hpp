#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "patron/knn.hpp"
#include "patron/matrix.hpp"
#include "patron/propagation.hpp"

namespace patron {

struct Partition {
  std::vector<std::size_t> assignment;                // cluster id per sample
  MatrixD centroids;                                  // b x d, mean of members
  std::vector<std::vector<std::size_t>> cluster_members;  // ascending sample indices
  std::vector<double> inertia_trace;                  // within-cluster SSE after each Lloyd step
  std::size_t lloyd_iterations = 0;

  std::size_t clusters() const noexcept { return cluster_members.size(); }
};

struct KMeansOptions {
  std::size_t max_iterations = 100;
  double tolerance = 1e-4;  // relative centroid shift ||C_new - C_old||_F / ||C_old||_F
  KnnStrategy assignment_strategy = KnnStrategy::Automatic;
};

// k-means++ seeding followed by Lloyd iterations. Empty clusters take the
// point farthest from its centroid. Deterministic for a given seed.
// Throws BudgetExceedsPool when b > n.
Partition kmeans(const MatrixF& embeddings, std::size_t b, std::uint64_t seed, const KMeansOptions& options = {});

// Re-expresses a partition computed on a row subset in terms of the original
// sample indices: `rows[i]` is the original index of subset row i.
Partition remap_partition(const Partition& part, std::span<const std::size_t> rows, std::size_t original_n);

struct SelectionState {
  std::vector<std::size_t> selected;      // one sample per cluster, slot i <-> cluster i
  std::vector<std::size_t> labeled_pool;  // already-labeled samples (multi-round)
  std::vector<double> objective_trace;    // summed objective after init and each round
  std::size_t iterations_run = 0;
  bool converged = false;
};

// Per-cluster score u_prop(x_j) - beta * ||z_j - centroid_i||^2.
double init_score(std::size_t sample, std::size_t cluster, const Partition& part, const UncertaintyVectors& unc,
                  const MatrixF& embeddings, double beta) noexcept;

// Greedy initialization: the best-scoring member of each cluster, ties by the
// smaller sample index.
SelectionState init_selection(const Partition& part, const UncertaintyVectors& unc, const MatrixF& embeddings,
                              double beta);

}  // namespace patron
