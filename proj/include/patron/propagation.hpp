#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "patron/knn.hpp"
#include "patron/matrix.hpp"

namespace patron {

// Exact kNN graph over the pool. Row i lists K = min(knn_size, n - 1) other
// samples sorted by ascending squared distance, ties by smaller index.
struct KnnGraph {
  NeighborTable table;

  std::size_t size() const noexcept { return table.rows; }
  std::size_t k() const noexcept { return table.k; }
  std::span<const std::size_t> neighbors(std::size_t i) const noexcept { return table.neighbors(i); }
  std::span<const double> sq_distances(std::size_t i) const noexcept { return table.distances(i); }
};

struct UncertaintyVectors {
  std::vector<double> raw;         // entropy of the calibrated pseudo-labels
  std::vector<double> propagated;  // raw plus the kernel-weighted neighbor term
};

KnnGraph knn_graph(const MatrixF& embeddings, std::size_t knn_size,
                   KnnStrategy strategy = KnnStrategy::Automatic);

// exp(-rho * sq_distance)
double rbf_kernel(double sq_distance, double rho) noexcept;

// u(x) + sum_{x_i in kNN(x)} k(x, x_i) u(x_i) / |kNN(x)|. The divisor is the
// neighbor count, not the kernel-weight sum.
UncertaintyVectors propagate(std::span<const double> raw_u, const KnnGraph& graph, double rho);

// Scales each row to unit L2 norm; all-zero rows are left untouched.
MatrixF l2_normalized(const MatrixF& embeddings);

}  // namespace patron
