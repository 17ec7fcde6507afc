#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "patron/matrix.hpp"

namespace patron {

// Squared Euclidean distance accumulated in double precision. The summation
// order is fixed, so the same pair of rows always yields the same bits.
double squared_distance(std::span<const float> a, std::span<const float> b) noexcept;
double squared_distance(std::span<const float> a, std::span<const double> b) noexcept;

// Row-wise neighbor lists: row i holds `k` reference indices sorted by
// ascending (squared distance, index).
struct NeighborTable {
  std::size_t rows = 0;
  std::size_t k = 0;
  std::vector<std::size_t> index;
  std::vector<double> sq_dist;

  std::span<const std::size_t> neighbors(std::size_t i) const noexcept { return {index.data() + i * k, k}; }
  std::span<const double> distances(std::size_t i) const noexcept { return {sq_dist.data() + i * k, k}; }
};

enum class KnnStrategy {
  Automatic,  // Direct for small problems, Screened otherwise
  Direct,     // every pair evaluated with squared_distance
  Screened,   // float GEMM shortlist, exact re-ranking, certified per row
};

// Exact k nearest references of every query. The result is identical for all
// strategies and thread counts: ranking always uses squared_distance and ties
// go to the smaller reference index. With `exclude_self`, queries and refs
// must be the same matrix and row i never lists itself; k must not exceed the
// number of eligible references.
NeighborTable exact_knn(const MatrixF& queries, const MatrixF& refs, std::size_t k, bool exclude_self,
                        KnnStrategy strategy = KnnStrategy::Automatic);
NeighborTable exact_knn(const MatrixF& queries, const MatrixD& refs, std::size_t k, bool exclude_self,
                        KnnStrategy strategy = KnnStrategy::Automatic);

// Counters from the most recent screened search (diagnostics/tests).
struct ScreeningStats {
  std::size_t certified_rows = 0;
  std::size_t fallback_rows = 0;
};
ScreeningStats last_screening_stats() noexcept;

}  // namespace patron
