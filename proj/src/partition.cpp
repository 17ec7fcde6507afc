#include "patron/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "patron/error.hpp"
#include "patron/parallel.hpp"

namespace patron {

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

MatrixD seed_centers(const MatrixF& x, std::size_t b, std::mt19937_64& rng) {
  const std::size_t n = x.rows(), d = x.cols();
  MatrixD centers(b, d);
  std::vector<bool> chosen(n, false);
  auto take = [&](std::size_t t, std::size_t idx) {
    chosen[idx] = true;
    auto src = x.row(idx);
    auto dst = centers.row(t);
    for (std::size_t j = 0; j < d; ++j) dst[j] = src[j];
  };

  std::size_t first = std::min(n - 1, static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n)));
  take(0, first);
  std::vector<double> min_dist(n);
  parallel_for(n, 4096, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) min_dist[i] = squared_distance(x.row(i), x.row(first));
  });

  for (std::size_t t = 1; t < b; ++t) {
    double total = 0.0;
    for (double v : min_dist) total += v;
    const double u = uniform01(rng);
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = u * total;
      double cumulative = 0.0;
      std::size_t last_positive = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (min_dist[i] <= 0.0) continue;
        last_positive = i;
        cumulative += min_dist[i];
        if (cumulative > target) {
          pick = i;
          break;
        }
      }
      if (pick == n) pick = last_positive;
    } else {
      // every point coincides with a center: fall back to the first unused row
      pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
    }
    take(t, pick);
    parallel_for(n, 4096, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) min_dist[i] = std::min(min_dist[i], squared_distance(x.row(i), x.row(pick)));
    });
  }
  return centers;
}

MatrixD cluster_means(const MatrixF& x, const std::vector<std::size_t>& assignment, std::size_t b) {
  const std::size_t d = x.cols();
  MatrixD sums(b, d, 0.0);
  std::vector<std::size_t> counts(b, 0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto dst = sums.row(assignment[i]);
    auto src = x.row(i);
    for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    ++counts[assignment[i]];
  }
  for (std::size_t c = 0; c < b; ++c) {
    for (double& v : sums.row(c)) v /= static_cast<double>(counts[c]);
  }
  return sums;
}

double inertia(const MatrixF& x, const std::vector<std::size_t>& assignment, const MatrixD& centroids) {
  std::vector<double> cost(x.rows());
  parallel_for(x.rows(), 4096, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) cost[i] = squared_distance(x.row(i), centroids.row(assignment[i]));
  });
  double total = 0.0;
  for (double v : cost) total += v;
  return total;
}

}  // namespace

Partition kmeans(const MatrixF& x, std::size_t b, std::uint64_t seed, const KMeansOptions& options) {
  const std::size_t n = x.rows();
  if (b < 1) throw Error(ErrorCode::InvalidBudget, "number of clusters must be at least 1");
  if (b > n) {
    throw Error(ErrorCode::BudgetExceedsPool,
                "budget " + std::to_string(b) + " exceeds pool size " + std::to_string(n));
  }

  std::mt19937_64 rng(seed);
  Partition part;
  part.centroids = seed_centers(x, b, rng);
  part.assignment.assign(n, 0);

  for (std::size_t iter = 0; iter < options.max_iterations; ++iter) {
    const NeighborTable nearest = exact_knn(x, part.centroids, 1, false, options.assignment_strategy);
    std::vector<double> dist(nearest.sq_dist);
    std::vector<std::size_t> counts(b, 0);
    for (std::size_t i = 0; i < n; ++i) {
      part.assignment[i] = nearest.index[i];
      ++counts[part.assignment[i]];
    }

    for (std::size_t empty = 0; empty < b; ++empty) {
      if (counts[empty] != 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[part.assignment[i]] < 2) continue;
        if (far == n || dist[i] > dist[far]) far = i;
      }
      --counts[part.assignment[far]];
      part.assignment[far] = empty;
      counts[empty] = 1;
      dist[far] = 0.0;
    }

    MatrixD updated = cluster_means(x, part.assignment, b);
    double shift = 0.0, scale = 0.0;
    for (std::size_t t = 0; t < updated.values().size(); ++t) {
      const double delta = updated.values()[t] - part.centroids.values()[t];
      shift += delta * delta;
      scale += part.centroids.values()[t] * part.centroids.values()[t];
    }
    part.centroids = std::move(updated);
    part.inertia_trace.push_back(inertia(x, part.assignment, part.centroids));
    part.lloyd_iterations = iter + 1;
    const double relative = scale > 0.0 ? std::sqrt(shift / scale) : std::sqrt(shift);
    if (relative < options.tolerance) break;
  }

  part.cluster_members.assign(b, {});
  for (std::size_t i = 0; i < n; ++i) part.cluster_members[part.assignment[i]].push_back(i);
  return part;
}

Partition remap_partition(const Partition& part, std::span<const std::size_t> rows, std::size_t original_n) {
  Partition out;
  out.centroids = part.centroids;
  out.inertia_trace = part.inertia_trace;
  out.lloyd_iterations = part.lloyd_iterations;
  constexpr auto kUnassigned = std::numeric_limits<std::size_t>::max();
  out.assignment.assign(original_n, kUnassigned);
  out.cluster_members.resize(part.cluster_members.size());
  for (std::size_t c = 0; c < part.cluster_members.size(); ++c) {
    for (auto local : part.cluster_members[c]) {
      out.cluster_members[c].push_back(rows[local]);
      out.assignment[rows[local]] = c;
    }
    std::sort(out.cluster_members[c].begin(), out.cluster_members[c].end());
  }
  return out;
}

double init_score(std::size_t sample, std::size_t cluster, const Partition& part, const UncertaintyVectors& unc,
                  const MatrixF& embeddings, double beta) noexcept {
  return unc.propagated[sample] - beta * squared_distance(embeddings.row(sample), part.centroids.row(cluster));
}

SelectionState init_selection(const Partition& part, const UncertaintyVectors& unc, const MatrixF& embeddings,
                              double beta) {
  const std::size_t b = part.clusters();
  SelectionState state;
  state.selected.assign(b, 0);
  std::vector<double> best(b, -std::numeric_limits<double>::infinity());
  parallel_for(b, 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      const auto& members = part.cluster_members[c];
      if (members.empty()) throw Error(ErrorCode::InvalidArgument, "cluster " + std::to_string(c) + " is empty");
      std::size_t arg = members.front();
      double top = -std::numeric_limits<double>::infinity();
      for (auto j : members) {
        const double s = init_score(j, c, part, unc, embeddings, beta);
        if (s > top || (s == top && j < arg)) {
          top = s;
          arg = j;
        }
      }
      state.selected[c] = arg;
      best[c] = top;
    }
  });
  double total = 0.0;
  for (double v : best) total += v;
  state.objective_trace.push_back(total);
  return state;
}

}  // namespace patron
