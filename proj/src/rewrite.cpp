#include "patron/rewrite.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "patron/error.hpp"
#include "patron/knn.hpp"
#include "patron/parallel.hpp"

namespace patron {

CrossKnn cross_knn(const SelectionState& state, const MatrixF& embeddings, std::size_t k_prime, bool multi_round) {
  std::vector<CrossNeighbor> pool;
  for (std::size_t s = 0; s < state.selected.size(); ++s) pool.push_back({state.selected[s], s});
  if (multi_round) {
    for (auto idx : state.labeled_pool) pool.push_back({idx, CrossNeighbor::kLabeledPool});
  }

  CrossKnn out;
  out.per_cluster.resize(state.selected.size());
  if (pool.size() < 2) return out;
  const std::size_t take = std::min(k_prime, pool.size() - 1);

  std::vector<std::tuple<double, std::size_t, std::size_t>> ranked;  // (distance, sample, pool position)
  for (std::size_t i = 0; i < state.selected.size(); ++i) {
    const auto q = embeddings.row(state.selected[i]);
    ranked.clear();
    for (std::size_t p = 0; p < pool.size(); ++p) {
      if (pool[p].slot == i) continue;
      ranked.emplace_back(squared_distance(q, embeddings.row(pool[p].sample)), pool[p].sample, p);
    }
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(take), ranked.end());
    for (std::size_t t = 0; t < take; ++t) out.per_cluster[i].push_back(pool[std::get<2>(ranked[t])]);
  }
  return out;
}

double rewrite_score(std::size_t sample, std::size_t cluster, const Partition& part, const UncertaintyVectors& unc,
                     const MatrixF& embeddings, const CrossKnn& cknn, std::span<const std::size_t> current,
                     const HyperParams& params) noexcept {
  const auto z = embeddings.row(sample);
  double penalty = 0.0;
  for (const auto& nb : cknn.per_cluster[cluster]) {
    const std::size_t other = nb.is_labeled() ? nb.sample : current[nb.slot];
    penalty += std::max(0.0, params.margin - squared_distance(z, embeddings.row(other)));
  }
  return init_score(sample, cluster, part, unc, embeddings, params.beta) - params.gamma * penalty;
}

SelectionState rewrite_step(const SelectionState& state, const Partition& part, const UncertaintyVectors& unc,
                            const CrossKnn& cknn, const HyperParams& params, const MatrixF& embeddings,
                            SweepMode mode) {
  const std::size_t b = part.clusters();
  if (state.selected.size() != b || cknn.per_cluster.size() != b) {
    throw Error(ErrorCode::InvalidArgument, "selection state, partition and cross-kNN disagree on cluster count");
  }

  SelectionState next = state;
  const std::vector<std::size_t> frozen = state.selected;
  std::span<const std::size_t> context =
      mode == SweepMode::Jacobi ? std::span<const std::size_t>(frozen) : std::span<const std::size_t>(next.selected);

  // Samples no cluster may pick: D_l and every current selection.
  std::vector<std::uint8_t> blocked(embeddings.rows(), 0);
  for (auto idx : state.labeled_pool) blocked[idx] = 1;
  for (auto idx : context) blocked[idx] = 1;

  double total = 0.0;
  std::vector<double> scores;
  for (std::size_t c = 0; c < b; ++c) {
    const auto& members = part.cluster_members[c];
    const std::size_t own = context[c];
    scores.assign(members.size(), 0.0);
    parallel_for(members.size(), 2048, [&](std::size_t begin, std::size_t end) {
      for (std::size_t t = begin; t < end; ++t) {
        const std::size_t j = members[t];
        if (blocked[j] && j != own) {
          scores[t] = -std::numeric_limits<double>::infinity();
          continue;
        }
        scores[t] = rewrite_score(j, c, part, unc, embeddings, cknn, context, params);
      }
    });

    std::size_t arg = own;
    double top = -std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t t = 0; t < members.size(); ++t) {
      const std::size_t j = members[t];
      if (blocked[j] && j != own) continue;
      if (!found || scores[t] > top || (scores[t] == top && j < arg)) {
        top = scores[t];
        arg = j;
        found = true;
      }
    }
    total += top;
    if (arg != own && mode == SweepMode::GaussSeidel) {
      blocked[own] = 0;
      blocked[arg] = 1;
    }
    next.selected[c] = arg;
  }
  next.objective_trace.push_back(total);
  return next;
}

SelectionState run_ptr(const Partition& part, const UncertaintyVectors& unc, const HyperParams& params,
                       const MatrixF& embeddings, std::span<const std::size_t> labeled_pool, SweepMode mode) {
  SelectionState state = init_selection(part, unc, embeddings, params.beta);
  state.labeled_pool.assign(labeled_pool.begin(), labeled_pool.end());
  const bool multi_round = !state.labeled_pool.empty();

  for (std::size_t t = 1; t <= params.iterations; ++t) {
    const CrossKnn cknn = cross_knn(state, embeddings, params.cknn_size, multi_round);
    SelectionState next = rewrite_step(state, part, unc, cknn, params, embeddings, mode);
    next.iterations_run = t;
    const bool unchanged = next.selected == state.selected;
    state = std::move(next);
    if (unchanged) {
      state.converged = true;
      break;
    }
  }
  return state;
}

}  // namespace patron
