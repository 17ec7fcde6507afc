#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "patron/calibration.hpp"
#include "patron/parallel.hpp"
#include "patron/partition.hpp"
#include "patron/propagation.hpp"
#include "patron/rewrite.hpp"
#include "patron/synthgen.hpp"
#include "support/fixtures.hpp"
#include "support/oracle.hpp"

using namespace patron;

namespace {

struct Instance {
  MatrixF x;
  Partition part;
  UncertaintyVectors unc;
};

// Small synthetic instance with propagated uncertainty and a k-means partition.
Instance make_instance(std::uint64_t seed, std::size_t n, std::size_t b, double blob_scale, bool normalize) {
  SynthSpec spec;
  spec.n = n;
  spec.d = 8;
  spec.c = 4;
  spec.seed = seed;
  spec.blob_scale = blob_scale;
  spec.cluster_separation = 2.0;
  const auto data = generate(spec);
  Instance inst;
  inst.x = normalize ? l2_normalized(data.embeddings) : data.embeddings;
  const auto u = entropy(calibrate(data, contextual_prior(data, build_support_set(data, 10))));
  inst.unc = propagate(u, knn_graph(inst.x, 20), 0.5);
  inst.part = kmeans(inst.x, b, seed);
  return inst;
}

Partition manual_partition(std::vector<std::vector<std::size_t>> members, const MatrixF& x) {
  Partition part;
  part.assignment.assign(x.rows(), 0);
  part.centroids = MatrixD(members.size(), x.cols(), 0.0);
  for (std::size_t c = 0; c < members.size(); ++c) {
    for (auto i : members[c]) {
      part.assignment[i] = c;
      for (std::size_t j = 0; j < x.cols(); ++j) part.centroids(c, j) += x(i, j) / static_cast<double>(members[c].size());
    }
  }
  part.cluster_members = std::move(members);
  return part;
}

oracle::Clusters as_oracle(const Partition& part) {
  oracle::Clusters cl;
  cl.assignment = part.assignment;
  cl.members = part.cluster_members;
  for (std::size_t c = 0; c < part.clusters(); ++c) {
    cl.centroids.emplace_back(part.centroids.row(c).begin(), part.centroids.row(c).end());
  }
  return cl;
}

void check_state_invariants(const SelectionState& s, const Partition& part) {
  REQUIRE(s.selected.size() == part.clusters());
  std::set<std::size_t> distinct(s.selected.begin(), s.selected.end());
  CHECK(distinct.size() == s.selected.size());
  for (std::size_t c = 0; c < s.selected.size(); ++c) {
    const auto& m = part.cluster_members[c];
    CHECK(std::find(m.begin(), m.end(), s.selected[c]) != m.end());
  }
  for (auto l : s.labeled_pool) CHECK_FALSE(distinct.count(l));
}

}  // namespace

TEST_CASE("cross neighbors with two queries are each other") {
  SelectionState s;
  s.selected = {4, 9};
  const auto x = fixtures::random_matrix(10, 3, 1);
  const auto cknn = cross_knn(s, x, 10, false);
  REQUIRE(cknn.per_cluster[0].size() == 1);
  CHECK(cknn.per_cluster[0][0] == CrossNeighbor{9, 1});
  CHECK(cknn.per_cluster[1][0] == CrossNeighbor{4, 0});
}

TEST_CASE("cross neighbor lists clamp to the pool size") {
  SelectionState s;
  s.selected = {0, 1, 2, 3, 4};
  const auto cknn = cross_knn(s, fixtures::random_matrix(5, 2, 3), 10, false);
  for (const auto& list : cknn.per_cluster) {
    CHECK(list.size() == 4);
  }
  for (std::size_t i = 0; i < 5; ++i) {
    for (const auto& nb : cknn.per_cluster[i]) CHECK(nb.slot != i);
  }
}

TEST_CASE("a lone query has no cross neighbors") {
  SelectionState s;
  s.selected = {2};
  const auto cknn = cross_knn(s, fixtures::random_matrix(5, 2, 3), 10, false);
  CHECK(cknn.per_cluster.size() == 1);
  CHECK(cknn.per_cluster[0].empty());
}

TEST_CASE("multi-round neighbor pool includes the labeled samples") {
  const auto x = fixtures::random_matrix(30, 4, 8);
  SelectionState s;
  s.selected = {0, 5, 10, 15};
  s.labeled_pool = {20, 21, 22};
  const auto cknn = cross_knn(s, x, 50, true);
  const auto expected = oracle::neighbors_among_queries(s.selected, s.labeled_pool, oracle::to_rows(x), 50);
  for (std::size_t i = 0; i < 4; ++i) {
    REQUIRE(cknn.per_cluster[i].size() == 4 + 3 - 1);
    for (std::size_t t = 0; t < cknn.per_cluster[i].size(); ++t) {
      const auto& got = cknn.per_cluster[i][t];
      const auto& want = expected[i][t];
      CHECK(got.is_labeled() == want.labeled);
      if (want.labeled) {
        CHECK(got.sample == want.slot_or_sample);
      } else {
        CHECK(got.slot == want.slot_or_sample);
      }
    }
  }
  // single-round ignores the labeled pool even when it is present
  CHECK(cross_knn(s, x, 50, false).per_cluster[0].size() == 3);
}

TEST_CASE("two clusters of three hand-placed candidates") {
  // cluster 0 on the left, cluster 1 on the right; squared gaps across the
  // boundary are below the margin for the inner candidates
  const auto x = fixtures::matrix({{-1.0f, 0.0f}, {-0.4f, 0.0f}, {-0.2f, 0.1f},
                                   {0.2f, 0.0f}, {0.5f, 0.2f}, {1.0f, 0.0f}});
  const auto part = manual_partition({{0, 1, 2}, {3, 4, 5}}, x);
  const UncertaintyVectors unc{{}, {0.2, 0.5, 0.9, 0.95, 0.6, 0.3}};
  HyperParams p;
  p.beta = 0.1;
  p.gamma = 2.0;
  p.margin = 0.5;
  p.cknn_size = 10;
  p.iterations = 1;

  const auto init = init_selection(part, unc, x, p.beta);
  CHECK(init.selected == std::vector<std::size_t>{2, 3});
  const auto cknn = cross_knn(init, x, p.cknn_size, false);
  const auto next = rewrite_step(init, part, unc, cknn, p, x);

  // exhaustive evaluation of every candidate in sweep order
  auto score = [&](std::size_t j, std::size_t c, std::size_t other) {
    double z = 0.0, zc = 0.0;
    for (std::size_t d = 0; d < 2; ++d) {
      z += (x(j, d) - x(other, d)) * (x(j, d) - x(other, d));
      zc += (x(j, d) - part.centroids(c, d)) * (x(j, d) - part.centroids(c, d));
    }
    return unc.propagated[j] - p.beta * zc - p.gamma * std::max(0.0, p.margin - z);
  };
  std::size_t best0 = 0;
  for (std::size_t j : {0, 1, 2}) {
    if (score(j, 0, 3) > score(best0, 0, 3)) best0 = j;
  }
  std::size_t best1 = 3;
  for (std::size_t j : {3, 4, 5}) {
    if (score(j, 1, best0) > score(best1, 1, best0)) best1 = j;
  }
  CHECK(next.selected == std::vector<std::size_t>{best0, best1});
  CHECK(next.selected != init.selected);
  CHECK(next.objective_trace.back() == doctest::Approx(score(best0, 0, 3) + score(best1, 1, best0)));

  const auto oracle_run = oracle::rewrite(as_oracle(part), oracle::to_rows(x), unc.propagated, {},
                                          {1, 50, 10, 0.1, p.beta, p.gamma, p.margin, 1, 2, 0, false});
  CHECK(oracle_run.selected == next.selected);
}

TEST_CASE("zero gamma leaves the initialization unchanged") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = make_instance(seed, 200, 8, 0.3, true);
    HyperParams p;
    p.beta = 0.5;
    p.gamma = 0.0;
    p.iterations = 4;
    const auto init = init_selection(inst.part, inst.unc, inst.x, p.beta);
    const auto out = run_ptr(inst.part, inst.unc, p, inst.x);
    CHECK(out.selected == init.selected);
    CHECK(out.converged);
    CHECK(out.iterations_run == 1);
  }
}

TEST_CASE("margins satisfied by the initialization give an immediate fixed point") {
  // selections far apart relative to the margin: penalty identically zero
  const auto inst = make_instance(3, 300, 6, 1.0, false);
  HyperParams p;
  p.beta = 0.5;
  p.gamma = 5.0;
  p.margin = 1e-6;
  p.iterations = 3;
  const auto init = init_selection(inst.part, inst.unc, inst.x, p.beta);
  const auto out = run_ptr(inst.part, inst.unc, p, inst.x);
  CHECK(out.selected == init.selected);
  CHECK(out.converged);
  CHECK(out.iterations_run == 1);
  CHECK(out.objective_trace.size() == 2);
}

TEST_CASE("zero rounds returns the initialization") {
  const auto inst = make_instance(5, 200, 8, 0.3, true);
  HyperParams p;
  p.beta = 0.5;
  p.gamma = 1.0;
  p.iterations = 0;
  const auto out = run_ptr(inst.part, inst.unc, p, inst.x);
  CHECK(out.selected == init_selection(inst.part, inst.unc, inst.x, p.beta).selected);
  CHECK(out.iterations_run == 0);
  CHECK_FALSE(out.converged);
}

TEST_CASE("every rewritten choice is the exact per-cluster argmax") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const auto inst = make_instance(seed, 240, 10, 0.3, true);
    HyperParams p;
    p.beta = 0.5;
    p.gamma = 1.0;
    p.margin = 0.5;
    p.cknn_size = 4;
    auto state = init_selection(inst.part, inst.unc, inst.x, p.beta);
    for (int round = 0; round < 3; ++round) {
      const auto cknn = cross_knn(state, inst.x, p.cknn_size, false);
      const auto next = rewrite_step(state, inst.part, inst.unc, cknn, p, inst.x, SweepMode::Jacobi);
      check_state_invariants(next, inst.part);
      // Jacobi: every cluster was scored against the selections at sweep start
      for (std::size_t c = 0; c < inst.part.clusters(); ++c) {
        double top = -1e300;
        std::size_t arg = 0;
        for (auto j : inst.part.cluster_members[c]) {
          const double s = rewrite_score(j, c, inst.part, inst.unc, inst.x, cknn, state.selected, p);
          if (s > top) top = s, arg = j;
        }
        CHECK(next.selected[c] == arg);
      }
      state = next;
    }
  }
}

TEST_CASE("sequential sweeps match the reference, including a labeled pool") {
  std::size_t changed = 0;
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const auto inst = make_instance(seed, 200, 8, 0.3, true);
    std::vector<std::size_t> labeled;
    if (seed % 2 == 1) {
      // put the labeled samples exactly at would-be selections of half the clusters
      const auto init = init_selection(inst.part, inst.unc, inst.x, 0.5);
      for (std::size_t c = 0; c < init.selected.size(); c += 2) labeled.push_back(init.selected[c]);
    }
    // the labeled samples are not selectable: drop them from the partition
    Partition part = inst.part;
    for (auto& m : part.cluster_members) {
      std::erase_if(m, [&](std::size_t i) { return std::find(labeled.begin(), labeled.end(), i) != labeled.end(); });
    }
    HyperParams p;
    p.beta = 0.5;
    p.gamma = 0.8;
    p.margin = 0.5;
    p.iterations = 5;
    for (auto mode : {SweepMode::GaussSeidel}) {
      const auto out = run_ptr(part, inst.unc, p, inst.x, labeled, mode);
      check_state_invariants(out, part);
      oracle::Knobs k;
      k.beta = p.beta;
      k.gamma = p.gamma;
      k.margin = p.margin;
      k.iterations = p.iterations;
      k.cknn = p.cknn_size;
      const auto expected = oracle::rewrite(as_oracle(part), oracle::to_rows(inst.x), inst.unc.propagated, labeled, k);
      CHECK(out.selected == expected.selected);
      CHECK(out.iterations_run == expected.rounds);
      CHECK(out.converged == expected.converged);
      if (out.selected != expected.init) ++changed;
    }
  }
  CHECK(changed > 0);
}

TEST_CASE("rewriting does not depend on the thread count") {
  const auto inst = make_instance(11, 3000, 32, 0.3, true);
  HyperParams p;
  p.beta = 0.5;
  p.gamma = 1.0;
  p.iterations = 4;
  set_thread_count(1);
  const auto a = run_ptr(inst.part, inst.unc, p, inst.x);
  set_thread_count(4);
  const auto b = run_ptr(inst.part, inst.unc, p, inst.x);
  set_thread_count(1);
  CHECK(a.selected == b.selected);
  CHECK(a.objective_trace == b.objective_trace);
}
