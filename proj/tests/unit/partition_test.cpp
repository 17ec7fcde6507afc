#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "patron/error.hpp"
#include "patron/parallel.hpp"
#include "patron/partition.hpp"
#include "patron/synthgen.hpp"
#include "support/fixtures.hpp"
#include "support/oracle.hpp"

using namespace patron;

namespace {

MatrixF two_clouds(std::size_t per_cloud, std::uint64_t seed) {
  auto x = fixtures::random_matrix(2 * per_cloud, 3, seed);
  for (std::size_t i = per_cloud; i < 2 * per_cloud; ++i) x(i, 0) += 100.0f;
  return x;
}

void check_partition_invariants(const Partition& part, const MatrixF& x) {
  std::size_t total = 0;
  for (std::size_t c = 0; c < part.clusters(); ++c) {
    const auto& members = part.cluster_members[c];
    REQUIRE_FALSE(members.empty());
    total += members.size();
    CHECK(std::is_sorted(members.begin(), members.end()));
    for (std::size_t j = 0; j < x.cols(); ++j) {
      double mean = 0.0;
      for (auto i : members) mean += x(i, j);
      mean /= static_cast<double>(members.size());
      CHECK(std::abs(mean - part.centroids(c, j)) <= 1e-6);
    }
    for (auto i : members) CHECK(part.assignment[i] == c);
  }
  CHECK(total == x.rows());
}

UncertaintyVectors flat_uncertainty(std::vector<double> values) { return {values, values}; }

}  // namespace

TEST_CASE("well separated clouds are split exactly") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto x = two_clouds(40, seed);
    const auto part = kmeans(x, 2, seed);
    check_partition_invariants(part, x);
    for (std::size_t i = 1; i < 40; ++i) CHECK(part.assignment[i] == part.assignment[0]);
    for (std::size_t i = 41; i < 80; ++i) CHECK(part.assignment[i] == part.assignment[40]);
    CHECK(part.assignment[0] != part.assignment[40]);
  }
}

TEST_CASE("as many clusters as points gives singletons") {
  const auto x = fixtures::random_matrix(9, 4, 3);
  const auto part = kmeans(x, 9, 1);
  check_partition_invariants(part, x);
  for (std::size_t c = 0; c < 9; ++c) {
    REQUIRE(part.cluster_members[c].size() == 1);
    const auto i = part.cluster_members[c][0];
    for (std::size_t j = 0; j < 4; ++j) CHECK(part.centroids(c, j) == static_cast<double>(x(i, j)));
  }
}

TEST_CASE("budget larger than the pool is rejected") {
  try {
    kmeans(fixtures::random_matrix(3, 2, 0), 4, 0);
    FAIL("expected BudgetExceedsPool");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BudgetExceedsPool);
  }
}

TEST_CASE("duplicate points still give one nonempty cluster per budget slot") {
  MatrixF x(12, 2, 1.0f);
  x(11, 0) = 5.0f;
  const auto part = kmeans(x, 4, 3);
  check_partition_invariants(part, x);
}

TEST_CASE("kmeans is deterministic and thread-count independent") {
  SynthSpec spec;
  spec.n = 3000;
  spec.d = 24;
  spec.seed = 4;
  const auto data = generate(spec);
  set_thread_count(1);
  const auto a = kmeans(data.embeddings, 20, 9);
  const auto b = kmeans(data.embeddings, 20, 9);
  set_thread_count(3);
  const auto c = kmeans(data.embeddings, 20, 9);
  set_thread_count(1);
  CHECK(a.assignment == b.assignment);
  CHECK(a.centroids == b.centroids);
  CHECK(a.assignment == c.assignment);
  CHECK(a.centroids == c.centroids);
  CHECK(a.inertia_trace == c.inertia_trace);
}

TEST_CASE("kmeans inertia never increases across Lloyd steps") {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    SynthSpec spec;
    spec.n = 400;
    spec.d = 5;
    spec.c = 6;
    spec.cluster_separation = 2.0;
    spec.seed = seed;
    const auto data = generate(spec);
    const auto part = kmeans(data.embeddings, 12, seed);
    check_partition_invariants(part, data.embeddings);
    for (std::size_t t = 1; t < part.inertia_trace.size(); ++t) {
      CHECK(part.inertia_trace[t] <= part.inertia_trace[t - 1] * (1.0 + 1e-12));
    }
    CHECK(part.lloyd_iterations == part.inertia_trace.size());
    CHECK(part.lloyd_iterations <= 100);
  }
}

TEST_CASE("kmeans matches the reference implementation") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthSpec spec;
    spec.n = 150;
    spec.d = 4;
    spec.seed = seed;
    spec.cluster_separation = 3.0;
    const auto data = generate(spec);
    const auto part = kmeans(data.embeddings, 7, seed * 31);
    const auto expected = oracle::kmeans(oracle::to_rows(data.embeddings), 7, seed * 31);
    CHECK(part.assignment == expected.assignment);
    CHECK(part.cluster_members == expected.members);
  }
}

TEST_CASE("remapping a partition onto global rows") {
  const auto x = fixtures::random_matrix(6, 2, 5);
  const auto part = kmeans(x, 2, 0);
  const std::vector<std::size_t> rows{1, 3, 4, 6, 8, 9};
  const auto remapped = remap_partition(part, rows, 10);
  for (std::size_t local = 0; local < 6; ++local) CHECK(remapped.assignment[rows[local]] == part.assignment[local]);
  CHECK(remapped.cluster_members[0].size() + remapped.cluster_members[1].size() == 6);
  CHECK(remapped.centroids == part.centroids);
}

TEST_CASE("zero beta picks the uncertainty argmax in each cluster") {
  const auto x = two_clouds(5, 2);
  const auto part = kmeans(x, 2, 0);
  const auto unc = flat_uncertainty({0.1, 0.5, 0.3, 0.5, 0.2, 0.9, 0.8, 0.95, 0.1, 0.0});
  const auto state = init_selection(part, unc, x, 0.0);
  const auto left = part.assignment[0];
  CHECK(state.selected[left] == 1);  // tie between 1 and 3 goes to the smaller index
  CHECK(state.selected[1 - left] == 7);
  CHECK(state.objective_trace.size() == 1);
  CHECK(state.objective_trace[0] == doctest::Approx(0.5 + 0.95));
}

TEST_CASE("huge beta picks the member nearest to the centroid") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto x = fixtures::random_matrix(60, 3, seed);
    const auto part = kmeans(x, 4, seed);
    std::vector<double> u(60);
    std::mt19937_64 rng(seed);
    for (double& v : u) v = std::uniform_real_distribution<double>(0, 1.4)(rng);
    const auto state = init_selection(part, flat_uncertainty(u), x, 1e9);
    for (std::size_t c = 0; c < 4; ++c) {
      std::size_t nearest = part.cluster_members[c][0];
      double best = 1e300;
      for (auto i : part.cluster_members[c]) {
        double s = 0.0;
        for (std::size_t j = 0; j < 3; ++j) s += (x(i, j) - part.centroids(c, j)) * (x(i, j) - part.centroids(c, j));
        if (s < best) best = s, nearest = i;
      }
      CHECK(state.selected[c] == nearest);
    }
  }
}

TEST_CASE("five-member cluster matches an exhaustive scan") {
  Partition part;
  part.assignment = {0, 0, 0, 0, 0};
  part.cluster_members = {{0, 1, 2, 3, 4}};
  part.centroids = MatrixD(1, 2, 0.0);
  const auto x = fixtures::matrix({{1.0f, 0.0f}, {0.0f, 2.0f}, {0.5f, 0.5f}, {-1.0f, -1.0f}, {3.0f, 0.0f}});
  const auto unc = flat_uncertainty({0.2, 1.5, 0.6, 0.9, 2.5});
  // scores with beta = 0.4: 0.2-0.4, 1.5-1.6, 0.6-0.2, 0.9-0.8, 2.5-3.6
  const auto state = init_selection(part, unc, x, 0.4);
  CHECK(state.selected[0] == 2);
}

TEST_CASE("shifting one cluster's uncertainty by a constant keeps every choice") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = fixtures::random_matrix(80, 3, seed);
    const auto part = kmeans(x, 5, seed);
    std::vector<double> u(80);
    std::mt19937_64 rng(seed + 1000);
    for (double& v : u) v = std::uniform_real_distribution<double>(0, 1)(rng);
    const auto base = init_selection(part, flat_uncertainty(u), x, 0.7);
    for (auto i : part.cluster_members[seed % 5]) u[i] += 0.5;
    const auto shifted = init_selection(part, flat_uncertainty(u), x, 0.7);
    CHECK(base.selected == shifted.selected);
  }
}
