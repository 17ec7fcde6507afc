#include "doctest.h"
#include "patron/error.hpp"
#include "patron/parallel.hpp"
#include "patron/params.hpp"
#include "support/fixtures.hpp"

using namespace patron;

namespace {

HyperParams valid() {
  HyperParams p;
  p.k_support = 5;
  p.rho = 0.1;
  p.beta = 0.5;
  p.gamma = 0.3;
  p.budget = 4;
  return p;
}

ErrorCode code_of(const HyperParams& p, std::size_t pool = 100) {
  try {
    validate(p, pool);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("validate accepted invalid parameters");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("defaults match the documented values") {
  const HyperParams p;
  CHECK(p.knn_size == 50);
  CHECK(p.cknn_size == 10);
  CHECK(p.margin == 0.5);
  CHECK(p.iterations == 2);
}

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(validate(valid(), 4));
  auto p = valid();
  p.budget = 0;
  CHECK(code_of(p) == ErrorCode::InvalidBudget);
  CHECK(code_of(valid(), 3) == ErrorCode::BudgetExceedsPool);
  p = valid();
  p.rho = 0.0;
  CHECK(code_of(p) == ErrorCode::InvalidArgument);
  p = valid();
  p.k_support = 0;
  CHECK(code_of(p) == ErrorCode::InvalidArgument);
  p = valid();
  p.beta = -1.0;
  CHECK(code_of(p) == ErrorCode::InvalidArgument);
  p = valid();
  p.gamma = -0.1;
  CHECK(code_of(p) == ErrorCode::InvalidArgument);
  p = valid();
  p.cknn_size = 0;
  CHECK(code_of(p) == ErrorCode::InvalidArgument);
  p = valid();
  p.knn_size = 0;
  CHECK(code_of(p) == ErrorCode::InvalidArgument);
}

TEST_CASE("built-in presets") {
  const auto trec = find_builtin_preset("trec");
  REQUIRE(trec);
  CHECK(*trec->k_support == 50);
  CHECK(*trec->beta == 5.0);
  const auto imdb = find_builtin_preset("imdb");
  REQUIRE(imdb);
  CHECK(*imdb->rho == 0.05);
  CHECK(builtin_presets().size() == 6);
  CHECK_FALSE(find_builtin_preset("nope"));
}

TEST_CASE("preset files") {
  fixtures::TempDir dir("preset");
  fixtures::write_text(dir / "p.json", R"({"rho": 0.2, "k_support": 7})");
  const auto p = load_preset_file((dir / "p.json").string());
  CHECK(p.name == "p");
  CHECK(*p.rho == 0.2);
  CHECK(*p.k_support == 7);
  CHECK_FALSE(p.beta);
  fixtures::write_text(dir / "bad.json", "[1, 2]");
  CHECK_THROWS_AS(load_preset_file((dir / "bad.json").string()), Error);
  fixtures::write_text(dir / "typed.json", R"({"rho": "x"})");
  CHECK_THROWS_AS(load_preset_file((dir / "typed.json").string()), Error);
  CHECK_THROWS_AS(load_preset_file((dir / "absent.json").string()), Error);
}

TEST_CASE("error messages carry code and stage") {
  const Error e(ErrorCode::BudgetExceedsPool, "budget 5 exceeds pool size 3");
  CHECK(e.stage().empty());
  const Error tagged = e.with_stage("partition");
  CHECK(tagged.stage() == "partition");
  CHECK(tagged.code() == ErrorCode::BudgetExceedsPool);
  CHECK(std::string(tagged.what()).find("partition") != std::string::npos);
  CHECK(std::string(tagged.what()).find("BudgetExceedsPool") != std::string::npos);
  CHECK(is_validation_error(ErrorCode::LabeledPoolInvalid));
  CHECK_FALSE(is_validation_error(ErrorCode::DegenerateRow));
  CHECK_FALSE(is_validation_error(ErrorCode::IoFailure));
}

TEST_CASE("parallel_for covers every index once and propagates exceptions") {
  for (std::size_t threads : {1, 2, 5}) {
    set_thread_count(threads);
    std::vector<int> hits(1003, 0);
    parallel_for(hits.size(), 17, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) ++hits[i];
    });
    for (int h : hits) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(100, 1, [](std::size_t b, std::size_t) {
                      if (b == 42) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
  }
  set_thread_count(1);
}
