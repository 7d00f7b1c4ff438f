#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "oreps/error.hpp"
#include "oreps/harness.hpp"

using namespace oreps;

namespace {

const char* kSmall = R"(
[experiment]
name = "unit"
rounds = 12
repeats = 2
seed = 4
svg = false

[environment]
kind = "loopfree"
width = 3
height = 3

[losses]
scheme = "random-action"
period = 4

[[learner]]
algorithm = "oreps"

[[learner]]
algorithm = "doreps"
label = "do"
)";

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing fills defaults") {
  const auto c = parse_config(kSmall);
  CHECK(c.name == "unit");
  CHECK(c.rounds == 12);
  CHECK(c.losses.period == 4);
  CHECK(c.comparator.kind == ComparatorSpec::Kind::PiecewiseBest);
  CHECK(c.comparator.period == 4);
  REQUIRE(c.learners.size() == 2);
  CHECK(c.learners[1].label == "do");
  CHECK_FALSE(c.write_svg);
}

TEST_CASE("config errors are reported as ConfigError") {
  auto code_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::NegativeEntry;
  };
  CHECK(code_of("[experiment]\nrounds = 5\n[environment]\nkind = \"loopfree\"\n") == ErrorCode::ConfigError);
  CHECK(code_of("[experiment]\nrounds = 5\n[environment]\nkind = \"maze\"\n[[learner]]\nalgorithm = \"oreps\"\n") ==
        ErrorCode::ConfigError);
  CHECK(code_of("[experiment]\nrounds = 5\n[environment]\nkind = \"loopfree\"\n[[learner]]\nalgorithm = \"q\"\n") ==
        ErrorCode::ConfigError);
  CHECK(code_of("[experiment\n") == ErrorCode::ConfigError);
  CHECK(code_of("[experiment]\nrounds = 5\n[environment]\nkind = \"infinite\"\ntau = \"fast\"\n"
                "[[learner]]\nalgorithm = \"oreps\"\n") == ErrorCode::ConfigError);
}

TEST_CASE("best fixed comparator on the loop-free grid has zero loss under a fixed zero-loss action") {
  GridSpec spec{3, 3, 0.1, GridVariant::LoopFree, 0.0};
  const auto mdp = build_loopfree_grid(spec);
  const auto losses = piecewise_losses(mdp, {10, LossScheme::RandomActionPerState, 1}, 10);
  const auto pi = best_fixed_comparator(mdp, losses);
  CHECK(inner(occupancy_of_policy(mdp, pi), losses[0]) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("SSP comparator prefers the free direction") {
  auto mdp = fixtures::leaky_pair(0.5);
  const std::vector<LossFunction> losses{LossFunction(2, 2, {1.0, 0.0, 0.0, 1.0})};
  const auto pi = best_fixed_comparator(*mdp, losses);
  CHECK(pi(0, 1) == doctest::Approx(1.0));
  CHECK(pi(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("average-cost comparator on the flip chain") {
  auto mdp = fixtures::flip_chain(0.3, 0.1);
  // staying in state 1 is free; action 0 from state 1 leaves slowly, action 1 always leaves
  const std::vector<LossFunction> losses{LossFunction(2, 2, {1.0, 1.0, 0.0, 0.0})};
  const auto pi = best_fixed_comparator(*mdp, losses);
  CHECK(pi(1, 0) == doctest::Approx(1.0));
  CHECK(pi(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("piecewise comparator changes only at piece boundaries") {
  const auto mdp = build_loopfree_grid({3, 3, 0.1, GridVariant::LoopFree, 0.0});
  const auto losses = piecewise_losses(mdp, {3, LossScheme::RandomActionPerState, 8}, 9);
  const auto seq = piecewise_comparator(mdp, losses, 3);
  REQUIRE(seq.size() == 9);
  CHECK(seq[1].values() == seq[0].values());
  CHECK(seq[5].values() == seq[3].values());
}

TEST_CASE("reduction right-hand side by hand") {
  RegretReport r;
  r.expected_loss = {1.0, 2.0};
  r.comparator_loss = {0.5, 0.5};
  r.switch_cost = {0.0, 0.25};
  r.path_length = 0.1;
  // 2 + 2 * 0.25 + 4 * 0.1 + 4 * 2
  CHECK(reduction_rhs(r, 1.0) == doctest::Approx(2.0 + 0.5 + 0.4 + 8.0));
  r.switch_cost.clear();
  CHECK_THROWS_AS(reduction_rhs(r, 1.0), Error);
}

TEST_CASE("experiment outputs and byte-identical reruns") {
  auto c = parse_config(kSmall);
  const auto dir = std::filesystem::temp_directory_path() / "oreps_unit_harness";
  std::filesystem::remove_all(dir);
  c.output_dir = dir.string();
  const auto first = run_experiment(c);
  REQUIRE(first.files.size() == 2);
  const auto rounds_a = slurp(first.files[0]), summary_a = slurp(first.files[1]);
  const auto second = run_experiment(c);
  CHECK(slurp(second.files[0]) == rounds_a);
  CHECK(slurp(second.files[1]) == summary_a);
  CHECK(rounds_a.rfind("round,learner,expected_loss,realized_loss_mean", 0) == 0);
  REQUIRE(first.reports.size() == 2);
  const auto& r = first.reports[0];
  CHECK(r.expected_loss.size() == 12);
  CHECK(r.cum_regret.back() == doctest::Approx(r.regret()));
  CHECK(r.switch_cost.front() == 0.0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("surrogate is loss plus weighted switching") {
  auto c = parse_config(kSmall);
  const auto result = run_experiment(c, false);
  for (const auto& r : result.reports) {
    CHECK(r.surrogate.back() == doctest::Approx(r.expected_total() + r.switching_weight * r.switching_total()));
  }
}

TEST_CASE("out-of-range optimism is refused") {
  std::string text = R"(
[experiment]
rounds = 5
[environment]
kind = "circle"
width = 4
height = 3
[losses]
scheme = "swap"
period = 2
[[learner]]
algorithm = "optimistic-codoreps"
optimism = "double-loss"
)";
  const auto c = parse_config(text);
  try {
    run_experiment(c, false);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("OptimismRangeViolated") != std::string::npos);
  }
}

TEST_CASE("MDP documents round-trip") {
  const auto mdp = build_loopfree_grid({3, 3, 0.1, GridVariant::LoopFree, 0.0});
  const auto back = mdp_from_json(mdp_to_json(mdp));
  CHECK(back.num_states() == mdp.num_states());
  CHECK(back.layer_count() == mdp.layer_count());
  CHECK(mdp_to_json(back) == mdp_to_json(mdp));
  CHECK_THROWS_AS(mdp_from_json("{\"states\": 2}"), Error);
  CHECK_THROWS_AS(mdp_from_json("not json"), Error);
}
