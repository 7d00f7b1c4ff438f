#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "oreps/environments.hpp"
#include "oreps/error.hpp"
#include "oreps/oracles.hpp"

using namespace oreps;

TEST_CASE("barrier oracle reproduces the exponential-weights closed form") {
  auto space = OccupancySpace::loop_free(fixtures::bandit(2), 1e-9);
  const OccupancyMeasure q(1, 2, {0.5, 0.5});
  const std::vector<double> g{0.0, 1.0};
  const double eta[1] = {1.0};
  const auto r = brute_force_projection(q, g, eta, space);
  CHECK(r[0] == doctest::Approx(0.7310585786).epsilon(1e-9));
}

TEST_CASE("barrier oracle agrees with the solver on the capped pair") {
  auto mdp = fixtures::leaky_pair(0.25);
  auto space = OccupancySpace::ssp_capped(mdp, 4.5, 1e-6);
  const auto q = occupancy_of_policy(*mdp, Policy(2, 2, {0.3, 0.7, 0.6, 0.4}));
  const std::vector<double> g{-1.0, 0.2, -0.5, 0.4};
  const double eta[1] = {0.8};
  const auto a = brute_force_projection(q, g, eta, space);
  const auto b = mirror_step(q, g, eta, space).q;
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-7));
  CHECK(mirror_objective(a.values(), q.values(), g, eta) <= mirror_objective(q.values(), q.values(), g, eta));
}

TEST_CASE("pairwise contraction extremes") {
  const std::vector<double> identity{1.0, 0.0, 0.0, 1.0}, rank_one{0.3, 0.7, 0.3, 0.7};
  CHECK(pairwise_contraction(identity, 2) == doctest::Approx(1.0));
  CHECK(pairwise_contraction(rank_one, 2) == doctest::Approx(0.0));
}

TEST_CASE("two-state chain contracts by |1 - a - b| per step") {
  auto mdp = fixtures::flip_chain(0.3, 0.1);
  const Policy stay = Policy::deterministic(2, {0, 0});
  const auto est = contraction_rate(*mdp, std::span<const Policy>(&stay, 1));
  CHECK(est.one_step_factor == doctest::Approx(0.6));
  CHECK(est.one_step_tau == doctest::Approx(-1.0 / std::log(0.6)));
  // k = 1: 1 / 0.4 - 1 = 1.5; k = 2: 2 / (1 - 0.36) - 1 = 2.125
  CHECK(est.multi_step_tau == doctest::Approx(1.5));
}

TEST_CASE("periodic chains never contract in one step") {
  auto mdp = fixtures::flip_chain(0.3, 0.1);
  const Policy flip = Policy::deterministic(2, {1, 1});
  const auto est = contraction_rate(*mdp, std::span<const Policy>(&flip, 1));
  CHECK(est.one_step_factor == doctest::Approx(1.0));
  CHECK(std::isinf(est.one_step_tau));
  CHECK(std::isinf(est.multi_step_tau));
}

TEST_CASE("measured mixing time of the default infinite grid") {
  GridSpec spec;
  spec.variant = GridVariant::Infinite;
  // frozen from an independent numpy computation of the same k-step bound
  CHECK(measured_mixing_time(build_infinite_grid(spec)) == doctest::Approx(94.0).epsilon(1e-3));
}

TEST_CASE("counterexample occupancy gap grows with the chain") {
  for (std::size_t c : {1, 3}) {
    const auto r = ssp_counterexample(c, 2.0);
    CHECK(r.pass);
  }
  CHECK(counterexample_mdp(2).num_states() == 5);
  CHECK_THROWS_AS(ssp_counterexample(0, 2.0), Error);
  CHECK_THROWS_AS(ssp_counterexample(1, 1.0), Error);
  CHECK_THROWS_AS(ssp_counterexample(1, 10.0), Error);
}

TEST_CASE("small oracle suites pass") {
  for (const auto& r : check_projection_suite(4, 3)) CHECK_MESSAGE(r.pass, r.name << " " << r.max_violation);
  CHECK(check_round_trip(30, 3).pass);
  CHECK(check_pathlength_loopfree(40, 3).pass);
  CHECK(check_pathlength_infinite(10, 3).pass);
  CHECK(check_reduction({2, 30, 10, 4, 3}).pass);
}

TEST_CASE("summary document lists every result") {
  std::vector<OracleResult> rs{{"a", 1, 0.0, 1.0, true, ""}, {"b", 2, 3.0, 1.0, false, "x"}};
  const auto text = oracle_summary_json(rs);
  CHECK(text.find("\"a\"") != std::string::npos);
  CHECK(text.find("\"pass\": false") != std::string::npos);
  CHECK_THROWS_AS(run_suite("nonsense", 0), Error);
}
