#include <doctest.h>

#include <cstdlib>
#include <set>

#include "oreps/environments.hpp"
#include "oreps/error.hpp"

using namespace oreps;

TEST_CASE("loop-free grid sizes") {
  const auto mdp = build_loopfree_grid({});
  CHECK(mdp.num_states() == 99);
  CHECK(mdp.num_actions() == 2);
  CHECK(mdp.layer_count() == 18);
  GridSpec tiny;
  tiny.width = 2;
  tiny.height = 2;
  CHECK(build_loopfree_grid(tiny).num_states() == 3);
}

TEST_CASE("loop-free grid moves only to the next layer") {
  const auto mdp = build_loopfree_grid({});
  for (std::size_t x = 0; x < mdp.num_states(); ++x) {
    for (std::size_t a = 0; a < 2; ++a) {
      for (const auto& t : mdp.successors(x, a)) {
        if (t.next == kGoal) {
          CHECK(mdp.layer_of(x) + 1 == mdp.layer_count());
        } else {
          CHECK(mdp.layer_of(static_cast<std::size_t>(t.next)) == mdp.layer_of(x) + 1);
        }
      }
    }
  }
}

TEST_CASE("circle tour is a closed walk through every cell") {
  GridSpec spec;
  spec.variant = GridVariant::CircleSsp;
  const auto tour = circle_tour(spec);
  REQUIRE(tour.size() == 100);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (std::size_t i = 0; i < tour.size(); ++i) {
    const auto& a = tour[i];
    const auto& b = tour[(i + 1) % tour.size()];
    const auto step = std::labs(static_cast<long>(a.col) - static_cast<long>(b.col)) +
                      std::labs(static_cast<long>(a.row) - static_cast<long>(b.row));
    CHECK(step == 1);
    seen.insert({a.col, a.row});
  }
  CHECK(seen.size() == 100);
  CHECK(tour.front() == Cell{0, 0});
  CHECK(build_circle_ssp(spec).num_states() == 99);
}

TEST_CASE("every circle policy is proper") {
  GridSpec spec;
  spec.variant = GridVariant::CircleSsp;
  const auto mdp = build_circle_ssp(spec);
  const std::vector<std::size_t> forward(mdp.num_states(), kForward), backward(mdp.num_states(), kBackward);
  const auto h_forward = hitting_time(mdp, Policy::deterministic(2, forward));
  const auto h_backward = hitting_time(mdp, Policy::deterministic(2, backward));
  CHECK(h_forward[0] < h_backward[0]);
  CHECK(std::isfinite(h_backward[0]));
}

TEST_CASE("infinite grid is ergodic") {
  GridSpec spec;
  spec.variant = GridVariant::Infinite;
  const auto mdp = build_infinite_grid(spec);
  CHECK(mdp.num_states() == 100);
  CHECK(mdp.num_actions() == 4);
  CHECK(is_ergodic(mdp));
}

TEST_CASE("degenerate grids are rejected") {
  GridSpec spec;
  spec.width = 1;
  spec.height = 1;
  CHECK_THROWS_AS(build_loopfree_grid(spec), Error);
  spec.slip = 1.5;
  spec.width = 3;
  CHECK_THROWS_AS(build_loopfree_grid(spec), Error);
}

TEST_CASE("losses are binary and constant within a piece") {
  const auto mdp = build_loopfree_grid({});
  const auto losses = piecewise_losses(mdp, {10, LossScheme::RandomActionPerState, 5}, 30);
  REQUIRE(losses.size() == 30);
  for (std::size_t k = 0; k < 30; ++k) {
    for (std::size_t i = 0; i < losses[k].size(); ++i) {
      CHECK((losses[k][i] == 0.0 || losses[k][i] == 1.0));
      if (k % 10 != 0) CHECK(losses[k][i] == losses[k - 1][i]);
    }
  }
  // one zero-loss action per state
  for (std::size_t x = 0; x < mdp.num_states(); ++x) CHECK(losses[0](x, 0) + losses[0](x, 1) == 1.0);
}

TEST_CASE("swap scheme alternates the free direction") {
  GridSpec spec;
  spec.variant = GridVariant::CircleSsp;
  const auto mdp = build_circle_ssp(spec);
  const auto losses = piecewise_losses(mdp, {5, LossScheme::SwapGlobal, 1}, 10);
  CHECK(losses[0](3, kForward) != losses[5](3, kForward));
  CHECK(losses[0](3, kForward) + losses[0](3, kBackward) == 1.0);
}

TEST_CASE("loss schedules are reproducible") {
  const auto mdp = build_loopfree_grid({});
  const auto a = piecewise_losses(mdp, {7, LossScheme::StationaryBernoulli, 9}, 20);
  const auto b = piecewise_losses(mdp, {7, LossScheme::StationaryBernoulli, 9}, 20);
  for (std::size_t k = 0; k < 20; ++k) CHECK(a[k].values() == b[k].values());
}

TEST_CASE("rollouts on the loop-free grid last exactly H steps") {
  const auto mdp = build_loopfree_grid({});
  const auto loss = LossFunction::zeros(mdp.num_states(), 2);
  Rng rng(4);
  const auto traj = rollout(mdp, Policy::uniform(mdp.num_states(), 2), loss, rng);
  CHECK(traj.steps.size() == 18);
  CHECK(traj.reached_goal);
}

TEST_CASE("infinite rollouts run the requested number of steps") {
  GridSpec spec;
  spec.variant = GridVariant::Infinite;
  const auto mdp = build_infinite_grid(spec);
  Rng rng(4);
  const auto traj = rollout(mdp, Policy::uniform(100, 4), LossFunction::zeros(100, 4), rng, 25);
  CHECK(traj.steps.size() == 25);
  CHECK_FALSE(traj.reached_goal);
}
