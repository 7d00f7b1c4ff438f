#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "oreps/error.hpp"
#include "oreps/mdp.hpp"

using namespace oreps;

TEST_CASE("loss entries outside [0,1] are rejected") {
  CHECK_THROWS_AS(LossFunction(1, 2, {0.5, 1.5}), Error);
  CHECK_THROWS_AS(LossFunction(1, 2, {-0.1, 0.5}), Error);
  CHECK_NOTHROW(LossFunction(1, 2, {0.0, 1.0}));
}

TEST_CASE("kernel rows must be distributions") {
  std::vector<std::vector<Transition>> kernel{{{kGoal, 0.7}}, {{kGoal, 1.0}}};
  CHECK_THROWS_AS(MdpModel(1, 2, kernel, 0, LoopFreeVariant{{{0}}}), Error);
}

TEST_CASE("occupancy of a two-layer model by hand") {
  auto mdp = fixtures::two_layer();
  const Policy pi(3, 2, {0.25, 0.75, 0.5, 0.5, 1.0, 0.0});
  const auto q = occupancy_of_policy(*mdp, pi);
  // x0 mass 1; x1 reached w.p. 0.25*0.8 + 0.75*0.3 = 0.425
  CHECK(q(0, 0) == doctest::Approx(0.25));
  CHECK(q(0, 1) == doctest::Approx(0.75));
  CHECK(q(1, 0) == doctest::Approx(0.2125));
  CHECK(q(1, 1) == doctest::Approx(0.2125));
  CHECK(q(2, 0) == doctest::Approx(0.575));
  CHECK(q(2, 1) == doctest::Approx(0.0));
  CHECK(q.total_mass() == doctest::Approx(2.0));
}

TEST_CASE("induced policy inverts the occupancy map on reached states") {
  auto mdp = fixtures::two_layer();
  const Policy pi(3, 2, {0.1, 0.9, 0.6, 0.4, 0.3, 0.7});
  const auto back = induced_policy(occupancy_of_policy(*mdp, pi));
  for (std::size_t i = 0; i < pi.size(); ++i) CHECK(back[i] == doctest::Approx(pi[i]).epsilon(1e-12));
}

TEST_CASE("unreached states get the uniform row") {
  const OccupancyMeasure q(2, 2, {1.0, 0.0, 0.0, 0.0});
  const auto pi = induced_policy(q);
  CHECK(pi(1, 0) == doctest::Approx(0.5));
  CHECK(pi(1, 1) == doctest::Approx(0.5));
}

TEST_CASE("geometric exit gives hitting time 1/p") {
  auto mdp = fixtures::leaky_pair(0.5);
  const auto h = hitting_time(*mdp, Policy::uniform(2, 2));
  CHECK(h[0] == doctest::Approx(2.0));
  CHECK(h[1] == doctest::Approx(2.0));
  CHECK(occupancy_of_policy(*mdp, Policy::uniform(2, 2)).total_mass() == doctest::Approx(2.0));
}

TEST_CASE("improper policies have infinite hitting time") {
  std::vector<std::vector<Transition>> kernel{{{kGoal, 1.0}}, {{0, 1.0}}};
  const MdpModel mdp(1, 2, kernel, 0, SspVariant{});
  const auto h = hitting_time(mdp, Policy::deterministic(2, {1}));
  CHECK(std::isinf(h[0]));
  CHECK_THROWS_AS(occupancy_of_policy(mdp, Policy::deterministic(2, {1})), Error);
}

TEST_CASE("fast policy picks the shortcut") {
  std::vector<std::vector<Transition>> kernel{{{1, 1.0}}, {{kGoal, 1.0}}, {{kGoal, 1.0}}, {{kGoal, 1.0}}};
  const MdpModel mdp(2, 2, kernel, 0, SspVariant{});
  const auto fast = fast_policy(mdp);
  CHECK(fast.policy(0, 1) == doctest::Approx(1.0));
  CHECK(fast.diameter == doctest::Approx(1.0));
}

TEST_CASE("two-state stationary distribution has the closed form") {
  const double a = 0.3, b = 0.1;
  auto mdp = fixtures::flip_chain(a, b);
  const auto d = stationary_distribution(*mdp, Policy::deterministic(2, {0, 0}));
  CHECK(d[0] == doctest::Approx(b / (a + b)).epsilon(1e-10));
  CHECK(d[1] == doctest::Approx(a / (a + b)).epsilon(1e-10));
}

TEST_CASE("distances and path lengths") {
  const Policy p(2, 2, {1.0, 0.0, 0.5, 0.5});
  const Policy r(2, 2, {0.0, 1.0, 0.5, 0.5});
  CHECK(policy_distance(p, r) == doctest::Approx(2.0));
  const std::vector<std::size_t> second{1};
  CHECK(policy_distance(p, r, second) == doctest::Approx(0.0));
  const std::vector<Policy> seq{p, r, p};
  CHECK(path_length_policies(seq) == doctest::Approx(4.0));
  const std::vector<std::vector<std::size_t>> layers{{0}, {1}};
  CHECK(path_length_policies(seq, &layers) == doctest::Approx(4.0));
  CHECK(l1_distance(p, r) == doctest::Approx(2.0));
  CHECK(inner(p, r) == doctest::Approx(0.5));
}

TEST_CASE("occupancy path length never exceeds H times the layered policy path length") {
  auto mdp = fixtures::two_layer();
  const std::vector<Policy> seq{Policy(3, 2, {0.2, 0.8, 0.5, 0.5, 0.9, 0.1}),
                                Policy(3, 2, {0.7, 0.3, 0.1, 0.9, 0.4, 0.6}),
                                Policy(3, 2, {0.5, 0.5, 0.5, 0.5, 0.5, 0.5})};
  std::vector<OccupancyMeasure> occ;
  for (const auto& pi : seq) occ.push_back(occupancy_of_policy(*mdp, pi));
  CHECK(path_length_occupancy(occ) <= 2.0 * path_length_policies(seq, &mdp->layers()) + 1e-12);
}

TEST_CASE("layer queries") {
  auto mdp = fixtures::two_layer();
  CHECK(mdp->setting() == Setting::LoopFree);
  CHECK(mdp->layer_count() == 2);
  CHECK(mdp->layer_of(2) == 1);
  CHECK_THROWS_AS(fixtures::leaky_pair()->layers(), Error);
}
