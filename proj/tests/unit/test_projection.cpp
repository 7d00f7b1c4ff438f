#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "oreps/error.hpp"
#include "oreps/projection.hpp"
#include "oreps/random.hpp"

using namespace oreps;

TEST_CASE("single-state step is the exponential-weights update") {
  auto space = OccupancySpace::loop_free(fixtures::bandit(3), 1e-12);
  const OccupancyMeasure q(1, 3, {0.2, 0.3, 0.5});
  const LossFunction l(1, 3, {1.0, 0.0, 0.5});
  const double eta = 0.7;
  const auto r = omd_step(q, l, eta, space);
  const double w0 = 0.2 * std::exp(-0.7), w1 = 0.3, w2 = 0.5 * std::exp(-0.35);
  const double z = w0 + w1 + w2;
  CHECK(r.q[0] == doctest::Approx(w0 / z).epsilon(1e-10));
  CHECK(r.q[1] == doctest::Approx(w1 / z).epsilon(1e-10));
  CHECK(r.q[2] == doctest::Approx(w2 / z).epsilon(1e-10));
  CHECK(r.certificate.kkt_residual <= 1e-8);
}

TEST_CASE("zero loss leaves an interior point unchanged") {
  auto mdp = fixtures::two_layer();
  auto space = OccupancySpace::loop_free(mdp, 1e-6);
  const auto q = occupancy_of_policy(*mdp, Policy(3, 2, {0.3, 0.7, 0.6, 0.4, 0.5, 0.5}));
  const auto r = omd_step(q, LossFunction::zeros(3, 2), 1.0, space);
  for (std::size_t i = 0; i < q.size(); ++i) CHECK(r.q[i] == doctest::Approx(q[i]).epsilon(1e-9));
}

TEST_CASE("lower bound becomes active under a large step") {
  auto space = OccupancySpace::loop_free(fixtures::bandit(2), 0.05);
  const OccupancyMeasure q(1, 2, {0.5, 0.5});
  const auto r = omd_step(q, LossFunction(1, 2, {1.0, 0.0}), 50.0, space);
  CHECK(r.q[0] == doctest::Approx(0.05));
  CHECK(r.q[1] == doctest::Approx(0.95));
  CHECK(r.certificate.active_constraints.size() == 1);
}

TEST_CASE("infeasible floors are reported") {
  CHECK_THROWS_AS(OccupancySpace::loop_free(fixtures::bandit(2), 0.6), Error);
  CHECK_THROWS_AS(OccupancySpace::ssp_capped(fixtures::leaky_pair(0.5), 1.0, 0.1), Error);
}

TEST_CASE("SSP cap binds when the loss rewards long episodes") {
  // action 0 exits w.p. 0.5, action 1 w.p. 0.1
  std::vector<std::vector<Transition>> kernel{{{0, 0.5}, {kGoal, 0.5}}, {{0, 0.9}, {kGoal, 0.1}}};
  auto mdp = std::make_shared<const MdpModel>(1, 2, kernel, 0, SspVariant{});
  auto space = OccupancySpace::ssp_capped(mdp, 4.5, 1e-6);
  const auto q = occupancy_of_policy(*mdp, Policy::uniform(1, 2));  // mass 1 / 0.3
  const std::vector<double> g{-1.0, -1.0};
  const double eta[1] = {1.0};
  const auto r = mirror_step(q, g, eta, space);
  CHECK(r.q.total_mass() == doctest::Approx(4.5).epsilon(1e-9));
  CHECK(r.certificate.cap_active);
  CHECK(space.violation(r.q.values()) <= 1e-9);
}

TEST_CASE("stationarity is preserved on the infinite-horizon polytope") {
  auto mdp = fixtures::flip_chain(0.3, 0.1);
  auto space = OccupancySpace::infinite(mdp, 1e-6);
  const auto q = occupancy_of_policy(*mdp, Policy::uniform(2, 2));
  const auto r = omd_step(q, LossFunction(2, 2, {0.9, 0.1, 0.2, 0.6}), 2.0, space);
  CHECK(r.q.total_mass() == doctest::Approx(1.0));
  CHECK(space.violation(r.q.values()) <= 1e-9);
  CHECK(r.certificate.kkt_residual <= 1e-8);
}

TEST_CASE("steps on random losses stay feasible with small KKT residual") {
  auto mdp = fixtures::two_layer();
  auto space = OccupancySpace::loop_free(mdp, 1e-4);
  Rng rng(11);
  auto q = min_entropy_point(space).q;
  for (int k = 0; k < 50; ++k) {
    std::vector<double> l(6);
    for (auto& v : l) v = uniform01(rng);
    auto r = omd_step(q, LossFunction(3, 2, l), 0.5 + uniform01(rng), space);
    CHECK(space.violation(r.q.values()) <= 1e-9);
    CHECK(r.certificate.kkt_residual <= 1e-8);
    q = r.q;
  }
}

TEST_CASE("correction term is 32 eta (l - m)^2") {
  const std::vector<double> l{1.0, 0.5}, m{0.0, 0.5};
  const double eta[1] = {1.0 / 64.0};
  const auto a = correction_term(l, m, eta);
  CHECK(a[0] == doctest::Approx(0.5));
  CHECK(a[1] == doctest::Approx(0.0));
  const std::vector<double> far{1.0, 0.0}, near{0.0, 1.0};
  const double big[1] = {0.05};
  CHECK_THROWS_AS(correction_term(far, near, big), Error);
}

TEST_CASE("optimistic step with zero hint plays q_hat") {
  auto space = OccupancySpace::loop_free(fixtures::bandit(2), 1e-9);
  const OccupancyMeasure q(1, 2, {0.4, 0.6});
  const auto r = optimistic_omd_step(q, LossFunction::zeros(1, 2), LossFunction(1, 2, {1.0, 0.0}), 0.3, space);
  CHECK(r.play.q[0] == doctest::Approx(0.4));
  CHECK(r.next.q[0] < 0.4);
}

TEST_CASE("simplex step closed form") {
  const std::vector<double> p{0.5, 0.5}, g{0.0, 1.0};
  const auto next = weighted_simplex_step(p, g, EntropyRegularizer::plain());
  CHECK(next[0] == doctest::Approx(0.7310585786));
  CHECK(next[1] == doctest::Approx(0.2689414214));
}

TEST_CASE("weighted simplex step uses per-coordinate rates") {
  const std::vector<double> p{0.5, 0.5};
  const auto flat = weighted_simplex_step(p, std::vector<double>{1.0, 1.0}, EntropyRegularizer::weighted({1.0, 2.0}));
  CHECK(flat[0] == doctest::Approx(0.5));
  const auto next = weighted_simplex_step(p, std::vector<double>{1.0, 0.0}, EntropyRegularizer::weighted({1.0, 2.0}));
  // 0.5 exp(-(1 + nu)) + 0.5 exp(-2 nu) = 1
  const double nu = -std::log((-std::exp(-1.0) + std::sqrt(std::exp(-2.0) + 8.0)) / 2.0);
  CHECK(next[0] == doctest::Approx(0.5 * std::exp(-(1.0 + nu))).epsilon(1e-9));
  CHECK(next[0] + next[1] == doctest::Approx(1.0));
}

TEST_CASE("shifted entropy divergence vanishes on the diagonal") {
  const std::vector<double> u{0.2, 0.8};
  CHECK(EntropyRegularizer::shifted().divergence(u, u) == doctest::Approx(0.0));
  CHECK(EntropyRegularizer::plain().divergence(u, std::vector<double>{0.5, 0.5}) > 0.0);
}

TEST_CASE("certified SSP mass admits a feasible cap") {
  auto mdp = fixtures::leaky_pair(0.25);
  const double m = ssp_certified_min_mass(*mdp, 0.01);
  CHECK_NOTHROW(OccupancySpace::ssp_capped(mdp, m, 0.01));
}
