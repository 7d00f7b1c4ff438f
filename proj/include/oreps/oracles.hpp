#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "oreps/mdp.hpp"
#include "oreps/projection.hpp"
#include "oreps/random.hpp"

namespace oreps {

struct OracleResult {
  std::string name;
  std::size_t instances = 0;
  double max_violation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;

  void finish() { pass = max_violation <= tolerance; }
};

std::string oracle_summary_json(const std::vector<OracleResult>& results);

// ---------------------------------------------------------------- projection oracle

/// Objective <q, eta o g> + sum [q log(q / q_prev) - q + q_prev].
double mirror_objective(std::span<const double> q, std::span<const double> q_prev, std::span<const double> gradient,
                        std::span<const double> eta);

/// Independent minimizer of the mirror objective over the space: primal log-barrier Newton in
/// the null space of the equality rows, for instances with at most a few dozen variables.
OccupancyMeasure brute_force_projection(const OccupancyMeasure& q_prev, std::span<const double> gradient,
                                        std::span<const double> eta, const OccupancySpace& space);

// ---------------------------------------------------------------- mixing

/// max over state pairs of ||(e_i - e_j) M||_1 / 2 for a row-stochastic M (row-major, n x n).
double pairwise_contraction(std::span<const double> matrix, std::size_t n);

/// Dense P^pi over the non-goal states.
std::vector<double> policy_matrix(const MdpModel& mdp, const Policy& pi);

struct ContractionEstimate {
  double one_step_factor = 0.0;  // largest one-step factor over the policies
  double one_step_tau = 0.0;     // -1 / log(factor); kInfinity when a factor reaches 1
  double multi_step_tau = 0.0;   // min over k = 2^j of k / (1 - beta_k) - 1, max over policies
};

/// One-step and k-step contraction of the given policies' chains. The k-step bound gives
/// ||d^pi - d^pi'||_1 <= (tau + 1) ||pi - pi'||_{1,inf} even when single steps do not contract.
ContractionEstimate contraction_rate(const MdpModel& mdp, std::span<const Policy> policies,
                                     std::size_t max_power = 1024);

/// Multi-step estimate for the uniform policy; used when a config asks for a measured tau.
double measured_mixing_time(const MdpModel& mdp);

Policy random_policy(std::size_t num_states, std::size_t num_actions, Rng& rng);

// ---------------------------------------------------------------- bound suites

OracleResult check_pathlength_loopfree(std::size_t trials, std::uint64_t seed);
OracleResult check_pathlength_infinite(std::size_t trials, std::uint64_t seed);

/// Two-action instance: a1 at x0 reaches the goal, a2 enters a chain of 2c states.
MdpModel counterexample_mdp(std::size_t c);
OracleResult ssp_counterexample(std::size_t c, double h_star);

struct ReductionOptions {
  std::size_t seeds = 100;
  std::size_t steps = 100;
  std::size_t period = 20;
  std::size_t rollouts = 10;
  std::uint64_t seed = 0;
};

OracleResult check_reduction(const ReductionOptions& options);

/// Oracle agreement (L-inf, 1e-6) and solver KKT residuals (1e-8) on random small instances.
std::vector<OracleResult> check_projection_suite(std::size_t instances_per_family, std::uint64_t seed);
OracleResult check_projection_oracle(std::size_t instances_per_family, std::uint64_t seed);
OracleResult check_round_trip(std::size_t points, std::uint64_t seed);

/// Named suites for the CLI: "projection", "roundtrip", "pathlength", "reduction",
/// "counterexample", or "all".
std::vector<OracleResult> run_suite(const std::string& name, std::uint64_t seed);

}  // namespace oreps
