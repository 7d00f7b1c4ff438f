#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "oreps/environments.hpp"
#include "oreps/learners.hpp"
#include "oreps/mdp.hpp"

namespace oreps {

// ---------------------------------------------------------------- comparators

struct ComparatorSpec {
  enum class Kind { FixedBestInHindsight, PiecewiseBest, Explicit };
  Kind kind = Kind::PiecewiseBest;
  std::size_t period = 1;
  std::vector<Policy> policies;  // Explicit only, one per round
};

/// Deterministic policy minimizing sum_k <q^pi, l_k>. Loop-free: backward induction over layers.
/// SSP: policy iteration over proper policies. Infinite-horizon: average-cost policy iteration.
/// An all-zero summed loss returns the policy induced by the min-entropy point.
Policy best_fixed_comparator(const MdpModel& mdp, std::span<const LossFunction> losses);

std::vector<Policy> piecewise_comparator(const MdpModel& mdp, std::span<const LossFunction> losses,
                                         std::size_t period);

std::vector<Policy> comparator_sequence(const MdpModel& mdp, std::span<const LossFunction> losses,
                                        const ComparatorSpec& spec);

// ---------------------------------------------------------------- configuration

struct EnvironmentConfig {
  GridSpec grid;
  std::optional<std::string> mdp_path;  // JSON model instead of a grid
  bool tau_measured = false;            // replace the mixing time by the uniform-policy estimate
};

enum class OptimismSource { None, Loss, DoubleLoss };

struct LearnerEntry {
  std::string label;
  LearnerConfig config;
  OptimismSource optimism = OptimismSource::None;
};

struct ExperimentConfig {
  std::string name = "experiment";
  EnvironmentConfig environment;
  LossSchedule losses;
  std::size_t rounds = 0;
  std::size_t repeats = 1;
  std::uint64_t seed = 0;
  ComparatorSpec comparator;
  std::vector<LearnerEntry> learners;
  std::string output_dir = ".";
  bool write_svg = true;
  std::size_t step_budget = 1'000'000;
  std::size_t threads = 0;  // 0: OREPS_THREADS, else 1
};

ExperimentConfig parse_config(std::string_view toml_text, const std::string& source_name = "<config>");
ExperimentConfig load_config(const std::string& path);

/// Builds the configured MDP, resolving a measured mixing time if requested.
MdpModel build_environment(const EnvironmentConfig& env);

// ---------------------------------------------------------------- reports

struct RegretReport {
  std::string learner;
  Algorithm algorithm = Algorithm::DoReps;

  // Per round, averaged over learner runs (sampling learners run once per repeat).
  std::vector<double> expected_loss;
  std::vector<double> realized_mean;
  std::vector<double> realized_std;
  std::vector<double> comparator_loss;
  std::vector<double> switch_cost;  // ||q_t - q_{t-1}||_1, 0 in the first round
  // Running sums.
  std::vector<double> cum_regret;
  std::vector<double> surrogate;

  double tau = 0.0;
  double switching_weight = 1.0;   // tau + 1
  double path_length = 0.0;        // comparator policies
  double occupancy_path_length = 0.0;
  double comparator_total = 0.0;   // B_K
  std::optional<double> max_hitting;  // H_* (SSP)
  std::optional<double> optimism_variation;  // V_K
  double realized_total_mean = 0.0;
  double realized_total_std = 0.0;
  std::optional<double> reduction;  // right-hand side of the reduction (infinite-horizon)

  double expected_total() const;
  double regret() const;
  double switching_total() const;
};

/// sum <q_t - q^c_t, l_t> + (tau+1) sum ||q_t - q_{t-1}||_1 + (tau+1)^2 P + 4 (tau+1).
double reduction_rhs(const RegretReport& report, double tau);

struct ExperimentResult {
  std::vector<RegretReport> reports;
  std::vector<std::string> files;
};

ExperimentResult run_experiment(const ExperimentConfig& config, bool write_files = true);

std::string per_round_csv(const std::vector<RegretReport>& reports);
std::string summary_csv(const std::vector<RegretReport>& reports);
std::string cumulative_svg(const std::vector<RegretReport>& reports, const std::string& title);

// ---------------------------------------------------------------- MDP documents

/// {"states", "actions", "initial", "variant": {"kind", ...}, "transitions": [[x, a, x', p], ...]}
/// with x' = -1 for the goal.
std::string mdp_to_json(const MdpModel& mdp);
MdpModel mdp_from_json(std::string_view text);

}  // namespace oreps
