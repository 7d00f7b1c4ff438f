#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "oreps/error.hpp"

namespace oreps {

enum class Setting { LoopFree, Ssp, InfiniteHorizon };

/// Successor index used for the absorbing goal state, which is not part of X.
inline constexpr int kGoal = -1;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct Transition {
  int next;
  double prob;
};

struct LoopFreeVariant {
  std::vector<std::vector<std::size_t>> layers;
};

struct SspVariant {};

struct InfiniteHorizonVariant {
  double mixing_time = 0.0;
};

using Variant = std::variant<LoopFreeVariant, SspVariant, InfiniteHorizonVariant>;

class MdpModel {
 public:
  /// `kernel` holds one successor list per (x, a) pair, indexed x * num_actions + a.
  MdpModel(std::size_t num_states, std::size_t num_actions,
           std::vector<std::vector<Transition>> kernel, std::size_t initial_state,
           Variant variant);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  std::size_t num_pairs() const { return num_states_ * num_actions_; }
  std::size_t pair(std::size_t x, std::size_t a) const { return x * num_actions_ + a; }
  std::size_t initial_state() const { return initial_; }

  const std::vector<Transition>& successors(std::size_t x, std::size_t a) const {
    return kernel_[pair(x, a)];
  }
  const std::vector<Transition>& successors(std::size_t pair_index) const {
    return kernel_[pair_index];
  }

  Setting setting() const;
  const Variant& variant() const { return variant_; }
  bool has_goal() const { return setting() != Setting::InfiniteHorizon; }

  // Loop-free only.
  const std::vector<std::vector<std::size_t>>& layers() const;
  std::size_t layer_count() const;
  std::size_t layer_of(std::size_t x) const { return layer_of_.at(x); }

  // Infinite-horizon only.
  double mixing_time() const;
  MdpModel with_mixing_time(double tau) const;

 private:
  void validate();

  std::size_t num_states_;
  std::size_t num_actions_;
  std::vector<std::vector<Transition>> kernel_;
  std::size_t initial_;
  Variant variant_;
  std::vector<std::size_t> layer_of_;
};

/// Dense table over state-action pairs, row-major in the state.
class PairTable {
 public:
  PairTable() = default;
  PairTable(std::size_t num_states, std::size_t num_actions, std::vector<double> values);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  std::size_t size() const { return values_.size(); }

  double operator()(std::size_t x, std::size_t a) const { return values_[x * num_actions_ + a]; }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const { return values_; }

  bool same_shape(const PairTable& other) const {
    return num_states_ == other.num_states_ && num_actions_ == other.num_actions_;
  }

 protected:
  std::size_t num_states_ = 0;
  std::size_t num_actions_ = 0;
  std::vector<double> values_;
};

class LossFunction : public PairTable {
 public:
  LossFunction() = default;
  LossFunction(std::size_t num_states, std::size_t num_actions, std::vector<double> values);
  static LossFunction zeros(std::size_t num_states, std::size_t num_actions);
};

class Policy : public PairTable {
 public:
  Policy() = default;
  Policy(std::size_t num_states, std::size_t num_actions, std::vector<double> probs);
  static Policy uniform(std::size_t num_states, std::size_t num_actions);
  static Policy deterministic(std::size_t num_actions, const std::vector<std::size_t>& choice);

  std::span<const double> row(std::size_t x) const {
    return {values_.data() + x * num_actions_, num_actions_};
  }
};

class OccupancyMeasure : public PairTable {
 public:
  OccupancyMeasure() = default;
  OccupancyMeasure(std::size_t num_states, std::size_t num_actions, std::vector<double> q);

  double total_mass() const;
  double state_mass(std::size_t x) const;
};

struct TrajectoryStep {
  std::size_t state;
  std::size_t action;
  double loss;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  bool reached_goal = false;
  bool budget_exhausted = false;

  double total_loss() const;
};

// ---- maps between policies and occupancy measures ----

Policy induced_policy(const OccupancyMeasure& q);

OccupancyMeasure occupancy_of_policy(const MdpModel& mdp, const Policy& pi);

/// Expected steps to the goal from every state; kInfinity where the goal is not reached a.s.
std::vector<double> hitting_time(const MdpModel& mdp, const Policy& pi);

struct FastPolicyResult {
  Policy policy;
  double diameter;
  std::vector<double> hitting;
};

FastPolicyResult fast_policy(const MdpModel& mdp);

/// Stationary state distribution of P^pi (infinite-horizon).
std::vector<double> stationary_distribution(const MdpModel& mdp, const Policy& pi);

// ---- distances and path lengths ----

double inner(const PairTable& lhs, const PairTable& rhs);
double l1_distance(const PairTable& lhs, const PairTable& rhs);

/// max_x ||pi(.|x) - pi'(.|x)||_1, optionally restricted to a subset of states.
double policy_distance(const Policy& lhs, const Policy& rhs);
double policy_distance(const Policy& lhs, const Policy& rhs, std::span<const std::size_t> states);

/// Sum of consecutive policy distances. With `layers`, the per-step distance is summed
/// over layers of per-layer maxima.
double path_length_policies(std::span<const Policy> seq,
                            const std::vector<std::vector<std::size_t>>* layers = nullptr);

double path_length_occupancy(std::span<const OccupancyMeasure> seq);

}  // namespace oreps
