#include "oreps/mdp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <string>

namespace oreps {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NegativeEntry: return "NegativeEntry";
    case ErrorCode::ImproperPolicy: return "ImproperPolicy";
    case ErrorCode::NonConvergent: return "NonConvergent";
    case ErrorCode::NoProperPolicy: return "NoProperPolicy";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InfeasibleSpace: return "InfeasibleSpace";
    case ErrorCode::CorrectionRangeViolated: return "CorrectionRangeViolated";
    case ErrorCode::OptimismRangeViolated: return "OptimismRangeViolated";
    case ErrorCode::DegenerateInputs: return "DegenerateInputs";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::MissingColumns: return "MissingColumns";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

namespace {

constexpr double kRowTolerance = 1e-12;
constexpr std::size_t kDenseSolveLimit = 2000;
constexpr double kPowerTolerance = 1e-12;
constexpr std::size_t kPowerBudget = 1'000'000;

void require_shape(const PairTable& lhs, const PairTable& rhs) {
  if (!lhs.same_shape(rhs)) throw Error(ErrorCode::ShapeMismatch, "state-action tables differ in shape");
}

// Forward reachability from `start` under the support of pi.
std::vector<char> reachable_from(const MdpModel& mdp, const Policy& pi, std::size_t start) {
  std::vector<char> seen(mdp.num_states(), 0);
  std::deque<std::size_t> queue{start};
  seen[start] = 1;
  while (!queue.empty()) {
    std::size_t x = queue.front();
    queue.pop_front();
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      if (pi(x, a) <= 0.0) continue;
      for (const auto& t : mdp.successors(x, a)) {
        if (t.next == kGoal || t.prob <= 0.0) continue;
        auto y = static_cast<std::size_t>(t.next);
        if (!seen[y]) {
          seen[y] = 1;
          queue.push_back(y);
        }
      }
    }
  }
  return seen;
}

// States whose hitting time under pi is finite: those that cannot reach a state from
// which the goal is unreachable.
std::vector<char> finite_hitting_states(const MdpModel& mdp, const Policy& pi) {
  const std::size_t n = mdp.num_states();
  std::vector<std::vector<std::size_t>> reverse(n);
  std::vector<char> goal_reached(n, 0);
  std::deque<std::size_t> queue;
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      if (pi(x, a) <= 0.0) continue;
      for (const auto& t : mdp.successors(x, a)) {
        if (t.prob <= 0.0) continue;
        if (t.next == kGoal) {
          if (!goal_reached[x]) {
            goal_reached[x] = 1;
            queue.push_back(x);
          }
        } else {
          reverse[static_cast<std::size_t>(t.next)].push_back(x);
        }
      }
    }
  }
  while (!queue.empty()) {
    std::size_t y = queue.front();
    queue.pop_front();
    for (std::size_t x : reverse[y]) {
      if (!goal_reached[x]) {
        goal_reached[x] = 1;
        queue.push_back(x);
      }
    }
  }
  // Anything that can reach a dead state is itself infinite.
  std::vector<char> infinite(n, 0);
  for (std::size_t x = 0; x < n; ++x) {
    if (!goal_reached[x]) {
      infinite[x] = 1;
      queue.push_back(x);
    }
  }
  while (!queue.empty()) {
    std::size_t y = queue.front();
    queue.pop_front();
    for (std::size_t x : reverse[y]) {
      if (!infinite[x]) {
        infinite[x] = 1;
        queue.push_back(x);
      }
    }
  }
  std::vector<char> finite(n);
  for (std::size_t x = 0; x < n; ++x) finite[x] = !infinite[x];
  return finite;
}

// Solves (I - P_SS) v = rhs on the index set S (transposed when `transpose`).
Eigen::VectorXd solve_transient(const MdpModel& mdp, const Policy& pi,
                                const std::vector<std::size_t>& subset,
                                const Eigen::VectorXd& rhs, bool transpose) {
  const std::size_t m = subset.size();
  std::vector<long> position(mdp.num_states(), -1);
  for (std::size_t i = 0; i < m; ++i) position[subset[i]] = static_cast<long>(i);

  if (m <= kDenseSolveLimit) {
    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(static_cast<long>(m), static_cast<long>(m));
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t x = subset[i];
      for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
        double pa = pi(x, a);
        if (pa <= 0.0) continue;
        for (const auto& t : mdp.successors(x, a)) {
          if (t.next == kGoal) continue;
          long j = position[static_cast<std::size_t>(t.next)];
          if (j < 0) continue;
          system(static_cast<long>(i), j) -= pa * t.prob;
        }
      }
    }
    if (transpose) system.transposeInPlace();
    return system.partialPivLu().solve(rhs);
  }

  // Neumann series v = rhs + P v (or v = rhs + P^T v).
  Eigen::VectorXd v = rhs;
  for (std::size_t iter = 0; iter < kPowerBudget; ++iter) {
    Eigen::VectorXd next = rhs;
    for (std::size_t i = 0; i < m; ++i) {
      std::size_t x = subset[i];
      for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
        double pa = pi(x, a);
        if (pa <= 0.0) continue;
        for (const auto& t : mdp.successors(x, a)) {
          if (t.next == kGoal) continue;
          long j = position[static_cast<std::size_t>(t.next)];
          if (j < 0) continue;
          if (transpose) {
            next(j) += pa * t.prob * v(static_cast<long>(i));
          } else {
            next(static_cast<long>(i)) += pa * t.prob * v(j);
          }
        }
      }
    }
    double change = (next - v).lpNorm<1>();
    v.swap(next);
    if (change <= kPowerTolerance * std::max(1.0, v.lpNorm<1>())) return v;
  }
  throw Error(ErrorCode::NonConvergent, "Neumann series for visit counts did not converge");
}

}  // namespace

// ---------------------------------------------------------------- MdpModel

MdpModel::MdpModel(std::size_t num_states, std::size_t num_actions,
                   std::vector<std::vector<Transition>> kernel, std::size_t initial_state,
                   Variant variant)
    : num_states_(num_states),
      num_actions_(num_actions),
      kernel_(std::move(kernel)),
      initial_(initial_state),
      variant_(std::move(variant)) {
  validate();
}

Setting MdpModel::setting() const {
  switch (variant_.index()) {
    case 0: return Setting::LoopFree;
    case 1: return Setting::Ssp;
    default: return Setting::InfiniteHorizon;
  }
}

const std::vector<std::vector<std::size_t>>& MdpModel::layers() const {
  const auto* lf = std::get_if<LoopFreeVariant>(&variant_);
  if (lf == nullptr) throw Error(ErrorCode::InvalidParams, "layers requested on a non loop-free MDP");
  return lf->layers;
}

std::size_t MdpModel::layer_count() const { return layers().size(); }

double MdpModel::mixing_time() const {
  const auto* ih = std::get_if<InfiniteHorizonVariant>(&variant_);
  if (ih == nullptr) throw Error(ErrorCode::InvalidParams, "mixing time requested on an episodic MDP");
  return ih->mixing_time;
}

MdpModel MdpModel::with_mixing_time(double tau) const {
  if (setting() != Setting::InfiniteHorizon) {
    throw Error(ErrorCode::InvalidParams, "mixing time only applies to infinite-horizon MDPs");
  }
  return MdpModel(num_states_, num_actions_, kernel_, initial_, InfiniteHorizonVariant{tau});
}

void MdpModel::validate() {
  if (num_states_ == 0 || num_actions_ == 0) throw Error(ErrorCode::InvalidModel, "empty state or action set");
  if (kernel_.size() != num_pairs()) throw Error(ErrorCode::InvalidModel, "kernel size is not |X||A|");
  if (initial_ >= num_states_) throw Error(ErrorCode::InvalidModel, "initial state out of range");

  const bool goal_allowed = setting() != Setting::InfiniteHorizon;
  for (std::size_t i = 0; i < kernel_.size(); ++i) {
    double sum = 0.0;
    for (const auto& t : kernel_[i]) {
      if (!(t.prob >= 0.0) || !std::isfinite(t.prob)) {
        throw Error(ErrorCode::InvalidModel, "negative or non-finite transition probability");
      }
      if (t.next == kGoal) {
        if (!goal_allowed) throw Error(ErrorCode::InvalidModel, "goal transition in an infinite-horizon MDP");
      } else if (t.next < 0 || static_cast<std::size_t>(t.next) >= num_states_) {
        throw Error(ErrorCode::InvalidModel, "successor out of range");
      }
      sum += t.prob;
    }
    if (std::abs(sum - 1.0) > kRowTolerance) {
      throw Error(ErrorCode::InvalidModel, "transition row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
  }

  if (auto* lf = std::get_if<LoopFreeVariant>(&variant_)) {
    const std::size_t unset = static_cast<std::size_t>(-1);
    layer_of_.assign(num_states_, unset);
    if (lf->layers.empty()) throw Error(ErrorCode::InvalidModel, "loop-free MDP without layers");
    for (std::size_t l = 0; l < lf->layers.size(); ++l) {
      if (lf->layers[l].empty()) throw Error(ErrorCode::InvalidModel, "empty layer");
      for (std::size_t x : lf->layers[l]) {
        if (x >= num_states_ || layer_of_[x] != unset) {
          throw Error(ErrorCode::InvalidModel, "layers do not partition the state set");
        }
        layer_of_[x] = l;
      }
    }
    if (std::find(layer_of_.begin(), layer_of_.end(), unset) != layer_of_.end()) {
      throw Error(ErrorCode::InvalidModel, "layers do not cover the state set");
    }
    if (lf->layers[0].size() != 1 || lf->layers[0][0] != initial_) {
      throw Error(ErrorCode::InvalidModel, "first layer must be {x0}");
    }
    const std::size_t last = lf->layers.size() - 1;
    for (std::size_t x = 0; x < num_states_; ++x) {
      for (std::size_t a = 0; a < num_actions_; ++a) {
        for (const auto& t : successors(x, a)) {
          if (t.prob <= 0.0) continue;
          bool ok = (layer_of_[x] == last) ? t.next == kGoal
                                           : (t.next != kGoal && layer_of_[static_cast<std::size_t>(t.next)] == layer_of_[x] + 1);
          if (!ok) throw Error(ErrorCode::InvalidModel, "transition does not advance exactly one layer");
        }
      }
    }
  } else if (std::holds_alternative<SspVariant>(variant_)) {
    // A proper policy exists iff the uniform policy is proper.
    auto finite = finite_hitting_states(*this, Policy::uniform(num_states_, num_actions_));
    if (std::find(finite.begin(), finite.end(), 0) != finite.end()) {
      throw Error(ErrorCode::NoProperPolicy, "some state cannot reach the goal");
    }
  } else {
    double tau = std::get<InfiniteHorizonVariant>(variant_).mixing_time;
    if (!(tau >= 0.0)) throw Error(ErrorCode::InvalidModel, "mixing time must be nonnegative");
  }
}

// ---------------------------------------------------------------- tables

PairTable::PairTable(std::size_t num_states, std::size_t num_actions, std::vector<double> values)
    : num_states_(num_states), num_actions_(num_actions), values_(std::move(values)) {
  if (values_.size() != num_states_ * num_actions_) {
    throw Error(ErrorCode::ShapeMismatch, "table size is not |X||A|");
  }
}

LossFunction::LossFunction(std::size_t num_states, std::size_t num_actions, std::vector<double> values)
    : PairTable(num_states, num_actions, std::move(values)) {
  for (double v : values_) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::InvalidParams, "loss value outside [0,1]");
  }
}

LossFunction LossFunction::zeros(std::size_t num_states, std::size_t num_actions) {
  return LossFunction(num_states, num_actions, std::vector<double>(num_states * num_actions, 0.0));
}

Policy::Policy(std::size_t num_states, std::size_t num_actions, std::vector<double> probs)
    : PairTable(num_states, num_actions, std::move(probs)) {
  for (std::size_t x = 0; x < num_states_; ++x) {
    double sum = 0.0;
    for (std::size_t a = 0; a < num_actions_; ++a) {
      double p = (*this)(x, a);
      if (!(p >= 0.0)) throw Error(ErrorCode::NegativeEntry, "negative action probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowTolerance) {
      throw Error(ErrorCode::InvalidParams, "policy row " + std::to_string(x) + " does not sum to 1");
    }
  }
}

Policy Policy::uniform(std::size_t num_states, std::size_t num_actions) {
  return Policy(num_states, num_actions,
                std::vector<double>(num_states * num_actions, 1.0 / static_cast<double>(num_actions)));
}

Policy Policy::deterministic(std::size_t num_actions, const std::vector<std::size_t>& choice) {
  std::vector<double> probs(choice.size() * num_actions, 0.0);
  for (std::size_t x = 0; x < choice.size(); ++x) probs.at(x * num_actions + choice[x]) = 1.0;
  return Policy(choice.size(), num_actions, std::move(probs));
}

OccupancyMeasure::OccupancyMeasure(std::size_t num_states, std::size_t num_actions, std::vector<double> q)
    : PairTable(num_states, num_actions, std::move(q)) {
  for (double v : values_) {
    if (!std::isfinite(v) || v < -1e-12) throw Error(ErrorCode::NegativeEntry, "occupancy entry negative or non-finite");
  }
}

double OccupancyMeasure::total_mass() const {
  return std::accumulate(values_.begin(), values_.end(), 0.0);
}

double OccupancyMeasure::state_mass(std::size_t x) const {
  double s = 0.0;
  for (std::size_t a = 0; a < num_actions_; ++a) s += (*this)(x, a);
  return s;
}

double Trajectory::total_loss() const {
  double s = 0.0;
  for (const auto& step : steps) s += step.loss;
  return s;
}

// ---------------------------------------------------------------- maps

Policy induced_policy(const OccupancyMeasure& q) {
  const std::size_t nx = q.num_states(), na = q.num_actions();
  std::vector<double> probs(nx * na);
  for (std::size_t x = 0; x < nx; ++x) {
    double mass = 0.0;
    for (std::size_t a = 0; a < na; ++a) {
      double v = q(x, a);
      if (v < -1e-12) throw Error(ErrorCode::NegativeEntry, "occupancy entry below -1e-12");
      mass += std::max(v, 0.0);
    }
    for (std::size_t a = 0; a < na; ++a) {
      probs[x * na + a] = mass > 0.0 ? std::max(q(x, a), 0.0) / mass : 1.0 / static_cast<double>(na);
    }
  }
  return Policy(nx, na, std::move(probs));
}

std::vector<double> stationary_distribution(const MdpModel& mdp, const Policy& pi) {
  const std::size_t n = mdp.num_states();
  std::vector<double> d(n, 1.0 / static_cast<double>(n)), next(n);
  for (std::size_t iter = 0; iter < kPowerBudget; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t x = 0; x < n; ++x) {
      if (d[x] == 0.0) continue;
      for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
        double w = d[x] * pi(x, a);
        if (w == 0.0) continue;
        for (const auto& t : mdp.successors(x, a)) next[static_cast<std::size_t>(t.next)] += w * t.prob;
      }
    }
    double residual = 0.0;
    for (std::size_t x = 0; x < n; ++x) residual += std::abs(next[x] - d[x]);
    if (residual <= kPowerTolerance) {
      double total = std::accumulate(next.begin(), next.end(), 0.0);
      for (double& v : next) v /= total;
      return next;
    }
    // Lazy averaging keeps periodic chains convergent without moving the fixed point.
    for (std::size_t x = 0; x < n; ++x) d[x] = 0.5 * (d[x] + next[x]);
  }
  throw Error(ErrorCode::NonConvergent, "power iteration did not reach 1e-12 residual");
}

OccupancyMeasure occupancy_of_policy(const MdpModel& mdp, const Policy& pi) {
  const std::size_t nx = mdp.num_states(), na = mdp.num_actions();
  if (pi.num_states() != nx || pi.num_actions() != na) throw Error(ErrorCode::ShapeMismatch, "policy shape");
  std::vector<double> d(nx, 0.0);

  switch (mdp.setting()) {
    case Setting::LoopFree: {
      d[mdp.initial_state()] = 1.0;
      for (const auto& layer : mdp.layers()) {
        for (std::size_t x : layer) {
          for (std::size_t a = 0; a < na; ++a) {
            double w = d[x] * pi(x, a);
            if (w == 0.0) continue;
            for (const auto& t : mdp.successors(x, a)) {
              if (t.next != kGoal) d[static_cast<std::size_t>(t.next)] += w * t.prob;
            }
          }
        }
      }
      break;
    }
    case Setting::Ssp: {
      auto reach = reachable_from(mdp, pi, mdp.initial_state());
      auto finite = finite_hitting_states(mdp, pi);
      std::vector<std::size_t> subset;
      for (std::size_t x = 0; x < nx; ++x) {
        if (!reach[x]) continue;
        if (!finite[x]) throw Error(ErrorCode::ImproperPolicy, "policy does not reach the goal almost surely");
        subset.push_back(x);
      }
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<long>(subset.size()));
      auto start = std::find(subset.begin(), subset.end(), mdp.initial_state());
      rhs(start - subset.begin()) = 1.0;
      Eigen::VectorXd visits = solve_transient(mdp, pi, subset, rhs, /*transpose=*/true);
      for (std::size_t i = 0; i < subset.size(); ++i) {
        double v = visits(static_cast<long>(i));
        if (!std::isfinite(v) || v < -1e-9) throw Error(ErrorCode::ImproperPolicy, "visit counts diverge");
        d[subset[i]] = std::max(v, 0.0);
      }
      break;
    }
    case Setting::InfiniteHorizon:
      d = stationary_distribution(mdp, pi);
      break;
  }

  std::vector<double> q(nx * na);
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t a = 0; a < na; ++a) q[x * na + a] = d[x] * pi(x, a);
  }
  return OccupancyMeasure(nx, na, std::move(q));
}

std::vector<double> hitting_time(const MdpModel& mdp, const Policy& pi) {
  if (!mdp.has_goal()) throw Error(ErrorCode::InvalidParams, "hitting time needs a goal state");
  const std::size_t nx = mdp.num_states();
  auto finite = finite_hitting_states(mdp, pi);
  std::vector<std::size_t> subset;
  for (std::size_t x = 0; x < nx; ++x) {
    if (finite[x]) subset.push_back(x);
  }
  std::vector<double> h(nx, kInfinity);
  if (subset.empty()) return h;
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<long>(subset.size()));
  Eigen::VectorXd sol = solve_transient(mdp, pi, subset, ones, /*transpose=*/false);
  for (std::size_t i = 0; i < subset.size(); ++i) h[subset[i]] = sol(static_cast<long>(i));
  return h;
}

FastPolicyResult fast_policy(const MdpModel& mdp) {
  if (!mdp.has_goal()) throw Error(ErrorCode::InvalidParams, "fast policy needs a goal state");
  const std::size_t nx = mdp.num_states(), na = mdp.num_actions();

  auto q_value = [&](const std::vector<double>& j, std::size_t x, std::size_t a) {
    double v = 1.0;
    for (const auto& t : mdp.successors(x, a)) {
      if (t.next != kGoal) v += t.prob * j[static_cast<std::size_t>(t.next)];
    }
    return v;
  };
  auto greedy = [&](const std::vector<double>& j) {
    std::vector<std::size_t> choice(nx, 0);
    for (std::size_t x = 0; x < nx; ++x) {
      double best = q_value(j, x, 0);
      for (std::size_t a = 1; a < na; ++a) {
        double v = q_value(j, x, a);
        if (v < best - 1e-10 * std::max(1.0, std::abs(best))) {
          best = v;
          choice[x] = a;
        }
      }
    }
    return choice;
  };

  // Policy iteration from the uniform policy; each evaluation is exact, and the
  // improvement step is the value-iteration operator J -> 1 + min_a P J.
  Policy pi = Policy::uniform(nx, na);
  std::vector<double> j = hitting_time(mdp, pi);
  for (double v : j) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NoProperPolicy, "uniform policy is improper");
  }
  std::vector<std::size_t> choice;
  for (std::size_t iter = 0; iter < 10'000; ++iter) {
    auto next_choice = greedy(j);
    if (next_choice == choice) {
      double diameter = *std::max_element(j.begin(), j.end());
      return {Policy::deterministic(na, choice), diameter, j};
    }
    choice = std::move(next_choice);
    pi = Policy::deterministic(na, choice);
    j = hitting_time(mdp, pi);
    for (double v : j) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NoProperPolicy, "policy iteration left the proper set");
    }
  }
  throw Error(ErrorCode::NoProperPolicy, "fast-policy iteration budget exhausted");
}

// ---------------------------------------------------------------- distances

double inner(const PairTable& lhs, const PairTable& rhs) {
  require_shape(lhs, rhs);
  double s = 0.0;
  for (std::size_t i = 0; i < lhs.size(); ++i) s += lhs[i] * rhs[i];
  return s;
}

double l1_distance(const PairTable& lhs, const PairTable& rhs) {
  require_shape(lhs, rhs);
  double s = 0.0;
  for (std::size_t i = 0; i < lhs.size(); ++i) s += std::abs(lhs[i] - rhs[i]);
  return s;
}

double policy_distance(const Policy& lhs, const Policy& rhs, std::span<const std::size_t> states) {
  require_shape(lhs, rhs);
  double worst = 0.0;
  for (std::size_t x : states) {
    double row = 0.0;
    for (std::size_t a = 0; a < lhs.num_actions(); ++a) row += std::abs(lhs(x, a) - rhs(x, a));
    worst = std::max(worst, row);
  }
  return worst;
}

double policy_distance(const Policy& lhs, const Policy& rhs) {
  std::vector<std::size_t> all(lhs.num_states());
  std::iota(all.begin(), all.end(), 0);
  return policy_distance(lhs, rhs, all);
}

double path_length_policies(std::span<const Policy> seq,
                            const std::vector<std::vector<std::size_t>>* layers) {
  if (seq.empty()) throw Error(ErrorCode::ShapeMismatch, "empty policy sequence");
  double total = 0.0;
  for (std::size_t k = 1; k < seq.size(); ++k) {
    if (layers == nullptr) {
      total += policy_distance(seq[k], seq[k - 1]);
    } else {
      for (const auto& layer : *layers) total += policy_distance(seq[k], seq[k - 1], layer);
    }
  }
  return total;
}

double path_length_occupancy(std::span<const OccupancyMeasure> seq) {
  if (seq.empty()) throw Error(ErrorCode::ShapeMismatch, "empty occupancy sequence");
  double total = 0.0;
  for (std::size_t k = 1; k < seq.size(); ++k) total += l1_distance(seq[k], seq[k - 1]);
  return total;
}

}  // namespace oreps
