#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "oreps/mdp.hpp"
#include "oreps/projection.hpp"
#include "oreps/random.hpp"

namespace oreps {

// ---------------------------------------------------------------- step-size pools

/// What to do when the log argument of a pool formula is at most 1 (the rate would be
/// zero or imaginary).
enum class LogFloor { Reject, FloorAtE };

struct StepSizePool {
  std::vector<double> values;
  std::string provenance;

  std::size_t size() const { return values.size(); }
};

/// Doubling grid eta_i = 2^{i-1} sqrt(L / K), L = log(|X||A| / H), over T = H K steps.
StepSizePool pool_loopfree(std::size_t episodes, std::size_t horizon, std::size_t num_states,
                           std::size_t num_actions, LogFloor floor = LogFloor::FloorAtE);

/// Same grid with the larger count used by the optimistic ensemble.
StepSizePool pool_loopfree_optimistic(std::size_t episodes, std::size_t horizon, std::size_t num_states,
                                      std::size_t num_actions, LogFloor floor = LogFloor::FloorAtE);

/// eta_i = 2^{i-1} sqrt(log(|X||A|) / T).
StepSizePool pool_infinite(std::size_t steps, std::size_t num_states, std::size_t num_actions,
                           LogFloor floor = LogFloor::FloorAtE);

/// Base-learner layout for the SSP ensembles: horizon groups H_i = 2^{i-1} H_fast, each with
/// step sizes 1/(32 * 2^j), j = 1..N_i.
struct GroupwiseSchedule {
  struct Member {
    std::size_t group;
    double eta;
    double epsilon;        // meta rate eta / (2 H_group)
    bool uses_optimism;    // optimistic variant: one copy with m' = m, one with m' = 0
  };

  double fast_hitting = 0.0;
  std::vector<double> horizons;
  std::vector<std::size_t> group_sizes;  // N_i before duplication
  std::vector<Member> members;

  static GroupwiseSchedule build(std::size_t episodes, double fast_hitting, std::size_t num_states,
                                 std::size_t num_actions, bool duplicate_for_optimism);
};

// ---------------------------------------------------------------- learners

enum class Algorithm { OReps, DoReps, OptimisticDoReps, CodoReps, OptimisticCodoReps, RedoReps, SspOReps };

std::string to_string(Algorithm algorithm);
std::optional<Algorithm> parse_algorithm(const std::string& name);

struct RoundOutput {
  OccupancyMeasure played;                // the mixture, or the sampled base's iterate
  OccupancyMeasure expected;              // sum_i p_i q_i; equals `played` for mixing learners
  Policy policy;                          // induced by `played`
  std::optional<std::size_t> sampled;     // sampling learners only
  std::vector<double> weights;            // meta weights used for this round
  std::vector<double> optimism_hints;     // M_i, empty when no optimism is used
  // Filled by update():
  std::vector<double> base_losses;        // h_i as fed to the meta learner
  std::vector<double> corrections;        // b_i (meta correction), empty if unused
};

class Learner {
 public:
  virtual ~Learner() = default;

  virtual Algorithm algorithm() const = 0;

  /// Decision for the next round. `optimism` is only read by the optimistic learners.
  virtual RoundOutput play(const LossFunction* optimism, Rng& rng) = 0;

  /// Feed the loss of the round whose decision is `out`.
  virtual void update(const LossFunction& loss, RoundOutput& out) = 0;

  RoundOutput round(const LossFunction& loss, Rng& rng, const LossFunction* optimism = nullptr) {
    auto out = play(optimism, rng);
    update(loss, out);
    return out;
  }

  /// Current base iterates (for the optimistic learners: the q-hat sequence).
  virtual std::vector<OccupancyMeasure> bases() const = 0;
  virtual std::size_t bank_size() const = 0;
  std::size_t rounds_played() const { return rounds_; }

 protected:
  std::size_t rounds_ = 0;
};

/// O-REPS, DO-REPS and REDO-REPS: a bank of plain OMD bases over one space, mixed by Hedge on
/// h_i = <q_i, l> + switching_weight * ||q_i - q_i(previous round)||_1.
class HedgeEnsemble final : public Learner {
 public:
  HedgeEnsemble(Algorithm tag, OccupancySpace space, std::vector<double> etas, double epsilon,
                double switching_weight);

  Algorithm algorithm() const override { return tag_; }
  RoundOutput play(const LossFunction* optimism, Rng& rng) override;
  void update(const LossFunction& loss, RoundOutput& out) override;
  std::vector<OccupancyMeasure> bases() const override { return q_; }
  std::size_t bank_size() const override { return q_.size(); }

  const OccupancySpace& space() const { return space_; }
  const std::vector<double>& etas() const { return etas_; }
  double epsilon() const { return epsilon_; }
  std::vector<double> weights() const;

 private:
  Algorithm tag_;
  OccupancySpace space_;
  std::vector<double> etas_;
  double epsilon_;
  double switching_weight_;
  std::vector<OccupancyMeasure> q_;
  std::vector<OccupancyMeasure> q_before_;  // iterates of the previous round
  std::vector<double> cumulative_;
};

/// Optimistic DO-REPS with a self-confident meta rate eps = sqrt(log N / (H^2 (1 + V))), where
/// V is the running sum of ||l - m||_inf^2 rounded up to a power of two.
class OptimisticHedgeEnsemble final : public Learner {
 public:
  OptimisticHedgeEnsemble(OccupancySpace space, std::vector<double> etas, double horizon,
                          std::optional<double> fixed_epsilon = std::nullopt);

  Algorithm algorithm() const override { return Algorithm::OptimisticDoReps; }
  RoundOutput play(const LossFunction* optimism, Rng& rng) override;
  void update(const LossFunction& loss, RoundOutput& out) override;
  std::vector<OccupancyMeasure> bases() const override { return q_hat_; }
  std::size_t bank_size() const override { return q_hat_.size(); }

  double epsilon() const;
  const std::vector<OccupancyMeasure>& played_bases() const { return q_play_; }

 private:
  OccupancySpace space_;
  std::vector<double> etas_;
  double horizon_;
  std::optional<double> fixed_epsilon_;
  std::vector<OccupancyMeasure> q_hat_;
  std::vector<OccupancyMeasure> q_play_;
  std::vector<double> cumulative_;
  LossFunction last_optimism_;
  double variation_ = 0.0;
  double variation_bound_ = 0.0;
};

/// CODO-REPS and its optimistic variant: per-group capped spaces, corrected OMD bases, and a
/// weighted-entropy meta learner with correction 32 eps (h - M)^2. Plays a sampled base.
class CorrectedEnsemble final : public Learner {
 public:
  CorrectedEnsemble(std::shared_ptr<const MdpModel> mdp, GroupwiseSchedule schedule, double alpha,
                    bool optimistic);

  Algorithm algorithm() const override {
    return optimistic_ ? Algorithm::OptimisticCodoReps : Algorithm::CodoReps;
  }
  RoundOutput play(const LossFunction* optimism, Rng& rng) override;
  void update(const LossFunction& loss, RoundOutput& out) override;
  std::vector<OccupancyMeasure> bases() const override { return q_hat_; }
  std::size_t bank_size() const override { return q_hat_.size(); }

  const GroupwiseSchedule& schedule() const { return schedule_; }
  const std::vector<OccupancySpace>& spaces() const { return spaces_; }
  const std::vector<double>& meta_weights() const { return p_hat_; }
  /// Caps actually used; a horizon below the certified feasible mass is lifted to it.
  const std::vector<double>& effective_horizons() const { return caps_; }

 private:
  std::shared_ptr<const MdpModel> mdp_;
  GroupwiseSchedule schedule_;
  bool optimistic_;
  std::vector<double> caps_;
  std::vector<OccupancySpace> spaces_;
  EntropyRegularizer meta_reg_;
  std::vector<OccupancyMeasure> q_hat_;
  std::vector<OccupancyMeasure> q_play_;
  std::vector<double> p_hat_;
  LossFunction last_optimism_;
};

// ---------------------------------------------------------------- configuration

struct LearnerConfig {
  Algorithm algorithm = Algorithm::DoReps;
  std::size_t rounds = 0;                  // K (episodic) or T (infinite-horizon)
  std::optional<double> alpha;
  std::optional<std::vector<double>> pool; // overrides the default pool (or the single eta)
  std::optional<double> eta;               // single-rate learners
  std::optional<double> epsilon;           // meta rate override
  std::optional<double> horizon_cap;       // SSP-O-REPS cap override
  std::optional<double> tau;               // REDO-REPS; defaults to the model's mixing time
  LogFloor log_floor = LogFloor::FloorAtE;
};

std::unique_ptr<Learner> make_learner(std::shared_ptr<const MdpModel> mdp, const LearnerConfig& config);

}  // namespace oreps
