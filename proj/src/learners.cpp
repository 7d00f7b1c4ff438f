#include "oreps/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace oreps {

namespace {

double floored_log(double argument, LogFloor floor) {
  if (floor == LogFloor::Reject) {
    if (!(argument > 1.0)) throw Error(ErrorCode::DegenerateInputs, "pool log argument must exceed 1");
    return std::log(argument);
  }
  return std::log(std::max(argument, std::exp(1.0)));
}

std::vector<double> doubling_grid(double first, std::size_t count) {
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i) v[i] = std::ldexp(first, static_cast<int>(i));
  return v;
}

std::size_t pool_count(double log_argument) {
  // ceil(log(arg) / 2) + 1, never below two entries
  const double c = std::ceil(0.5 * std::log(log_argument));
  return std::max<std::size_t>(2, static_cast<std::size_t>(std::max(0.0, c)) + 1);
}

void require_positive(std::size_t v, const char* what) {
  if (v < 1) throw Error(ErrorCode::InvalidParams, std::string(what) + " must be at least 1");
}

std::vector<double> softmax_neg(const std::vector<double>& cumulative, double epsilon) {
  const double lo = *std::min_element(cumulative.begin(), cumulative.end());
  std::vector<double> p(cumulative.size());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(-epsilon * (cumulative[i] - lo));
    s += p[i];
  }
  for (double& v : p) v /= s;
  return p;
}

OccupancyMeasure mixture(const std::vector<OccupancyMeasure>& bases, const std::vector<double>& p) {
  std::vector<double> q(bases.front().size(), 0.0);
  for (std::size_t i = 0; i < bases.size(); ++i) {
    if (p[i] == 0.0) continue;
    for (std::size_t j = 0; j < q.size(); ++j) q[j] += p[i] * bases[i][j];
  }
  return OccupancyMeasure(bases.front().num_states(), bases.front().num_actions(), std::move(q));
}

bool all_zero(const LossFunction* m) {
  if (m == nullptr) return true;
  return std::all_of(m->values().begin(), m->values().end(), [](double v) { return v == 0.0; });
}

}  // namespace

// ---------------------------------------------------------------- pools

StepSizePool pool_loopfree(std::size_t episodes, std::size_t horizon, std::size_t num_states,
                           std::size_t num_actions, LogFloor floor) {
  require_positive(episodes, "K");
  require_positive(horizon, "H");
  if (num_states * num_actions < 2) throw Error(ErrorCode::InvalidParams, "need |X||A| >= 2");
  const double K = static_cast<double>(episodes);
  const double T = K * static_cast<double>(horizon);
  const double L = floored_log(static_cast<double>(num_states * num_actions) / static_cast<double>(horizon), floor);
  const std::size_t n = pool_count(1.0 + 4.0 * K * std::log(T) / L);
  return {doubling_grid(std::sqrt(L / K), n), "loop-free dynamic"};
}

StepSizePool pool_loopfree_optimistic(std::size_t episodes, std::size_t horizon, std::size_t num_states,
                                      std::size_t num_actions, LogFloor floor) {
  require_positive(episodes, "K");
  require_positive(horizon, "H");
  if (num_states * num_actions < 2) throw Error(ErrorCode::InvalidParams, "need |X||A| >= 2");
  const double K = static_cast<double>(episodes);
  const double T = K * static_cast<double>(horizon);
  const double L = floored_log(static_cast<double>(num_states * num_actions) / static_cast<double>(horizon), floor);
  const std::size_t n = pool_count(K + 4.0 * K * K * std::log(T) / L);
  return {doubling_grid(std::sqrt(L / K), n), "loop-free optimistic"};
}

StepSizePool pool_infinite(std::size_t steps, std::size_t num_states, std::size_t num_actions, LogFloor floor) {
  require_positive(steps, "T");
  if (num_states * num_actions < 2) throw Error(ErrorCode::InvalidParams, "need |X||A| >= 2");
  const double T = static_cast<double>(steps);
  const double L = floored_log(static_cast<double>(num_states * num_actions), floor);
  const std::size_t n = pool_count(1.0 + 4.0 * T * std::log(T) / L);
  return {doubling_grid(std::sqrt(L / T), n), "infinite-horizon switching"};
}

GroupwiseSchedule GroupwiseSchedule::build(std::size_t episodes, double fast_hitting, std::size_t num_states,
                                           std::size_t num_actions, bool duplicate_for_optimism) {
  require_positive(episodes, "K");
  if (!(fast_hitting >= 1.0) || !std::isfinite(fast_hitting)) {
    throw Error(ErrorCode::InvalidParams, "fast-policy hitting time must be finite and >= 1");
  }
  const double K = static_cast<double>(episodes);
  const double SA = static_cast<double>(num_states * num_actions);
  GroupwiseSchedule s;
  s.fast_hitting = fast_hitting;
  const double ratio = std::ceil(std::log2((K + 1.0) / fast_hitting));
  const std::size_t groups = 1 + static_cast<std::size_t>(std::max(0.0, ratio));
  for (std::size_t i = 0; i < groups; ++i) {
    const double h = std::ldexp(fast_hitting, static_cast<int>(i));
    s.horizons.push_back(h);
    const double c = std::ceil(0.5 * std::log(4.0 * K / (1.0 + std::log(SA * h))));
    const std::size_t n = std::max<std::size_t>(1, static_cast<std::size_t>(std::max(0.0, c)));
    s.group_sizes.push_back(n);
    for (int copy = 0; copy < (duplicate_for_optimism ? 2 : 1); ++copy) {
      for (std::size_t j = 1; j <= n; ++j) {
        const double eta = 1.0 / (32.0 * std::ldexp(1.0, static_cast<int>(j)));
        s.members.push_back({i, eta, eta / (2.0 * h), copy == 1});
      }
    }
  }
  return s;
}

// ---------------------------------------------------------------- names

std::string to_string(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::OReps: return "oreps";
    case Algorithm::DoReps: return "doreps";
    case Algorithm::OptimisticDoReps: return "optimistic-doreps";
    case Algorithm::CodoReps: return "codoreps";
    case Algorithm::OptimisticCodoReps: return "optimistic-codoreps";
    case Algorithm::RedoReps: return "redoreps";
    case Algorithm::SspOReps: return "ssp-oreps";
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(const std::string& name) {
  for (auto a : {Algorithm::OReps, Algorithm::DoReps, Algorithm::OptimisticDoReps, Algorithm::CodoReps,
                 Algorithm::OptimisticCodoReps, Algorithm::RedoReps, Algorithm::SspOReps}) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- Hedge ensemble

HedgeEnsemble::HedgeEnsemble(Algorithm tag, OccupancySpace space, std::vector<double> etas, double epsilon,
                             double switching_weight)
    : tag_(tag), space_(std::move(space)), etas_(std::move(etas)), epsilon_(epsilon),
      switching_weight_(switching_weight) {
  if (etas_.empty()) throw Error(ErrorCode::InvalidParams, "empty step-size pool");
  if (!(epsilon_ >= 0.0) || !(switching_weight_ >= 0.0)) {
    throw Error(ErrorCode::InvalidParams, "meta rate and switching weight must be nonnegative");
  }
  auto start = min_entropy_point(space_).q;
  q_.assign(etas_.size(), start);
  cumulative_.assign(etas_.size(), 0.0);
}

std::vector<double> HedgeEnsemble::weights() const { return softmax_neg(cumulative_, epsilon_); }

RoundOutput HedgeEnsemble::play(const LossFunction*, Rng&) {
  RoundOutput out;
  out.weights = weights();
  out.played = q_.size() == 1 ? q_.front() : mixture(q_, out.weights);
  out.expected = out.played;
  out.policy = induced_policy(out.played);
  return out;
}

void HedgeEnsemble::update(const LossFunction& loss, RoundOutput& out) {
  if (loss.size() != space_.dimension()) throw Error(ErrorCode::ShapeMismatch, "loss dimension");
  out.base_losses.resize(q_.size());
  for (std::size_t i = 0; i < q_.size(); ++i) {
    double h = inner(q_[i], loss);
    if (switching_weight_ > 0.0 && !q_before_.empty()) h += switching_weight_ * l1_distance(q_[i], q_before_[i]);
    out.base_losses[i] = h;
    cumulative_[i] += h;
  }
  q_before_ = q_;
  for (std::size_t i = 0; i < q_.size(); ++i) q_[i] = omd_step(q_[i], loss, etas_[i], space_).q;
  ++rounds_;
}

// ---------------------------------------------------------------- optimistic Hedge ensemble

OptimisticHedgeEnsemble::OptimisticHedgeEnsemble(OccupancySpace space, std::vector<double> etas, double horizon,
                                                 std::optional<double> fixed_epsilon)
    : space_(std::move(space)), etas_(std::move(etas)), horizon_(horizon), fixed_epsilon_(fixed_epsilon) {
  if (etas_.empty()) throw Error(ErrorCode::InvalidParams, "empty step-size pool");
  if (!(horizon_ > 0.0)) throw Error(ErrorCode::InvalidParams, "horizon must be positive");
  auto start = min_entropy_point(space_).q;
  q_hat_.assign(etas_.size(), start);
  cumulative_.assign(etas_.size(), 0.0);
}

double OptimisticHedgeEnsemble::epsilon() const {
  if (fixed_epsilon_) return *fixed_epsilon_;
  const double n = static_cast<double>(etas_.size());
  return std::sqrt(std::log(n) / (horizon_ * horizon_ * (1.0 + variation_bound_)));
}

RoundOutput OptimisticHedgeEnsemble::play(const LossFunction* optimism, Rng&) {
  RoundOutput out;
  const std::size_t n = q_hat_.size();
  if (all_zero(optimism)) {
    q_play_ = q_hat_;
    out.optimism_hints.assign(n, 0.0);
    last_optimism_ = LossFunction::zeros(space_.mdp().num_states(), space_.mdp().num_actions());
  } else {
    if (optimism->size() != space_.dimension()) throw Error(ErrorCode::ShapeMismatch, "optimism dimension");
    q_play_.clear();
    for (std::size_t i = 0; i < n; ++i) q_play_.push_back(omd_step(q_hat_[i], *optimism, etas_[i], space_).q);
    for (const auto& q : q_play_) out.optimism_hints.push_back(inner(q, *optimism));
    last_optimism_ = *optimism;
  }
  std::vector<double> score(n);
  for (std::size_t i = 0; i < n; ++i) score[i] = cumulative_[i] + out.optimism_hints[i];
  out.weights = softmax_neg(score, epsilon());
  out.played = n == 1 ? q_play_.front() : mixture(q_play_, out.weights);
  out.expected = out.played;
  out.policy = induced_policy(out.played);
  return out;
}

void OptimisticHedgeEnsemble::update(const LossFunction& loss, RoundOutput& out) {
  if (q_play_.size() != q_hat_.size()) throw Error(ErrorCode::InvalidParams, "update called before play");
  out.base_losses.resize(q_hat_.size());
  for (std::size_t i = 0; i < q_hat_.size(); ++i) {
    out.base_losses[i] = inner(q_play_[i], loss);
    cumulative_[i] += out.base_losses[i];
  }
  for (std::size_t i = 0; i < q_hat_.size(); ++i) q_hat_[i] = omd_step(q_hat_[i], loss, etas_[i], space_).q;

  double gap = 0.0;
  for (std::size_t j = 0; j < loss.size(); ++j) gap = std::max(gap, std::abs(loss[j] - last_optimism_[j]));
  variation_ += gap * gap;
  while (variation_ > variation_bound_) variation_bound_ = std::max(1.0, 2.0 * variation_bound_);
  ++rounds_;
}

// ---------------------------------------------------------------- corrected ensemble

CorrectedEnsemble::CorrectedEnsemble(std::shared_ptr<const MdpModel> mdp, GroupwiseSchedule schedule, double alpha,
                                     bool optimistic)
    : mdp_(std::move(mdp)), schedule_(std::move(schedule)), optimistic_(optimistic) {
  if (mdp_->setting() != Setting::Ssp) throw Error(ErrorCode::InvalidParams, "corrected ensemble needs an SSP model");
  if (schedule_.members.empty()) throw Error(ErrorCode::InvalidParams, "empty base-learner bank");
  const double floor_mass = ssp_certified_min_mass(*mdp_, alpha);
  std::vector<OccupancyMeasure> starts;
  for (double h : schedule_.horizons) {
    caps_.push_back(std::max(h, floor_mass));
    spaces_.push_back(OccupancySpace::ssp_capped(mdp_, caps_.back(), alpha));
    starts.push_back(min_entropy_point(spaces_.back()).q);
  }
  std::vector<double> rates;
  double total = 0.0;
  for (const auto& m : schedule_.members) {
    if (m.eta > 1.0 / 64.0 + 1e-15) throw Error(ErrorCode::InvalidParams, "base step size above 1/64");
    q_hat_.push_back(starts[m.group]);
    rates.push_back(m.epsilon);
    p_hat_.push_back(m.epsilon * m.epsilon);
    total += p_hat_.back();
  }
  for (double& p : p_hat_) p /= total;
  meta_reg_ = EntropyRegularizer::weighted(std::move(rates));
}

RoundOutput CorrectedEnsemble::play(const LossFunction* optimism, Rng& rng) {
  const std::size_t n = q_hat_.size();
  const bool hinted = optimistic_ && !all_zero(optimism);
  RoundOutput out;
  out.optimism_hints.assign(n, 0.0);
  q_play_ = q_hat_;
  if (hinted) {
    if (optimism->size() != mdp_->num_pairs()) throw Error(ErrorCode::ShapeMismatch, "optimism dimension");
    for (std::size_t k = 0; k < n; ++k) {
      const auto& m = schedule_.members[k];
      if (!m.uses_optimism) continue;
      const double eta[1] = {m.eta};
      q_play_[k] = mirror_step(q_hat_[k], optimism->values(), eta, spaces_[m.group]).q;
      out.optimism_hints[k] = inner(q_play_[k], *optimism);
    }
    last_optimism_ = *optimism;
    out.weights = weighted_simplex_step(p_hat_, out.optimism_hints, meta_reg_);
  } else {
    last_optimism_ = LossFunction::zeros(mdp_->num_states(), mdp_->num_actions());
    out.weights = p_hat_;
  }
  const std::size_t pick = sample_index(rng, out.weights);
  out.sampled = pick;
  out.played = q_play_[pick];
  out.expected = mixture(q_play_, out.weights);
  out.policy = induced_policy(out.played);
  return out;
}

void CorrectedEnsemble::update(const LossFunction& loss, RoundOutput& out) {
  const std::size_t n = q_hat_.size();
  if (q_play_.size() != n) throw Error(ErrorCode::InvalidParams, "update called before play");
  if (loss.size() != mdp_->num_pairs()) throw Error(ErrorCode::ShapeMismatch, "loss dimension");
  const auto zeros = LossFunction::zeros(mdp_->num_states(), mdp_->num_actions());
  out.base_losses.resize(n);
  out.corrections.resize(n);
  std::vector<double> corrected(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double h = inner(q_play_[k], loss);
    const double gap = h - out.optimism_hints[k];
    const double eps = schedule_.members[k].epsilon;
    if (32.0 * eps * std::abs(gap) > 1.0 + 1e-12) {
      throw Error(ErrorCode::CorrectionRangeViolated, "32 eps |h - M| exceeds 1");
    }
    out.base_losses[k] = h;
    out.corrections[k] = 32.0 * eps * gap * gap;
    corrected[k] = h + out.corrections[k];
  }
  p_hat_ = weighted_simplex_step(p_hat_, corrected, meta_reg_);

  std::vector<double> g(loss.size());
  for (std::size_t k = 0; k < n; ++k) {
    const auto& m = schedule_.members[k];
    const LossFunction& hint = m.uses_optimism ? last_optimism_ : zeros;
    const double eta[1] = {m.eta};
    const auto a = correction_term(loss.values(), hint.values(), eta);
    for (std::size_t j = 0; j < g.size(); ++j) g[j] = loss[j] + a[j];
    q_hat_[k] = mirror_step(q_hat_[k], g, eta, spaces_[m.group]).q;
  }
  ++rounds_;
}

// ---------------------------------------------------------------- factory

std::unique_ptr<Learner> make_learner(std::shared_ptr<const MdpModel> mdp, const LearnerConfig& cfg) {
  require_positive(cfg.rounds, "rounds");
  const std::size_t S = mdp->num_states(), A = mdp->num_actions();
  const double R = static_cast<double>(cfg.rounds);
  const Setting setting = mdp->setting();
  auto need = [&](Setting s, const char* what) {
    if (setting != s) throw Error(ErrorCode::ConfigError, to_string(cfg.algorithm) + " needs " + what);
  };

  switch (cfg.algorithm) {
    case Algorithm::OReps:
    case Algorithm::DoReps:
    case Algorithm::OptimisticDoReps:
    case Algorithm::RedoReps: {
      if (setting == Setting::Ssp) throw Error(ErrorCode::ConfigError, to_string(cfg.algorithm) + " needs a loop-free or infinite-horizon model");
      if (cfg.algorithm == Algorithm::RedoReps) need(Setting::InfiniteHorizon, "an infinite-horizon model");
      if (cfg.algorithm == Algorithm::OptimisticDoReps) need(Setting::LoopFree, "a loop-free model");
      const bool loop_free = setting == Setting::LoopFree;
      const std::size_t H = loop_free ? mdp->layer_count() : 1;
      const double T = R * static_cast<double>(H);
      const double alpha = cfg.alpha.value_or(1.0 / (T * T));
      auto space = loop_free ? OccupancySpace::loop_free(mdp, alpha) : OccupancySpace::infinite(mdp, alpha);

      StepSizePool pool;
      if (cfg.algorithm == Algorithm::OptimisticDoReps) {
        pool = pool_loopfree_optimistic(cfg.rounds, H, S, A, cfg.log_floor);
      } else if (loop_free) {
        pool = pool_loopfree(cfg.rounds, H, S, A, cfg.log_floor);
      } else {
        pool = pool_infinite(cfg.rounds, S, A, cfg.log_floor);
      }
      std::vector<double> etas = cfg.pool.value_or(pool.values);
      if (cfg.algorithm == Algorithm::OReps) {
        // static tuning: the smallest pool entry, i.e. the rate tuned for zero path length
        etas = {cfg.eta.value_or(cfg.pool ? cfg.pool->front() : pool.values.front())};
      }
      const double N = static_cast<double>(etas.size());
      if (cfg.algorithm == Algorithm::OptimisticDoReps) {
        return std::make_unique<OptimisticHedgeEnsemble>(std::move(space), std::move(etas), static_cast<double>(H),
                                                         cfg.epsilon);
      }
      double eps = 0.0, switching = 0.0;
      if (cfg.algorithm == Algorithm::RedoReps) {
        const double tau = cfg.tau.value_or(mdp->mixing_time());
        if (!(tau >= 0.0) || !std::isfinite(tau)) throw Error(ErrorCode::ConfigError, "mixing time must be finite");
        eps = std::sqrt(std::log(N) / (2.0 * T)) / (2.0 * tau + 3.0);
        switching = tau + 1.0;
      } else if (cfg.algorithm == Algorithm::DoReps) {
        eps = std::sqrt(std::log(N) / (static_cast<double>(H) * T));
      }
      return std::make_unique<HedgeEnsemble>(cfg.algorithm, std::move(space), std::move(etas),
                                             cfg.epsilon.value_or(eps), switching);
    }
    case Algorithm::CodoReps:
    case Algorithm::OptimisticCodoReps: {
      need(Setting::Ssp, "an SSP model");
      const bool optimistic = cfg.algorithm == Algorithm::OptimisticCodoReps;
      const auto fast = fast_policy(*mdp);
      auto schedule = GroupwiseSchedule::build(cfg.rounds, fast.hitting[mdp->initial_state()], S, A, optimistic);
      const double alpha = cfg.alpha.value_or(1.0 / (R * R * R));
      return std::make_unique<CorrectedEnsemble>(mdp, std::move(schedule), alpha, optimistic);
    }
    case Algorithm::SspOReps: {
      need(Setting::Ssp, "an SSP model");
      const auto fast = fast_policy(*mdp);
      // zero minimum cost: cap D K^{3/4}
      const double cap = cfg.horizon_cap.value_or(fast.diameter * std::pow(R, 0.75));
      const double alpha = cfg.alpha.value_or(1.0 / (R * R * R));
      const double eta = cfg.eta.value_or(std::sqrt(std::log(static_cast<double>(S * A)) / (cap * R)));
      auto space = OccupancySpace::ssp_capped(mdp, std::max(cap, ssp_certified_min_mass(*mdp, alpha)), alpha);
      return std::make_unique<HedgeEnsemble>(Algorithm::SspOReps, std::move(space), std::vector<double>{eta}, 0.0, 0.0);
    }
  }
  throw Error(ErrorCode::ConfigError, "unknown algorithm");
}

}  // namespace oreps
