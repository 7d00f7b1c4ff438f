#include "oreps/harness.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include "oreps/oracles.hpp"
#include "oreps/projection.hpp"

namespace oreps {

namespace {

std::vector<double> summed_loss(std::span<const LossFunction> losses) {
  std::vector<double> c(losses.front().size(), 0.0);
  for (const auto& l : losses) {
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += l[i];
  }
  return c;
}

bool tied_below(double v, double best) { return v < best - 1e-10 * std::max(1.0, std::abs(best)); }

double expected_successor(const MdpModel& mdp, std::size_t x, std::size_t a, const std::vector<double>& value) {
  double v = 0.0;
  for (const auto& t : mdp.successors(x, a)) {
    if (t.next != kGoal) v += t.prob * value[static_cast<std::size_t>(t.next)];
  }
  return v;
}

std::vector<std::size_t> greedy_choice(const MdpModel& mdp, const std::vector<double>& cost,
                                       const std::vector<double>& value, const std::vector<std::size_t>& current) {
  const std::size_t nx = mdp.num_states(), na = mdp.num_actions();
  std::vector<std::size_t> choice(nx);
  for (std::size_t x = 0; x < nx; ++x) {
    // keep the incumbent action unless another one is strictly better; ties go to the lower index
    std::size_t best_a = current.empty() ? 0 : current[x];
    double best = cost[mdp.pair(x, best_a)] + expected_successor(mdp, x, best_a, value);
    for (std::size_t a = 0; a < na; ++a) {
      double v = cost[mdp.pair(x, a)] + expected_successor(mdp, x, a, value);
      if (tied_below(v, best)) {
        best = v;
        best_a = a;
      }
    }
    choice[x] = best_a;
  }
  return choice;
}

Policy loopfree_best(const MdpModel& mdp, const std::vector<double>& cost) {
  const std::size_t na = mdp.num_actions();
  std::vector<double> value(mdp.num_states(), 0.0);
  std::vector<std::size_t> choice(mdp.num_states(), 0);
  const auto& layers = mdp.layers();
  for (std::size_t l = layers.size(); l-- > 0;) {
    for (std::size_t x : layers[l]) {
      double best = kInfinity;
      for (std::size_t a = 0; a < na; ++a) {
        double v = cost[mdp.pair(x, a)] + expected_successor(mdp, x, a, value);
        if (a == 0 || tied_below(v, best)) {
          best = v;
          choice[x] = a;
        }
      }
      value[x] = best;
    }
  }
  return Policy::deterministic(na, choice);
}

std::vector<double> ssp_policy_cost(const MdpModel& mdp, const std::vector<std::size_t>& choice,
                                    const std::vector<double>& cost) {
  const std::size_t n = mdp.num_states();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
  for (std::size_t x = 0; x < n; ++x) {
    rhs(static_cast<Eigen::Index>(x)) = cost[mdp.pair(x, choice[x])];
    for (const auto& t : mdp.successors(x, choice[x])) {
      if (t.next != kGoal) m(static_cast<Eigen::Index>(x), t.next) -= t.prob;
    }
  }
  Eigen::VectorXd j = m.partialPivLu().solve(rhs);
  return {j.data(), j.data() + j.size()};
}

Policy ssp_best(const MdpModel& mdp, std::vector<double> cost) {
  // A small per-step cost keeps every policy iterate proper when some losses are zero.
  double top = *std::max_element(cost.begin(), cost.end());
  for (double& c : cost) c += 1e-9 * std::max(1.0, top);
  const auto fast = fast_policy(mdp);
  std::vector<std::size_t> choice(mdp.num_states());
  for (std::size_t x = 0; x < choice.size(); ++x) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      if (fast.policy(x, a) > 0.5) choice[x] = a;
    }
  }
  for (std::size_t iter = 0; iter < 10'000; ++iter) {
    auto value = ssp_policy_cost(mdp, choice, cost);
    auto next = greedy_choice(mdp, cost, value, choice);
    if (next == choice) return Policy::deterministic(mdp.num_actions(), choice);
    choice = std::move(next);
  }
  throw Error(ErrorCode::Infeasible, "SSP comparator policy iteration did not settle");
}

Policy average_cost_best(const MdpModel& mdp, const std::vector<double>& cost) {
  const std::size_t n = mdp.num_states();
  const auto N = static_cast<Eigen::Index>(n);
  std::vector<std::size_t> choice(n, 0);
  for (std::size_t iter = 0; iter < 10'000; ++iter) {
    // bias h with h(0) = 0 and gain g: h + g = c + P h
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(N + 1, N + 1);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N + 1);
    for (std::size_t x = 0; x < n; ++x) {
      const auto X = static_cast<Eigen::Index>(x);
      m(X, X) += 1.0;
      for (const auto& t : mdp.successors(x, choice[x])) m(X, t.next) -= t.prob;
      m(X, N) = 1.0;
      rhs(X) = cost[mdp.pair(x, choice[x])];
    }
    m(N, 0) = 1.0;
    Eigen::VectorXd sol = m.fullPivLu().solve(rhs);
    std::vector<double> bias(sol.data(), sol.data() + n);
    auto next = greedy_choice(mdp, cost, bias, choice);
    if (next == choice) return Policy::deterministic(mdp.num_actions(), choice);
    choice = std::move(next);
  }
  throw Error(ErrorCode::Infeasible, "average-cost policy iteration did not settle");
}

Policy min_entropy_policy(const std::shared_ptr<const MdpModel>& mdp, std::size_t rounds) {
  switch (mdp->setting()) {
    case Setting::LoopFree: return induced_policy(min_entropy_point(OccupancySpace::loop_free(mdp, 1e-12)).q);
    case Setting::InfiniteHorizon: return induced_policy(min_entropy_point(OccupancySpace::infinite(mdp, 1e-12)).q);
    case Setting::Ssp: {
      const double cap = std::max(static_cast<double>(rounds), ssp_certified_min_mass(*mdp, 1e-12));
      return induced_policy(min_entropy_point(OccupancySpace::ssp_capped(mdp, cap, 1e-12)).q);
    }
  }
  throw Error(ErrorCode::InvalidModel, "unknown setting");
}

}  // namespace

// ---------------------------------------------------------------- comparators

Policy best_fixed_comparator(const MdpModel& mdp, std::span<const LossFunction> losses) {
  if (losses.empty()) throw Error(ErrorCode::Infeasible, "comparator needs at least one loss");
  const auto cost = summed_loss(losses);
  if (cost.size() != mdp.num_pairs()) throw Error(ErrorCode::ShapeMismatch, "loss dimension");
  if (std::all_of(cost.begin(), cost.end(), [](double c) { return c == 0.0; })) {
    return min_entropy_policy(std::make_shared<const MdpModel>(mdp), losses.size());
  }
  switch (mdp.setting()) {
    case Setting::LoopFree: return loopfree_best(mdp, cost);
    case Setting::Ssp: return ssp_best(mdp, cost);
    case Setting::InfiniteHorizon: return average_cost_best(mdp, cost);
  }
  throw Error(ErrorCode::InvalidModel, "unknown setting");
}

std::vector<Policy> piecewise_comparator(const MdpModel& mdp, std::span<const LossFunction> losses,
                                         std::size_t period) {
  if (period < 1) throw Error(ErrorCode::InvalidParams, "comparator period must be at least 1");
  std::vector<Policy> seq;
  seq.reserve(losses.size());
  for (std::size_t start = 0; start < losses.size(); start += period) {
    const std::size_t len = std::min(period, losses.size() - start);
    Policy best = best_fixed_comparator(mdp, losses.subspan(start, len));
    for (std::size_t k = 0; k < len; ++k) seq.push_back(best);
  }
  return seq;
}

std::vector<Policy> comparator_sequence(const MdpModel& mdp, std::span<const LossFunction> losses,
                                        const ComparatorSpec& spec) {
  switch (spec.kind) {
    case ComparatorSpec::Kind::FixedBestInHindsight:
      return std::vector<Policy>(losses.size(), best_fixed_comparator(mdp, losses));
    case ComparatorSpec::Kind::PiecewiseBest:
      return piecewise_comparator(mdp, losses, spec.period);
    case ComparatorSpec::Kind::Explicit: {
      if (spec.policies.size() != losses.size()) throw Error(ErrorCode::ShapeMismatch, "one comparator policy per round");
      if (mdp.setting() == Setting::Ssp) {
        for (const auto& pi : spec.policies) {
          if (!std::isfinite(hitting_time(mdp, pi)[mdp.initial_state()])) {
            throw Error(ErrorCode::ImproperPolicy, "explicit comparator policy is improper");
          }
        }
      }
      return spec.policies;
    }
  }
  throw Error(ErrorCode::ConfigError, "unknown comparator kind");
}

// ---------------------------------------------------------------- reports

double RegretReport::expected_total() const {
  return std::accumulate(expected_loss.begin(), expected_loss.end(), 0.0);
}

double RegretReport::regret() const { return cum_regret.empty() ? 0.0 : cum_regret.back(); }

double RegretReport::switching_total() const { return std::accumulate(switch_cost.begin(), switch_cost.end(), 0.0); }

double reduction_rhs(const RegretReport& r, double tau) {
  const std::size_t n = r.expected_loss.size();
  if (n == 0 || r.comparator_loss.size() != n || r.switch_cost.size() != n) {
    throw Error(ErrorCode::MissingColumns, "report lacks expected, comparator or switching columns");
  }
  double gap = 0.0;
  for (std::size_t t = 0; t < n; ++t) gap += r.expected_loss[t] - r.comparator_loss[t];
  const double w = tau + 1.0;
  return gap + w * r.switching_total() + w * w * r.path_length + 4.0 * w;
}

// ---------------------------------------------------------------- environment

MdpModel build_environment(const EnvironmentConfig& env) {
  std::optional<MdpModel> mdp;
  if (env.mdp_path) {
    std::ifstream in(*env.mdp_path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot open MDP file " + *env.mdp_path);
    std::stringstream ss;
    ss << in.rdbuf();
    mdp.emplace(mdp_from_json(ss.str()));
  } else {
    switch (env.grid.variant) {
      case GridVariant::LoopFree: mdp.emplace(build_loopfree_grid(env.grid)); break;
      case GridVariant::CircleSsp: mdp.emplace(build_circle_ssp(env.grid)); break;
      case GridVariant::Infinite: mdp.emplace(build_infinite_grid(env.grid)); break;
    }
  }
  if (env.tau_measured) {
    if (mdp->setting() != Setting::InfiniteHorizon) throw Error(ErrorCode::ConfigError, "measured tau needs an infinite-horizon model");
    const double tau = measured_mixing_time(*mdp);
    if (!std::isfinite(tau)) throw Error(ErrorCode::ConfigError, "mixing time estimate is not finite");
    return mdp->with_mixing_time(tau);
  }
  return std::move(*mdp);
}

// ---------------------------------------------------------------- experiment loop

namespace {

struct RunTrace {
  std::vector<double> expected;
  std::vector<double> switching;
  std::vector<std::vector<double>> realized;  // one row per rollout repeat
  double variation = 0.0;
};

std::vector<LossFunction> optimism_stream(const std::vector<LossFunction>& losses, OptimismSource source) {
  std::vector<LossFunction> out;
  if (source == OptimismSource::None) return out;
  out.reserve(losses.size());
  for (const auto& l : losses) {
    if (source == OptimismSource::Loss) {
      out.push_back(l);
      continue;
    }
    std::vector<double> v(l.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = 2.0 * l[i];
      if (v[i] > 1.0) throw Error(ErrorCode::OptimismRangeViolated, "optimism 2 l leaves [0,1]");
    }
    out.emplace_back(l.num_states(), l.num_actions(), std::move(v));
  }
  return out;
}

std::vector<double> rollout_losses(const MdpModel& mdp, const std::vector<Policy>& policies,
                                   const std::vector<LossFunction>& losses, Rng& rng, std::size_t budget) {
  std::vector<double> out(losses.size());
  if (mdp.setting() == Setting::InfiniteHorizon) {
    std::size_t x = mdp.initial_state();
    for (std::size_t t = 0; t < losses.size(); ++t) {
      const std::size_t a = sample_action(policies[t], x, rng);
      out[t] = losses[t](x, a);
      x = static_cast<std::size_t>(sample_next(mdp, x, a, rng));
    }
    return out;
  }
  for (std::size_t k = 0; k < losses.size(); ++k) out[k] = rollout(mdp, policies[k], losses[k], rng, budget).total_loss();
  return out;
}

bool is_sampling(Algorithm a) { return a == Algorithm::CodoReps || a == Algorithm::OptimisticCodoReps; }

std::size_t thread_count(const ExperimentConfig& config) {
  if (config.threads > 0) return config.threads;
  if (const char* env = std::getenv("OREPS_THREADS")) {
    long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return 1;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, bool write_files) {
  if (config.rounds < 1) throw Error(ErrorCode::ConfigError, "rounds must be at least 1");
  if (config.repeats < 1) throw Error(ErrorCode::ConfigError, "repeats must be at least 1");
  if (config.learners.empty()) throw Error(ErrorCode::ConfigError, "no learners configured");

  auto mdp = std::make_shared<const MdpModel>(build_environment(config.environment));
  const auto losses = piecewise_losses(*mdp, config.losses, config.rounds);
  const auto comparators = comparator_sequence(*mdp, losses, config.comparator);
  const double tau = mdp->setting() == Setting::InfiniteHorizon ? mdp->mixing_time() : 0.0;

  // Comparator bookkeeping, shared by all learners.
  std::vector<double> comparator_loss(config.rounds);
  std::vector<OccupancyMeasure> comparator_q;
  std::optional<double> max_hitting;
  {
    std::map<std::vector<double>, OccupancyMeasure> cache;
    for (std::size_t k = 0; k < config.rounds; ++k) {
      auto it = cache.find(comparators[k].values());
      if (it == cache.end()) it = cache.emplace(comparators[k].values(), occupancy_of_policy(*mdp, comparators[k])).first;
      comparator_q.push_back(it->second);
      comparator_loss[k] = inner(it->second, losses[k]);
    }
    if (mdp->setting() == Setting::Ssp) {
      double h = 0.0;
      for (const auto& q : comparator_q) h = std::max(h, q.total_mass());
      max_hitting = h;
    } else if (mdp->setting() == Setting::LoopFree) {
      max_hitting = static_cast<double>(mdp->layer_count());
    }
  }
  const auto* layers = mdp->setting() == Setting::LoopFree ? &mdp->layers() : nullptr;
  const double path = path_length_policies(comparators, layers);
  const double occ_path = path_length_occupancy(comparator_q);

  // One job per (learner, learner run). Sampling learners run once per repeat; the others run
  // once and are rolled out `repeats` times.
  struct Job {
    std::size_t learner;
    std::size_t run;
    std::size_t rollouts;
  };
  std::vector<Job> jobs;
  std::vector<std::vector<std::size_t>> jobs_of(config.learners.size());
  for (std::size_t i = 0; i < config.learners.size(); ++i) {
    const bool sampling = is_sampling(config.learners[i].config.algorithm);
    const std::size_t runs = sampling ? config.repeats : 1;
    for (std::size_t r = 0; r < runs; ++r) {
      jobs_of[i].push_back(jobs.size());
      jobs.push_back({i, r, sampling ? 1 : config.repeats});
    }
  }

  std::vector<RunTrace> traces(jobs.size());
  std::vector<std::string> failures(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        const auto& job = jobs[j];
        const auto& entry = config.learners[job.learner];
        LearnerConfig lc = entry.config;
        lc.rounds = config.rounds;
        if (!lc.tau && mdp->setting() == Setting::InfiniteHorizon) lc.tau = tau;
        auto learner = make_learner(mdp, lc);
        const auto optimism = optimism_stream(losses, entry.optimism);
        Rng rng(derive_seed(config.seed, 1000 * job.learner + job.run));
        RunTrace& trace = traces[j];
        std::vector<Policy> policies;
        policies.reserve(config.rounds);
        OccupancyMeasure previous;
        for (std::size_t k = 0; k < config.rounds; ++k) {
          const LossFunction* m = optimism.empty() ? nullptr : &optimism[k];
          auto out = learner->round(losses[k], rng, m);
          trace.expected.push_back(inner(out.expected, losses[k]));
          trace.switching.push_back(k == 0 ? 0.0 : l1_distance(out.expected, previous));
          previous = out.expected;
          policies.push_back(std::move(out.policy));
          if (m != nullptr) {
            double gap = 0.0;
            for (std::size_t i = 0; i < m->size(); ++i) gap = std::max(gap, std::abs(losses[k][i] - (*m)[i]));
            trace.variation += gap * gap;
          }
        }
        for (std::size_t r = 0; r < job.rollouts; ++r) {
          const std::size_t repeat = job.rollouts == 1 ? job.run : r;
          Rng roll(derive_seed(config.seed ^ 0x5bd1e995ULL, 1000 * job.learner + repeat));
          trace.realized.push_back(rollout_losses(*mdp, policies, losses, roll, config.step_budget));
        }
      } catch (const std::exception& e) {
        failures[j] = e.what();
      }
    }
  };
  const std::size_t nthreads = std::min(thread_count(config), jobs.size());
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < nthreads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    if (!failures[j].empty()) {
      throw Error(ErrorCode::ConfigError, "learner '" + config.learners[jobs[j].learner].label + "' failed: " + failures[j]);
    }
  }

  ExperimentResult result;
  const std::size_t K = config.rounds;
  for (std::size_t i = 0; i < config.learners.size(); ++i) {
    RegretReport rep;
    rep.learner = config.learners[i].label;
    rep.algorithm = config.learners[i].config.algorithm;
    rep.tau = tau;
    rep.switching_weight = tau + 1.0;
    rep.path_length = path;
    rep.occupancy_path_length = occ_path;
    rep.comparator_loss = comparator_loss;
    rep.comparator_total = std::accumulate(comparator_loss.begin(), comparator_loss.end(), 0.0);
    rep.max_hitting = max_hitting;
    rep.expected_loss.assign(K, 0.0);
    rep.switch_cost.assign(K, 0.0);
    std::vector<const std::vector<double>*> realized;
    double variation = 0.0;
    for (std::size_t j : jobs_of[i]) {
      const auto& tr = traces[j];
      for (std::size_t k = 0; k < K; ++k) {
        rep.expected_loss[k] += tr.expected[k] / static_cast<double>(jobs_of[i].size());
        rep.switch_cost[k] += tr.switching[k] / static_cast<double>(jobs_of[i].size());
      }
      variation += tr.variation / static_cast<double>(jobs_of[i].size());
      for (const auto& row : tr.realized) realized.push_back(&row);
    }
    if (config.learners[i].optimism != OptimismSource::None) rep.optimism_variation = variation;

    const double R = static_cast<double>(realized.size());
    rep.realized_mean.assign(K, 0.0);
    rep.realized_std.assign(K, 0.0);
    std::vector<double> totals;
    for (const auto* row : realized) {
      totals.push_back(std::accumulate(row->begin(), row->end(), 0.0));
      for (std::size_t k = 0; k < K; ++k) rep.realized_mean[k] += (*row)[k] / R;
    }
    for (const auto* row : realized) {
      for (std::size_t k = 0; k < K; ++k) rep.realized_std[k] += std::pow((*row)[k] - rep.realized_mean[k], 2);
    }
    for (double& s : rep.realized_std) s = R > 1 ? std::sqrt(s / (R - 1.0)) : 0.0;
    rep.realized_total_mean = std::accumulate(totals.begin(), totals.end(), 0.0) / R;
    for (double t : totals) rep.realized_total_std += std::pow(t - rep.realized_total_mean, 2);
    rep.realized_total_std = R > 1 ? std::sqrt(rep.realized_total_std / (R - 1.0)) : 0.0;

    double regret = 0.0, surrogate = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      regret += rep.expected_loss[k] - rep.comparator_loss[k];
      surrogate += rep.expected_loss[k] + rep.switching_weight * rep.switch_cost[k];
      rep.cum_regret.push_back(regret);
      rep.surrogate.push_back(surrogate);
    }
    if (mdp->setting() == Setting::InfiniteHorizon) rep.reduction = reduction_rhs(rep, tau);
    result.reports.push_back(std::move(rep));
  }

  if (write_files) {
    namespace fs = std::filesystem;
    fs::create_directories(config.output_dir);
    auto write = [&](const std::string& file, const std::string& body) {
      const auto path = (fs::path(config.output_dir) / file).string();
      std::ofstream out(path, std::ios::binary);
      if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + path);
      out << body;
      result.files.push_back(path);
    };
    write(config.name + "_rounds.csv", per_round_csv(result.reports));
    write(config.name + "_summary.csv", summary_csv(result.reports));
    if (config.write_svg) write(config.name + "_cumulative.svg", cumulative_svg(result.reports, config.name));
  }
  return result;
}

// ---------------------------------------------------------------- outputs

std::string per_round_csv(const std::vector<RegretReport>& reports) {
  std::string out =
      "round,learner,expected_loss,realized_loss_mean,realized_loss_std,comparator_loss,cum_regret,switch_cost,surrogate\n";
  for (const auto& r : reports) {
    for (std::size_t k = 0; k < r.expected_loss.size(); ++k) {
      out += std::to_string(k + 1) + "," + r.learner + "," + fmt(r.expected_loss[k]) + "," + fmt(r.realized_mean[k]) +
             "," + fmt(r.realized_std[k]) + "," + fmt(r.comparator_loss[k]) + "," + fmt(r.cum_regret[k]) + "," +
             fmt(r.switch_cost[k]) + "," + fmt(r.surrogate[k]) + "\n";
    }
  }
  return out;
}

std::string summary_csv(const std::vector<RegretReport>& reports) {
  std::string out =
      "learner,algorithm,expected_total,realized_total_mean,realized_total_std,comparator_total,regret,"
      "path_length,occupancy_path_length,max_hitting,switching_total,surrogate_total,optimism_variation,tau,"
      "reduction_rhs\n";
  for (const auto& r : reports) {
    out += r.learner + "," + to_string(r.algorithm) + "," + fmt(r.expected_total()) + "," + fmt(r.realized_total_mean) +
           "," + fmt(r.realized_total_std) + "," + fmt(r.comparator_total) + "," + fmt(r.regret()) + "," +
           fmt(r.path_length) + "," + fmt(r.occupancy_path_length) + "," + fmt_opt(r.max_hitting) + "," +
           fmt(r.switching_total()) + "," + fmt(r.surrogate.empty() ? 0.0 : r.surrogate.back()) + "," +
           fmt_opt(r.optimism_variation) + "," + fmt(r.tau) + "," + fmt_opt(r.reduction) + "\n";
  }
  return out;
}

std::string cumulative_svg(const std::vector<RegretReport>& reports, const std::string& title) {
  const double W = 720, H = 440, left = 70, right = 170, top = 40, bottom = 50;
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};
  std::size_t rounds = 0;
  double ymax = 0.0;
  std::vector<std::vector<double>> curves;
  for (const auto& r : reports) {
    std::vector<double> c;
    double s = 0.0;
    for (double v : r.expected_loss) c.push_back(s += v);
    ymax = std::max(ymax, s);
    rounds = std::max(rounds, c.size());
    curves.push_back(std::move(c));
  }
  if (ymax <= 0.0) ymax = 1.0;
  const double pw = W - left - right, ph = H - top - bottom;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << left << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">" << title
      << ": cumulative expected loss</text>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
      << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double y = top + ph - ph * tick / 4.0;
    svg << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
        << "font-size=\"11\">" << fmt(std::round(ymax * tick / 4.0)) << "</text>\n";
    const double x = left + pw * tick / 4.0;
    svg << "<text x=\"" << x << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        << "font-size=\"11\">" << static_cast<std::size_t>(std::round(static_cast<double>(rounds) * tick / 4.0))
        << "</text>\n";
  }
  for (std::size_t i = 0; i < curves.size(); ++i) {
    const char* color = colors[i % 7];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    const std::size_t n = curves[i].size();
    const std::size_t stride = std::max<std::size_t>(1, n / 400);
    for (std::size_t k = 0; k < n; k += stride) {
      const double x = left + pw * static_cast<double>(k + 1) / static_cast<double>(rounds);
      const double y = top + ph - ph * curves[i][k] / ymax;
      svg << fmt(x) << "," << fmt(y) << " ";
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << left + pw + 10 << "\" y=\"" << top + 16 + 18 * static_cast<double>(i)
        << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color << "\">" << reports[i].learner
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace oreps
