#include "oreps/oracles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <numeric>

#include "oreps/environments.hpp"
#include "oreps/harness.hpp"
#include "oreps/learners.hpp"

namespace oreps {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

std::string oracle_summary_json(const std::vector<OracleResult>& results) {
  nlohmann::json doc = nlohmann::json::array();
  bool all = true;
  for (const auto& r : results) {
    doc.push_back({{"name", r.name},
                   {"instances", r.instances},
                   {"max_violation", r.max_violation},
                   {"tolerance", r.tolerance},
                   {"pass", r.pass},
                   {"detail", r.detail}});
    all = all && r.pass;
  }
  return nlohmann::json{{"results", doc}, {"pass", all}}.dump(2);
}

// ---------------------------------------------------------------- projection oracle

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double eta_of(std::span<const double> eta, std::size_t i) { return eta.size() == 1 ? eta[0] : eta[i]; }

// Equality system rebuilt from the model, independent of the solver's row layout.
void equality_system(const OccupancySpace& space, MatrixXd& a, VectorXd& b) {
  const auto& mdp = space.mdp();
  const std::size_t nx = mdp.num_states(), na = mdp.num_actions(), n = nx * na;
  const bool stationary = space.family() == SpaceFamily::InfiniteStationary;
  const auto rows = static_cast<Eigen::Index>(stationary ? nx + 1 : nx);
  a = MatrixXd::Zero(rows, static_cast<Eigen::Index>(n));
  b = VectorXd::Zero(rows);
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t u = 0; u < na; ++u) {
      const auto col = static_cast<Eigen::Index>(x * na + u);
      a(static_cast<Eigen::Index>(x), col) += 1.0;
      for (const auto& t : mdp.successors(x, u)) {
        if (t.next != kGoal) a(t.next, col) -= t.prob;
      }
    }
  }
  if (stationary) {
    a.row(rows - 1).setOnes();
    b(rows - 1) = 1.0;
  } else {
    b(static_cast<Eigen::Index>(mdp.initial_state())) = 1.0;
  }
}

struct MirrorProblem {
  VectorXd cost;  // eta o g
  VectorXd prev;
  double alpha;
  std::optional<double> cap;

  double f(const VectorXd& q) const {
    double v = 0.0;
    for (Eigen::Index i = 0; i < q.size(); ++i) v += cost(i) * q(i) + q(i) * std::log(q(i) / prev(i)) - q(i) + prev(i);
    return v;
  }
  VectorXd grad(const VectorXd& q) const {
    VectorXd g(q.size());
    for (Eigen::Index i = 0; i < q.size(); ++i) g(i) = cost(i) + std::log(q(i) / prev(i));
    return g;
  }
};

// Central-path point for barrier weight 1/t, by damped Newton in the null space of A.
bool barrier_center(const MirrorProblem& pb, const MatrixXd& z, VectorXd& q, double t) {
  const Eigen::Index n = q.size();
  auto phi = [&](const VectorXd& v, double& out) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(v(i) - pb.alpha > 0.0)) return false;
      s -= std::log(v(i) - pb.alpha);
    }
    if (pb.cap) {
      const double slack = *pb.cap - v.sum();
      if (!(slack > 0.0)) return false;
      s -= std::log(slack);
    }
    out = pb.f(v) + s / t;
    return true;
  };
  double cur = 0.0;
  if (!phi(q, cur)) return false;
  for (int it = 0; it < 200; ++it) {
    VectorXd g = pb.grad(q);
    VectorXd h(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = q(i) - pb.alpha;
      g(i) -= 1.0 / (t * s);
      h(i) = 1.0 / q(i) + 1.0 / (t * s * s);
    }
    MatrixXd hz = h.asDiagonal() * z;
    MatrixXd red = z.transpose() * hz;
    VectorXd gy = z.transpose() * g;
    if (pb.cap) {
      const double slack = *pb.cap - q.sum();
      VectorXd ones_z = z.transpose() * VectorXd::Ones(n);
      gy += ones_z / (t * slack);
      red += ones_z * ones_z.transpose() / (t * slack * slack);
    }
    VectorXd dy = -red.ldlt().solve(gy);
    const double decrement = -gy.dot(dy);
    if (decrement < 1e-24) return true;
    VectorXd dq = z * dy;
    double step = 1.0, next = 0.0;
    while (step > 1e-20) {
      VectorXd trial = q + step * dq;
      if (phi(trial, next) && next <= cur - 0.25 * step * decrement) break;
      step *= 0.5;
    }
    if (step <= 1e-20) return true;  // no further progress at this precision
    q += step * dq;
    cur = next;
  }
  return true;
}

// Equality-constrained Newton with an identified active set; returns false if the guess is
// inconsistent (a free variable leaves the bound or a multiplier has the wrong sign).
bool polish(const MirrorProblem& pb, const MatrixXd& a, const VectorXd& b, VectorXd& q) {
  const Eigen::Index n = q.size();
  std::vector<Eigen::Index> fixed;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (q(i) - pb.alpha < 1e-7 * std::max(1.0, pb.alpha)) fixed.push_back(i);
  }
  const bool cap_active = pb.cap && (*pb.cap - q.sum()) < 1e-7 * std::max(1.0, *pb.cap);
  const Eigen::Index m = a.rows() + static_cast<Eigen::Index>(fixed.size()) + (cap_active ? 1 : 0);
  MatrixXd c = MatrixXd::Zero(m, n);
  VectorXd d = VectorXd::Zero(m);
  c.topRows(a.rows()) = a;
  d.head(a.rows()) = b;
  Eigen::Index r = a.rows();
  for (auto i : fixed) {
    c(r, i) = 1.0;
    d(r++) = pb.alpha;
  }
  if (cap_active) {
    c.row(r).setOnes();
    d(r) = *pb.cap;
  }
  for (auto i : fixed) q(i) = pb.alpha;
  VectorXd lambda;
  for (int it = 0; it < 100; ++it) {
    VectorXd g = pb.grad(q);
    MatrixXd kkt = MatrixXd::Zero(n + m, n + m);
    for (Eigen::Index i = 0; i < n; ++i) kkt(i, i) = 1.0 / q(i);
    kkt.topRightCorner(n, m) = c.transpose();
    kkt.bottomLeftCorner(m, n) = c;
    VectorXd rhs(n + m);
    rhs.head(n) = -g;
    rhs.tail(m) = d - c * q;
    VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    VectorXd dq = sol.head(n);
    lambda = sol.tail(m);
    double step = 1.0;
    while ((q + step * dq).minCoeff() <= 0.0) step *= 0.5;
    q += step * dq;
    if (dq.lpNorm<Eigen::Infinity>() < 1e-15 * std::max(1.0, q.lpNorm<Eigen::Infinity>())) break;
  }
  // Stationarity: grad f + C^T lambda = 0, so bound multipliers are -lambda (must be >= 0).
  for (Eigen::Index i = 0; i < n; ++i) {
    if (q(i) < pb.alpha - 1e-12) return false;
  }
  if (pb.cap && q.sum() > *pb.cap + 1e-10) return false;
  Eigen::Index r2 = a.rows();
  for (std::size_t k = 0; k < fixed.size(); ++k) {
    if (-lambda(r2++) < -1e-8) return false;
  }
  if (cap_active && -lambda(r2) < -1e-8) return false;
  return (c * q - d).lpNorm<Eigen::Infinity>() < 1e-10;
}

}  // namespace

double mirror_objective(std::span<const double> q, std::span<const double> q_prev, std::span<const double> gradient,
                        std::span<const double> eta) {
  double v = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    v += eta_of(eta, i) * gradient[i] * q[i] + q[i] * std::log(q[i] / q_prev[i]) - q[i] + q_prev[i];
  }
  return v;
}

OccupancyMeasure brute_force_projection(const OccupancyMeasure& q_prev, std::span<const double> gradient,
                                        std::span<const double> eta, const OccupancySpace& space) {
  const std::size_t n = q_prev.size();
  if (n != space.dimension() || gradient.size() != n) throw Error(ErrorCode::ShapeMismatch, "oracle dimensions");
  MirrorProblem pb;
  pb.cost.resize(static_cast<Eigen::Index>(n));
  pb.prev.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    pb.cost(static_cast<Eigen::Index>(i)) = eta_of(eta, i) * gradient[i];
    pb.prev(static_cast<Eigen::Index>(i)) = q_prev[i];
  }
  pb.alpha = space.alpha();
  pb.cap = space.horizon();

  MatrixXd a;
  VectorXd b;
  equality_system(space, a, b);
  Eigen::FullPivLU<MatrixXd> lu(a);
  const MatrixXd z = lu.kernel();

  // Strictly feasible start: the uniform policy's occupancy pulled toward its layer/state
  // averages is interior for the instances this oracle is meant for; verify it.
  VectorXd q = VectorXd::Map(occupancy_of_policy(space.mdp(), Policy::uniform(space.mdp().num_states(),
                                                                               space.mdp().num_actions()))
                                 .values()
                                 .data(),
                             static_cast<Eigen::Index>(n));
  if (q.minCoeff() <= pb.alpha || (pb.cap && q.sum() >= *pb.cap)) {
    throw Error(ErrorCode::NonConvergent, "oracle needs the uniform occupancy strictly inside the space");
  }
  double t = 1.0;
  const double m_ineq = static_cast<double>(n) + (pb.cap ? 1.0 : 0.0);
  while (m_ineq / t > 1e-11) {
    if (!barrier_center(pb, z, q, t)) throw Error(ErrorCode::NonConvergent, "barrier iterate left the domain");
    t *= 8.0;
  }
  VectorXd polished = q;
  if (polish(pb, a, b, polished) && pb.f(polished) <= pb.f(q) + 1e-12) q = polished;
  return OccupancyMeasure(q_prev.num_states(), q_prev.num_actions(), std::vector<double>(q.data(), q.data() + q.size()));
}

// ---------------------------------------------------------------- mixing

std::vector<double> policy_matrix(const MdpModel& mdp, const Policy& pi) {
  const std::size_t n = mdp.num_states();
  std::vector<double> m(n * n, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      for (const auto& t : mdp.successors(x, a)) {
        if (t.next != kGoal) m[x * n + static_cast<std::size_t>(t.next)] += pi(x, a) * t.prob;
      }
    }
  }
  return m;
}

double pairwise_contraction(std::span<const double> matrix, std::size_t n) {
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += std::abs(matrix[i * n + k] - matrix[j * n + k]);
      worst = std::max(worst, 0.5 * s);
    }
  }
  return std::min(worst, 1.0);
}

ContractionEstimate contraction_rate(const MdpModel& mdp, std::span<const Policy> policies, std::size_t max_power) {
  if (mdp.setting() != Setting::InfiniteHorizon) throw Error(ErrorCode::InvalidParams, "contraction needs an infinite-horizon model");
  const std::size_t n = mdp.num_states();
  const auto N = static_cast<Eigen::Index>(n);
  ContractionEstimate est;
  for (const auto& pi : policies) {
    auto m = policy_matrix(mdp, pi);
    const double one = pairwise_contraction(m, n);
    est.one_step_factor = std::max(est.one_step_factor, one);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> p =
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(m.data(), N, N);
    double best = kInfinity;
    for (std::size_t k = 1; k <= max_power; k *= 2) {
      const double beta = pairwise_contraction({p.data(), n * n}, n);
      if (beta < 1.0) best = std::min(best, static_cast<double>(k) / (1.0 - beta) - 1.0);
      if (beta == 0.0) break;
      p = (p * p).eval();
    }
    est.multi_step_tau = std::max(est.multi_step_tau, best);
  }
  if (est.one_step_factor >= 1.0) {
    est.one_step_tau = kInfinity;
  } else if (est.one_step_factor <= 0.0) {
    est.one_step_tau = 0.0;
  } else {
    est.one_step_tau = -1.0 / std::log(est.one_step_factor);
  }
  return est;
}

double measured_mixing_time(const MdpModel& mdp) {
  const Policy uniform = Policy::uniform(mdp.num_states(), mdp.num_actions());
  return contraction_rate(mdp, std::span<const Policy>(&uniform, 1)).multi_step_tau;
}

Policy random_policy(std::size_t num_states, std::size_t num_actions, Rng& rng) {
  std::vector<double> p(num_states * num_actions);
  for (std::size_t x = 0; x < num_states; ++x) {
    double s = 0.0;
    for (std::size_t a = 0; a < num_actions; ++a) s += p[x * num_actions + a] = 0.02 + uniform01(rng);
    for (std::size_t a = 0; a < num_actions; ++a) p[x * num_actions + a] /= s;
  }
  return Policy(num_states, num_actions, std::move(p));
}

// ---------------------------------------------------------------- bound suites

namespace {

// Second policy of a trial pair: the first one moved toward a random policy on a random subset
// of states, with a random strength.
Policy perturbed(const Policy& pi, Rng& rng) {
  const std::size_t nx = pi.num_states(), na = pi.num_actions();
  Policy other = random_policy(nx, na, rng);
  const double strength = uniform01(rng);
  const double share = uniform01(rng);
  std::vector<double> v = pi.values();
  for (std::size_t x = 0; x < nx; ++x) {
    if (uniform01(rng) > share) continue;
    for (std::size_t a = 0; a < na; ++a) v[x * na + a] = (1.0 - strength) * pi(x, a) + strength * other(x, a);
  }
  // renormalize rows against rounding
  for (std::size_t x = 0; x < nx; ++x) {
    double s = 0.0;
    for (std::size_t a = 0; a < na; ++a) s += v[x * na + a];
    for (std::size_t a = 0; a < na; ++a) v[x * na + a] /= s;
  }
  return Policy(nx, na, std::move(v));
}

}  // namespace

OracleResult check_pathlength_loopfree(std::size_t trials, std::uint64_t seed) {
  OracleResult res{"pathlength-loopfree", 0, 0.0, 1e-9, false, ""};
  const MdpModel mdp = build_loopfree_grid({});
  const double H = static_cast<double>(mdp.layer_count());
  Rng rng(seed);
  double tightest = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<Policy> seq{random_policy(mdp.num_states(), mdp.num_actions(), rng)};
    seq.push_back(perturbed(seq[0], rng));
    std::vector<OccupancyMeasure> occ{occupancy_of_policy(mdp, seq[0]), occupancy_of_policy(mdp, seq[1])};
    const double p = path_length_policies(seq, &mdp.layers());
    const double pbar = path_length_occupancy(occ);
    res.max_violation = std::max(res.max_violation, pbar - H * p);
    if (p > 0.0) tightest = std::max(tightest, pbar / (H * p));
    ++res.instances;
  }
  res.detail = "H=" + num(mdp.layer_count()) + ", largest ratio Pbar/(H P)=" + num(tightest);
  res.finish();
  return res;
}

OracleResult check_pathlength_infinite(std::size_t trials, std::uint64_t seed) {
  OracleResult res{"pathlength-infinite", 0, 0.0, 1e-9, false, ""};
  GridSpec spec;
  spec.variant = GridVariant::Infinite;
  const MdpModel mdp = build_infinite_grid(spec);
  Rng rng(seed);
  std::vector<std::pair<Policy, Policy>> pairs;
  std::vector<Policy> leading;
  for (std::size_t t = 0; t < trials; ++t) {
    Policy pi = random_policy(mdp.num_states(), mdp.num_actions(), rng);
    Policy other = perturbed(pi, rng);
    leading.push_back(pi);
    pairs.emplace_back(std::move(pi), std::move(other));
  }
  // Bound constant: the largest multi-step estimate over every policy whose chain appears.
  const double tau = contraction_rate(mdp, leading).multi_step_tau;
  double tightest = 0.0;
  for (const auto& [pi, other] : pairs) {
    const auto d1 = stationary_distribution(mdp, pi), d2 = stationary_distribution(mdp, other);
    double dd = 0.0;
    for (std::size_t x = 0; x < d1.size(); ++x) dd += std::abs(d1[x] - d2[x]);
    const double gap = policy_distance(pi, other);
    std::vector<OccupancyMeasure> occ{occupancy_of_policy(mdp, pi), occupancy_of_policy(mdp, other)};
    std::vector<Policy> seq{pi, other};
    const double p = path_length_policies(seq), pbar = path_length_occupancy(occ);
    res.max_violation = std::max({res.max_violation, dd - (tau + 1.0) * gap, pbar - (tau + 2.0) * p});
    if (gap > 0.0) tightest = std::max(tightest, dd / gap);
    ++res.instances;
  }
  res.detail = "tau=" + num(tau) + ", largest ||d-d'||/||pi-pi'||=" + num(tightest);
  res.finish();
  return res;
}

MdpModel counterexample_mdp(std::size_t c) {
  if (c < 1) throw Error(ErrorCode::InvalidParams, "c must be at least 1");
  const std::size_t n = 2 * c;  // chain x_1..x_n after x_0
  std::vector<std::vector<Transition>> kernel((n + 1) * 2);
  kernel[0] = {{kGoal, 1.0}};
  kernel[1] = {{1, 1.0}};
  for (std::size_t i = 1; i <= n; ++i) {
    const int next = i == n ? kGoal : static_cast<int>(i + 1);
    kernel[i * 2] = {{next, 1.0}};
    kernel[i * 2 + 1] = {{next, 1.0}};
  }
  return MdpModel(n + 1, 2, std::move(kernel), 0, SspVariant{});
}

OracleResult ssp_counterexample(std::size_t c, double h_star) {
  if (c < 1 || !(h_star > 1.0)) throw Error(ErrorCode::InvalidParams, "needs c >= 1 and H_star > 1");
  const std::size_t n = 2 * c;
  const double eps = (h_star - 1.0) / static_cast<double>(n);
  if (eps > 1.0) throw Error(ErrorCode::InvalidParams, "H_star exceeds the chain length plus one");
  OracleResult res{"ssp-counterexample-c" + num(c), 0, 0.0, 1e-10, false, ""};
  const MdpModel mdp = counterexample_mdp(c);
  std::vector<std::size_t> first(n + 1, 0);
  const Policy pi = Policy::deterministic(2, first);
  std::vector<double> v = pi.values();
  v[0] = 1.0 - eps;
  v[1] = eps;
  const Policy other(n + 1, 2, v);

  const auto q1 = occupancy_of_policy(mdp, pi), q2 = occupancy_of_policy(mdp, other);
  const double gap = policy_distance(pi, other);
  const double occ_gap = l1_distance(q1, q2);
  res.max_violation = std::max(res.max_violation, std::abs(gap - 2.0 * eps));
  res.max_violation = std::max(res.max_violation, std::abs(occ_gap - (static_cast<double>(c) + 1.0) * gap));
  res.max_violation = std::max(res.max_violation, std::abs(hitting_time(mdp, other)[0] - h_star));
  res.max_violation = std::max(res.max_violation, std::abs(hitting_time(mdp, pi)[0] - 1.0));

  // Alternating sequence over K rounds.
  const std::size_t K = 20;
  std::vector<Policy> seq;
  std::vector<OccupancyMeasure> occ;
  for (std::size_t k = 0; k < K; ++k) {
    seq.push_back(k % 2 == 0 ? pi : other);
    occ.push_back(k % 2 == 0 ? q1 : q2);
  }
  const double P = path_length_policies(seq), Pbar = path_length_occupancy(occ);
  res.max_violation = std::max(res.max_violation, static_cast<double>(c) * P - Pbar);
  res.instances = K;
  res.detail = "P=" + num(P) + ", Pbar=" + num(Pbar) + ", ratio=" + num(P > 0 ? Pbar / P : 0.0);
  res.finish();
  return res;
}

// ---------------------------------------------------------------- reduction

OracleResult check_reduction(const ReductionOptions& opt) {
  OracleResult res{"reduction", 0, -kInfinity, 0.0, false, ""};
  GridSpec spec;
  spec.variant = GridVariant::Infinite;
  const MdpModel base = build_infinite_grid(spec);
  const double tau = measured_mixing_time(base);
  auto mdp = std::make_shared<const MdpModel>(base.with_mixing_time(tau));
  double smallest_slack = kInfinity;
  for (std::size_t s = 0; s < opt.seeds; ++s) {
    const std::uint64_t seed = derive_seed(opt.seed, s);
    const auto losses = piecewise_losses(*mdp, {opt.period, LossScheme::RandomActionPerState, seed}, opt.steps);
    const auto comparators = piecewise_comparator(*mdp, losses, opt.period);
    LearnerConfig lc;
    lc.algorithm = Algorithm::RedoReps;
    lc.rounds = opt.steps;
    auto learner = make_learner(mdp, lc);
    Rng rng(seed);
    RegretReport rep;
    std::vector<Policy> played;
    OccupancyMeasure previous, comparator_occ;
    for (std::size_t t = 0; t < opt.steps; ++t) {
      auto out = learner->round(losses[t], rng);
      rep.expected_loss.push_back(inner(out.expected, losses[t]));
      if (t % opt.period == 0) comparator_occ = occupancy_of_policy(*mdp, comparators[t]);
      rep.comparator_loss.push_back(inner(comparator_occ, losses[t]));
      rep.switch_cost.push_back(t == 0 ? 0.0 : l1_distance(out.expected, previous));
      previous = out.expected;
      played.push_back(out.policy);
    }
    rep.path_length = path_length_policies(comparators);
    const double rhs = reduction_rhs(rep, tau);

    // Monte Carlo regret: learner and comparator trajectories from x0, paired by rollout.
    std::vector<double> diffs;
    for (std::size_t r = 0; r < opt.rollouts; ++r) {
      Rng roll(derive_seed(seed, 7919 + r));
      std::size_t x = mdp->initial_state(), y = mdp->initial_state();
      double d = 0.0;
      for (std::size_t t = 0; t < opt.steps; ++t) {
        const std::size_t a = sample_action(played[t], x, roll);
        d += losses[t](x, a);
        x = static_cast<std::size_t>(sample_next(*mdp, x, a, roll));
        const std::size_t b = sample_action(comparators[t], y, roll);
        d -= losses[t](y, b);
        y = static_cast<std::size_t>(sample_next(*mdp, y, b, roll));
      }
      diffs.push_back(d);
    }
    const double R = static_cast<double>(diffs.size());
    const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / R;
    double var = 0.0;
    for (double d : diffs) var += (d - mean) * (d - mean);
    const double se = R > 1 ? std::sqrt(var / (R - 1.0) / R) : 0.0;
    res.max_violation = std::max(res.max_violation, mean - (rhs + 3.0 * se));
    smallest_slack = std::min(smallest_slack, rhs + 3.0 * se - mean);
    ++res.instances;
  }
  res.detail = "tau=" + num(tau) + ", T=" + num(opt.steps) +
               ", smallest slack RHS+3SE-LHS=" + num(smallest_slack);
  res.finish();
  return res;
}

// ---------------------------------------------------------------- projection and round-trip suites

namespace {

std::vector<double> random_row(Rng& rng, std::size_t n) {
  std::vector<double> p(n);
  double s = 0.0;
  for (double& v : p) s += v = 0.05 + uniform01(rng);
  for (double& v : p) v /= s;
  return p;
}

MdpModel random_loopfree(Rng& rng) {
  const std::size_t na = 2 + uniform_index(rng, 3);
  const std::size_t layers = 2 + uniform_index(rng, 2);
  std::vector<std::vector<std::size_t>> layer_sets{{0}};
  std::size_t count = 1;
  for (std::size_t l = 1; l < layers; ++l) {
    std::size_t width = 1 + uniform_index(rng, 2);
    while (count + width > 6) --width;
    std::vector<std::size_t> set;
    for (std::size_t i = 0; i < width; ++i) set.push_back(count++);
    layer_sets.push_back(set);
  }
  while (count * na > 24) --count;  // keep at most 24 variables (never binds for these sizes)
  std::vector<std::vector<Transition>> kernel(count * na);
  for (std::size_t l = 0; l < layer_sets.size(); ++l) {
    for (std::size_t x : layer_sets[l]) {
      for (std::size_t a = 0; a < na; ++a) {
        if (l + 1 == layer_sets.size()) {
          kernel[x * na + a] = {{kGoal, 1.0}};
          continue;
        }
        const auto& next = layer_sets[l + 1];
        auto p = random_row(rng, next.size());
        for (std::size_t i = 0; i < next.size(); ++i) kernel[x * na + a].push_back({static_cast<int>(next[i]), p[i]});
      }
    }
  }
  return MdpModel(count, na, std::move(kernel), 0, LoopFreeVariant{layer_sets});
}

MdpModel random_ssp(Rng& rng) {
  const std::size_t nx = 2 + uniform_index(rng, 4), na = 2 + uniform_index(rng, 2);
  std::vector<std::vector<Transition>> kernel(nx * na);
  for (auto& row : kernel) {
    auto p = random_row(rng, nx + 1);  // last entry is the goal
    for (std::size_t i = 0; i < nx; ++i) row.push_back({static_cast<int>(i), p[i]});
    row.push_back({kGoal, p[nx]});
  }
  return MdpModel(nx, na, std::move(kernel), 0, SspVariant{});
}

MdpModel random_ergodic(Rng& rng) {
  const std::size_t nx = 2 + uniform_index(rng, 5), na = 2 + uniform_index(rng, 3);
  std::vector<std::vector<Transition>> kernel(nx * na);
  for (auto& row : kernel) {
    auto p = random_row(rng, nx);
    for (std::size_t i = 0; i < nx; ++i) row.push_back({static_cast<int>(i), p[i]});
  }
  return MdpModel(nx, na, std::move(kernel), 0, InfiniteHorizonVariant{0.0});
}

double linf(const OccupancyMeasure& a, const OccupancyMeasure& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

std::vector<OracleResult> check_projection_suite(std::size_t instances_per_family, std::uint64_t seed) {
  OracleResult match{"projection-oracle", 0, 0.0, 1e-6, false, ""};
  OracleResult kkt{"projection-kkt", 0, 0.0, 1e-8, false, ""};
  Rng rng(seed);
  std::size_t active_instances = 0, cap_instances = 0;
  for (int family = 0; family < 3; ++family) {
    for (std::size_t k = 0; k < instances_per_family; ++k) {
      std::shared_ptr<const MdpModel> mdp;
      if (family == 0) mdp = std::make_shared<const MdpModel>(random_loopfree(rng));
      if (family == 1) mdp = std::make_shared<const MdpModel>(random_ssp(rng));
      if (family == 2) mdp = std::make_shared<const MdpModel>(random_ergodic(rng));
      const std::size_t nx = mdp->num_states(), na = mdp->num_actions();
      const auto q_uniform = occupancy_of_policy(*mdp, Policy::uniform(nx, na));
      const auto q_random = occupancy_of_policy(*mdp, random_policy(nx, na, rng));
      const double low = *std::min_element(q_uniform.values().begin(), q_uniform.values().end());
      // a third of the instances use a tiny floor; the rest can hit it
      const double share = k % 3 == 0 ? 1e-6 : 0.3 + 0.6 * uniform01(rng);
      const double alpha = share * low;
      const double lambda = std::max(share, 0.5);
      std::vector<double> prev(nx * na);
      for (std::size_t i = 0; i < prev.size(); ++i) prev[i] = lambda * q_uniform[i] + (1.0 - lambda) * q_random[i];
      const OccupancyMeasure q_prev(nx, na, prev);

      std::optional<OccupancySpace> space;
      if (family == 0) space.emplace(OccupancySpace::loop_free(mdp, alpha));
      if (family == 1) {
        const double top = std::max({q_uniform.total_mass(), q_random.total_mass(), q_prev.total_mass()});
        space.emplace(OccupancySpace::ssp_capped(mdp, top * (1.02 + 0.5 * uniform01(rng)), alpha));
      }
      if (family == 2) space.emplace(OccupancySpace::infinite(mdp, alpha));

      std::vector<double> loss(nx * na), hint(nx * na);
      for (auto& v : loss) v = uniform01(rng);
      for (auto& v : hint) v = uniform01(rng);
      const LossFunction l(nx, na, loss), m(nx, na, hint);
      const double eta = 0.05 + 3.0 * uniform01(rng);
      const double small_eta[1] = {1.0 / 32.0 * (0.2 + 0.8 * uniform01(rng))};
      const double big_eta[1] = {eta};

      auto plain = omd_step(q_prev, l, eta, *space);
      auto corrected = corrected_omd_step(q_prev, m, l, small_eta, *space);
      auto a = correction_term(loss, hint, small_eta);
      std::vector<double> g(loss.size());
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = loss[i] + a[i];

      const auto o_plain = brute_force_projection(q_prev, loss, big_eta, *space);
      const auto o_play = brute_force_projection(q_prev, hint, small_eta, *space);
      const auto o_next = brute_force_projection(q_prev, g, small_eta, *space);
      // signed gradient: pushes mass up, so the SSP cap binds
      std::vector<double> signed_g(loss.size());
      for (auto& v : signed_g) v = 2.0 * uniform01(rng) - 1.5;
      auto lifted = mirror_step(q_prev, signed_g, big_eta, *space);
      const auto o_lifted = brute_force_projection(q_prev, signed_g, big_eta, *space);
      if (lifted.certificate.cap_active) ++cap_instances;
      kkt.max_violation = std::max(kkt.max_violation, lifted.certificate.kkt_residual);
      match.max_violation = std::max({match.max_violation, linf(plain.q, o_plain), linf(corrected.play.q, o_play),
                                      linf(corrected.next.q, o_next), linf(lifted.q, o_lifted)});
      kkt.max_violation = std::max({kkt.max_violation, plain.certificate.kkt_residual,
                                    corrected.play.certificate.kkt_residual, corrected.next.certificate.kkt_residual});
      if (!plain.certificate.active_constraints.empty()) ++active_instances;
      match.instances += 4;
      kkt.instances += 4;
    }
  }
  match.detail = num(active_instances) + " plain steps with active lower bounds, " +
                 num(cap_instances) + " signed-gradient steps with an active cap";
  match.finish();
  kkt.finish();
  return {match, kkt};
}

OracleResult check_projection_oracle(std::size_t instances_per_family, std::uint64_t seed) {
  auto both = check_projection_suite(instances_per_family, seed);
  OracleResult r = both[0];
  r.pass = both[0].pass && both[1].pass;
  r.detail += "; max KKT residual " + num(both[1].max_violation);
  return r;
}

OracleResult check_round_trip(std::size_t points, std::uint64_t seed) {
  OracleResult res{"round-trip", 0, 0.0, 1e-8, false, ""};
  std::vector<std::shared_ptr<const MdpModel>> models;
  GridSpec spec;
  models.push_back(std::make_shared<const MdpModel>(build_loopfree_grid(spec)));
  spec.variant = GridVariant::CircleSsp;
  models.push_back(std::make_shared<const MdpModel>(build_circle_ssp(spec)));
  spec.variant = GridVariant::Infinite;
  models.push_back(std::make_shared<const MdpModel>(build_infinite_grid(spec)));
  Rng rng(seed);
  double worst[3] = {0.0, 0.0, 0.0};
  for (std::size_t p = 0; p < points; ++p) {
    const std::size_t which = p % 3;
    const auto& mdp = *models[which];
    const std::size_t nx = mdp.num_states(), na = mdp.num_actions();
    // policy -> occupancy -> policy
    const Policy pi = random_policy(nx, na, rng);
    const auto q = occupancy_of_policy(mdp, pi);
    double v = 0.0;
    const Policy back = induced_policy(q);
    for (std::size_t i = 0; i < pi.size(); ++i) v = std::max(v, std::abs(pi[i] - back[i]));
    // interior occupancy (mixture of three) -> policy -> occupancy
    std::vector<double> mix(nx * na, 0.0);
    auto w = random_row(rng, 3);
    for (double wi : w) {
      const auto qi = occupancy_of_policy(mdp, random_policy(nx, na, rng));
      for (std::size_t i = 0; i < mix.size(); ++i) mix[i] += wi * qi[i];
    }
    const OccupancyMeasure qm(nx, na, mix);
    const auto again = occupancy_of_policy(mdp, induced_policy(qm));
    for (std::size_t i = 0; i < mix.size(); ++i) v = std::max(v, std::abs(mix[i] - again[i]) / std::max(1.0, std::abs(mix[i])));
    worst[which] = std::max(worst[which], v);
    res.max_violation = std::max(res.max_violation, v);
    ++res.instances;
  }
  res.detail = "worst loop-free " + num(worst[0]) + ", ssp " + num(worst[1]) + ", infinite " +
               num(worst[2]);
  res.finish();
  return res;
}

std::vector<OracleResult> run_suite(const std::string& name, std::uint64_t seed) {
  std::vector<OracleResult> out;
  const bool all = name == "all";
  bool known = all;
  if (all || name == "projection") {
    known = true;
    for (auto& r : check_projection_suite(200, seed)) out.push_back(r);
  }
  if (all || name == "roundtrip") {
    known = true;
    out.push_back(check_round_trip(500, seed));
  }
  if (all || name == "pathlength") {
    known = true;
    out.push_back(check_pathlength_loopfree(1000, seed));
    out.push_back(check_pathlength_infinite(1000, seed));
  }
  if (all || name == "counterexample") {
    known = true;
    for (std::size_t c : {1, 2, 5, 10}) out.push_back(ssp_counterexample(c, 2.0));
  }
  if (all || name == "reduction") {
    known = true;
    out.push_back(check_reduction({100, 100, 20, 10, seed}));
  }
  if (!known) throw Error(ErrorCode::ConfigError, "unknown suite '" + name + "'");
  return out;
}

}  // namespace oreps
