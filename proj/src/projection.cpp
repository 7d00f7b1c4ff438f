#include "oreps/projection.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

namespace oreps {

// ---------------------------------------------------------------- spaces

OccupancySpace::OccupancySpace(SpaceFamily family, std::shared_ptr<const MdpModel> mdp, double alpha,
                               std::optional<double> horizon)
    : family_(family), mdp_(std::move(mdp)), alpha_(alpha), horizon_(horizon) {
  if (!mdp_) throw Error(ErrorCode::InvalidParams, "space without an MDP");
  if (!(alpha_ > 0.0 && alpha_ < 1.0)) throw Error(ErrorCode::InvalidParams, "alpha must lie in (0,1)");
  build_rows();
  check_feasible();
}

OccupancySpace OccupancySpace::loop_free(std::shared_ptr<const MdpModel> mdp, double alpha) {
  if (!mdp || mdp->setting() != Setting::LoopFree) throw Error(ErrorCode::InvalidParams, "loop-free space needs a loop-free MDP");
  return OccupancySpace(SpaceFamily::LoopFreeClipped, std::move(mdp), alpha, std::nullopt);
}

OccupancySpace OccupancySpace::ssp_capped(std::shared_ptr<const MdpModel> mdp, double horizon, double alpha) {
  if (!mdp || !mdp->has_goal()) throw Error(ErrorCode::InvalidParams, "capped space needs an MDP with a goal");
  if (!(horizon >= 1.0)) throw Error(ErrorCode::InvalidParams, "horizon cap must be at least 1");
  return OccupancySpace(SpaceFamily::SspCapped, std::move(mdp), alpha, horizon);
}

OccupancySpace OccupancySpace::infinite(std::shared_ptr<const MdpModel> mdp, double alpha) {
  if (!mdp || mdp->setting() != Setting::InfiniteHorizon) throw Error(ErrorCode::InvalidParams, "stationary space needs an infinite-horizon MDP");
  return OccupancySpace(SpaceFamily::InfiniteStationary, std::move(mdp), alpha, std::nullopt);
}

void OccupancySpace::build_rows() {
  const MdpModel& m = *mdp_;
  const std::size_t nx = m.num_states(), na = m.num_actions();
  columns_.assign(nx * na, {});

  // Row x: outflow(x) - inflow(x) = source(x). The infinite-horizon family drops the last
  // stationarity row (it is implied by the others) and appends sum q = 1.
  const bool stationary = family_ == SpaceFamily::InfiniteStationary;
  const std::size_t flow_rows = stationary ? nx - 1 : nx;
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t a = 0; a < na; ++a) {
      auto& col = columns_[m.pair(x, a)];
      auto add = [&col](std::size_t row, double c) {
        for (auto& e : col) {
          if (e.row == row) {
            e.coeff += c;
            return;
          }
        }
        col.push_back({row, c});
      };
      if (x < flow_rows) add(x, 1.0);
      for (const auto& t : m.successors(x, a)) {
        if (t.next == kGoal || t.prob == 0.0) continue;
        auto y = static_cast<std::size_t>(t.next);
        if (y < flow_rows) add(y, -t.prob);
      }
      if (stationary) add(flow_rows, 1.0);
      std::erase_if(col, [](const ColumnEntry& e) { return e.coeff == 0.0; });
    }
  }
  if (stationary) {
    rhs_.assign(nx, 0.0);
    rhs_[flow_rows] = 1.0;
  } else {
    rhs_.assign(nx, 0.0);
    rhs_[m.initial_state()] = 1.0;
  }
}

double OccupancySpace::violation(std::span<const double> q) const {
  if (q.size() != dimension()) throw Error(ErrorCode::ShapeMismatch, "occupancy dimension");
  std::vector<double> residual(rhs_.size());
  for (std::size_t r = 0; r < rhs_.size(); ++r) residual[r] = -rhs_[r];
  double worst = 0.0, mass = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    for (const auto& e : columns_[i]) residual[e.row] += e.coeff * q[i];
    worst = std::max(worst, alpha_ - q[i]);
    mass += q[i];
  }
  for (double r : residual) worst = std::max(worst, std::abs(r));
  if (horizon_) worst = std::max(worst, mass - *horizon_);
  if (family_ == SpaceFamily::LoopFreeClipped) {
    const std::size_t na = mdp_->num_actions();
    for (const auto& layer : mdp_->layers()) {
      double lm = 0.0;
      for (std::size_t x : layer) {
        for (std::size_t a = 0; a < na; ++a) lm += q[x * na + a];
      }
      worst = std::max(worst, std::abs(lm - 1.0));
    }
  }
  return worst;
}

bool OccupancySpace::contains(const OccupancyMeasure& q, double tol) const {
  return violation(q.values()) <= tol;
}

OccupancyMeasure OccupancySpace::make(std::vector<double> q) const {
  return OccupancyMeasure(mdp_->num_states(), mdp_->num_actions(), std::move(q));
}

double ssp_certified_min_mass(const MdpModel& mdp, double alpha) {
  auto fast = fast_policy(mdp);
  OccupancyMeasure qf = occupancy_of_policy(mdp, fast.policy);
  OccupancyMeasure qu = occupancy_of_policy(mdp, Policy::uniform(mdp.num_states(), mdp.num_actions()));
  double min_u = *std::min_element(qu.values().begin(), qu.values().end());
  if (!(min_u > 0.0)) return kInfinity;
  double lambda = alpha / min_u;
  if (lambda > 1.0) return kInfinity;
  return (1.0 - lambda) * qf.total_mass() + lambda * qu.total_mass();
}

void OccupancySpace::check_feasible() {
  const MdpModel& m = *mdp_;
  if (family_ == SpaceFamily::LoopFreeClipped) {
    for (const auto& layer : m.layers()) {
      if (alpha_ * static_cast<double>(layer.size() * m.num_actions()) > 1.0) {
        throw Error(ErrorCode::InfeasibleSpace, "alpha exceeds 1/(|X_l||A|) on some layer");
      }
    }
  }
  // Cheap certificate: the uniform policy's occupancy (mixed with the fast policy when capped).
  Policy uniform = Policy::uniform(m.num_states(), m.num_actions());
  OccupancyMeasure qu = occupancy_of_policy(m, uniform);
  double min_u = *std::min_element(qu.values().begin(), qu.values().end());
  if (family_ == SpaceFamily::SspCapped) {
    if (min_u >= alpha_ && qu.total_mass() <= *horizon_) return;
    if (ssp_certified_min_mass(m, alpha_) <= *horizon_) return;
  } else if (min_u >= alpha_) {
    return;
  }
  // Feasibility program: the entropy projection converges iff the polytope is nonempty.
  try {
    (void)min_entropy_point(*this);
  } catch (const Error& e) {
    throw Error(ErrorCode::InfeasibleSpace, std::string("feasibility program failed: ") + e.what());
  }
}

// ---------------------------------------------------------------- dual solver

namespace {

constexpr double kExpCeiling = 700.0;

std::string format_residual(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", r);
  return buf;
}
constexpr double kUnboundedDual = -1e13;

// Dual of  min sum_i [q_i log(q_i/t_i) - q_i]  s.t.  A q = b,  q >= alpha,  (sum q <= H).
// For multipliers y the minimizing q is q_i = max(alpha, t_i exp((A^T y)_i)), so the dual
// objective phi(y) = sum_i Phi_i((A^T y)_i) - y^T b is convex and C^1 with gradient A q - b.
class DualProblem {
 public:
  DualProblem(const OccupancySpace& space, std::span<const double> log_target)
      : space_(space), lt_(log_target), alpha_(space.alpha()), log_alpha_(std::log(space.alpha())) {}

  void set_cap(bool on) { cap_on_ = on; }
  bool cap_on() const { return cap_on_; }
  std::size_t rows() const { return space_.num_rows() + (cap_on_ ? 1 : 0); }
  std::size_t cap_row() const { return space_.num_rows(); }

  // Returns phi(y); fills q and the clamped mask. +inf on exponent overflow.
  double evaluate(const Eigen::VectorXd& y, std::vector<double>& q, std::vector<char>& clamped) const {
    const auto& cols = space_.columns();
    const std::size_t n = cols.size();
    q.resize(n);
    clamped.resize(n);
    const double nu = cap_on_ ? y(static_cast<long>(cap_row())) : 0.0;
    double phi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double z = -nu;
      for (const auto& e : cols[i]) z += e.coeff * y(static_cast<long>(e.row));
      double expo = lt_[i] + z;
      if (expo > kExpCeiling) return std::numeric_limits<double>::infinity();
      if (expo < log_alpha_) {
        q[i] = alpha_;
        clamped[i] = 1;
        phi += alpha_ * (z + lt_[i] - log_alpha_ + 1.0);
      } else {
        q[i] = std::exp(expo);
        clamped[i] = 0;
        phi += q[i];
      }
    }
    const auto& b = space_.rhs();
    for (std::size_t r = 0; r < b.size(); ++r) phi -= y(static_cast<long>(r)) * b[r];
    if (cap_on_) phi += nu * *space_.horizon();
    return phi;
  }

  Eigen::VectorXd gradient(const std::vector<double>& q) const {
    const auto& cols = space_.columns();
    const auto& b = space_.rhs();
    Eigen::VectorXd g(static_cast<long>(rows()));
    for (std::size_t r = 0; r < b.size(); ++r) g(static_cast<long>(r)) = -b[r];
    double mass = 0.0;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      for (const auto& e : cols[i]) g(static_cast<long>(e.row)) += e.coeff * q[i];
      mass += q[i];
    }
    if (cap_on_) g(static_cast<long>(cap_row())) = *space_.horizon() - mass;
    return g;
  }

  // Generalized Hessian: clamped pairs sit on the flat branch and add no curvature.
  Eigen::MatrixXd hessian(const std::vector<double>& q, const std::vector<char>& clamped) const {
    const auto& cols = space_.columns();
    const long m = static_cast<long>(rows());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, m);
    const long cr = static_cast<long>(cap_row());
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (clamped[i]) continue;
      const double w = q[i];
      const auto& col = cols[i];
      for (const auto& e1 : col) {
        const double we = w * e1.coeff;
        for (const auto& e2 : col) h(static_cast<long>(e1.row), static_cast<long>(e2.row)) += we * e2.coeff;
        if (cap_on_) {
          h(static_cast<long>(e1.row), cr) -= we;
          h(cr, static_cast<long>(e1.row)) -= we;
        }
      }
      if (cap_on_) h(cr, cr) += w;
    }
    return h;
  }

  // Least-change correction of q onto the equality rows, weighted by each pair's room above the
  // floor so no pair drops below alpha. Returns false if the corrected point leaves the box.
  bool repair(std::vector<double>& q) const {
    const auto& cols = space_.columns();
    const long m = static_cast<long>(rows());
    const long cr = static_cast<long>(cap_row());
    Eigen::VectorXd r = -gradient(q);
    if (cap_on_) r(cr) = -r(cr);
    Eigen::MatrixXd mw = Eigen::MatrixXd::Zero(m, m);
    std::vector<double> w(cols.size());
    for (std::size_t i = 0; i < cols.size(); ++i) {
      w[i] = std::max(0.0, q[i] - alpha_);
      for (const auto& e1 : cols[i]) {
        for (const auto& e2 : cols[i]) mw(static_cast<long>(e1.row), static_cast<long>(e2.row)) += w[i] * e1.coeff * e2.coeff;
        if (cap_on_) {
          mw(static_cast<long>(e1.row), cr) += w[i] * e1.coeff;
          mw(cr, static_cast<long>(e1.row)) += w[i] * e1.coeff;
        }
      }
      if (cap_on_) mw(cr, cr) += w[i];
    }
    const Eigen::VectorXd lambda = mw.completeOrthogonalDecomposition().solve(r);
    if (!lambda.allFinite()) return false;
    std::vector<double> out(q);
    for (std::size_t i = 0; i < cols.size(); ++i) {
      double a = cap_on_ ? lambda(cr) : 0.0;
      for (const auto& e : cols[i]) a += e.coeff * lambda(static_cast<long>(e.row));
      out[i] = q[i] + w[i] * a;
      if (out[i] < alpha_) return false;
    }
    q.swap(out);
    return true;
  }

  double residual(const Eigen::VectorXd& g) const { return g.size() == 0 ? 0.0 : g.lpNorm<Eigen::Infinity>(); }

 private:
  const OccupancySpace& space_;
  std::span<const double> lt_;
  double alpha_;
  double log_alpha_;
  bool cap_on_ = false;
};

struct SolveState {
  Eigen::VectorXd y;
  std::vector<double> q;
  std::vector<char> clamped;
  double residual = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  bool used_fallback = false;
};

void check_unbounded(double phi) {
  if (phi < kUnboundedDual) throw Error(ErrorCode::InfeasibleSpace, "dual objective unbounded below");
}

// Damped Newton on the dual. Returns true on reaching `target`.
bool newton(const DualProblem& dual, SolveState& st, double target, std::size_t budget) {
  double phi = dual.evaluate(st.y, st.q, st.clamped);
  if (!std::isfinite(phi)) return false;
  for (std::size_t it = 0; it < budget; ++it) {
    Eigen::VectorXd g = dual.gradient(st.q);
    st.residual = dual.residual(g);
    if (st.residual <= target) return true;
    ++st.iterations;

    Eigen::MatrixXd h = dual.hessian(st.q, st.clamped);
    const double scale = std::max(1e-300, h.diagonal().maxCoeff());
    double damping = 1e-14 * scale + 1e-6 * std::min(1.0, st.residual);
    Eigen::VectorXd d;
    for (int attempt = 0; attempt < 8; ++attempt) {
      Eigen::MatrixXd reg = h;
      reg.diagonal().array() += damping;
      Eigen::LLT<Eigen::MatrixXd> llt(reg);
      if (llt.info() == Eigen::Success) {
        d = -llt.solve(g);
        if (d.allFinite()) break;
      }
      d.resize(0);
      damping *= 100.0;
    }
    if (d.size() == 0) return false;

    const double slope = g.dot(d);
    // Once the predicted decrease is below the rounding of phi, Armijo cannot tell steps apart;
    // judge them by the residual instead.
    const bool flat = std::abs(slope) < 1e-12 * (1.0 + std::abs(phi));
    double t = 1.0;
    Eigen::VectorXd y_try;
    std::vector<double> q_try;
    std::vector<char> c_try;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      y_try = st.y + t * d;
      double phi_try = dual.evaluate(y_try, q_try, c_try);
      bool ok = std::isfinite(phi_try);
      if (ok && flat) {
        ok = dual.residual(dual.gradient(q_try)) <= (1.0 - 1e-4 * t) * st.residual;
      } else if (ok) {
        ok = phi_try <= phi + 1e-4 * t * slope + 1e-15 * std::abs(phi);
      }
      if (ok) {
        phi = phi_try;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) return false;
    check_unbounded(phi);
    st.y.swap(y_try);
    st.q.swap(q_try);
    st.clamped.swap(c_try);
  }
  st.residual = dual.residual(dual.gradient(st.q));
  return st.residual <= target;
}

// Projected gradient on the dual (the cap multiplier is kept nonnegative), Barzilai-Borwein
// step lengths with backtracking.
bool projected_gradient(const DualProblem& dual, SolveState& st, double target, std::size_t budget) {
  st.used_fallback = true;
  double phi = dual.evaluate(st.y, st.q, st.clamped);
  if (!std::isfinite(phi)) {
    st.y.setZero();
    phi = dual.evaluate(st.y, st.q, st.clamped);
    if (!std::isfinite(phi)) return false;
  }
  Eigen::VectorXd g = dual.gradient(st.q);
  double step = 1.0;
  const long cr = static_cast<long>(dual.cap_row());
  for (std::size_t it = 0; it < budget; ++it) {
    st.residual = dual.residual(g);
    if (st.residual <= target) return true;
    ++st.iterations;
    Eigen::VectorXd y_try, g_try;
    std::vector<double> q_try;
    std::vector<char> c_try;
    double phi_try = 0.0;
    bool accepted = false;
    for (int ls = 0; ls < 80; ++ls) {
      y_try = st.y - step * g;
      if (dual.cap_on()) y_try(cr) = std::max(0.0, y_try(cr));
      phi_try = dual.evaluate(y_try, q_try, c_try);
      if (std::isfinite(phi_try) && phi_try <= phi - 1e-4 * g.dot(st.y - y_try) + 1e-15 * std::abs(phi)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) return false;
    check_unbounded(phi_try);
    g_try = dual.gradient(q_try);
    Eigen::VectorXd s = y_try - st.y, r = g_try - g;
    double sr = s.dot(r);
    step = sr > 0.0 ? std::clamp(s.squaredNorm() / sr, 1e-12, 1e12) : step * 2.0;
    st.y.swap(y_try);
    st.q.swap(q_try);
    st.clamped.swap(c_try);
    g.swap(g_try);
    phi = phi_try;
  }
  st.residual = dual.residual(g);
  return st.residual <= target;
}

bool solve_phase(const DualProblem& dual, SolveState& st, const SolverOptions& opt) {
  const double target = 0.01 * opt.kkt_tolerance;
  if (newton(dual, st, target, opt.newton_budget)) return true;
  if (st.residual <= opt.kkt_tolerance) return true;
  // Rows whose pairs all sit on the floor leave the dual nearly flat and Newton crawls; close to
  // the solution a primal correction finishes the job.
  if (st.residual <= 1e-4) {
    std::vector<double> q = st.q;
    if (dual.repair(q)) {
      const double res = dual.residual(dual.gradient(q));
      if (res <= target) {
        st.q.swap(q);
        st.residual = res;
        return true;
      }
    }
  }
  Eigen::VectorXd y_newton = st.y;
  double res_newton = st.residual;
  if (projected_gradient(dual, st, opt.kkt_tolerance, opt.fallback_budget)) return true;
  if (res_newton < st.residual) {
    st.y = y_newton;
    dual.evaluate(st.y, st.q, st.clamped);
    st.residual = res_newton;
  }
  return false;
}

}  // namespace

ProjectionResult bregman_project(std::span<const double> log_target, const OccupancySpace& space,
                                 const SolverOptions& options) {
  if (log_target.size() != space.dimension()) throw Error(ErrorCode::ShapeMismatch, "projection target dimension");
  for (double v : log_target) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
      throw Error(ErrorCode::InvalidParams, "projection target is not finite");
    }
  }
  DualProblem dual(space, log_target);
  SolveState st;
  st.y = Eigen::VectorXd::Zero(static_cast<long>(dual.rows()));
  bool ok = solve_phase(dual, st, options);

  bool cap_active = false;
  if (ok && space.horizon()) {
    double mass = std::accumulate(st.q.begin(), st.q.end(), 0.0);
    if (mass > *space.horizon() + 0.01 * options.kkt_tolerance) {
      // Active-set step: the cap binds, solve again with it as an equality.
      cap_active = true;
      dual.set_cap(true);
      Eigen::VectorXd y(static_cast<long>(dual.rows()));
      y.head(st.y.size()) = st.y;
      y(static_cast<long>(dual.cap_row())) = 0.0;
      st.y = y;
      ok = solve_phase(dual, st, options);
      if (ok && st.y(static_cast<long>(dual.cap_row())) < -options.kkt_tolerance) ok = false;
    }
  }
  if (!ok) {
    throw Error(ErrorCode::NonConvergent,
                "projection KKT residual " + format_residual(st.residual) + " above tolerance");
  }

  ProjectionResult result{space.make(st.q), {}};
  result.certificate.kkt_residual = st.residual;
  result.certificate.iterations = st.iterations;
  result.certificate.cap_active = cap_active;
  result.certificate.used_fallback = st.used_fallback;
  for (std::size_t i = 0; i < st.clamped.size(); ++i) {
    if (st.clamped[i]) result.certificate.active_constraints.push_back(i);
  }
  return result;
}

namespace {

std::vector<double> log_iterate(const OccupancyMeasure& q, const OccupancySpace& space) {
  if (q.size() != space.dimension()) throw Error(ErrorCode::ShapeMismatch, "iterate dimension");
  const double floor = std::max(space.alpha(), 1e-300);
  std::vector<double> lt(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) lt[i] = std::log(std::max(q[i], floor));
  return lt;
}

double eta_at(std::span<const double> eta, std::size_t i) { return eta.size() == 1 ? eta[0] : eta[i]; }

void check_eta(std::span<const double> eta, std::size_t n) {
  if (eta.size() != 1 && eta.size() != n) throw Error(ErrorCode::ShapeMismatch, "step size vector length");
  for (double e : eta) {
    if (!(e > 0.0) || !std::isfinite(e)) throw Error(ErrorCode::InvalidParams, "step size must be positive");
  }
}

}  // namespace

ProjectionResult mirror_step(const OccupancyMeasure& q_prev, std::span<const double> gradient,
                             std::span<const double> eta, const OccupancySpace& space) {
  check_eta(eta, q_prev.size());
  if (gradient.size() != q_prev.size()) throw Error(ErrorCode::ShapeMismatch, "gradient dimension");
  std::vector<double> lt = log_iterate(q_prev, space);
  for (std::size_t i = 0; i < lt.size(); ++i) lt[i] -= eta_at(eta, i) * gradient[i];
  return bregman_project(lt, space);
}

ProjectionResult omd_step(const OccupancyMeasure& q_prev, const LossFunction& loss, double eta,
                          const OccupancySpace& space) {
  const double e[1] = {eta};
  return mirror_step(q_prev, loss.values(), e, space);
}

OptimisticResult optimistic_omd_step(const OccupancyMeasure& q_hat, const LossFunction& optimism,
                                     const LossFunction& loss, double eta, const OccupancySpace& space) {
  return {omd_step(q_hat, optimism, eta, space), omd_step(q_hat, loss, eta, space)};
}

std::vector<double> correction_term(std::span<const double> loss, std::span<const double> optimism,
                                    std::span<const double> eta) {
  std::vector<double> a(loss.size());
  for (std::size_t i = 0; i < loss.size(); ++i) {
    const double diff = loss[i] - optimism[i];
    const double e = eta_at(eta, i);
    if (32.0 * e * std::abs(diff) > 1.0 + 1e-12) {
      throw Error(ErrorCode::CorrectionRangeViolated, "32 eta |l - m| exceeds 1");
    }
    a[i] = 32.0 * e * diff * diff;
  }
  return a;
}

OptimisticResult corrected_omd_step(const OccupancyMeasure& q_hat, const LossFunction& optimism,
                                    const LossFunction& loss, std::span<const double> eta,
                                    const OccupancySpace& space) {
  check_eta(eta, q_hat.size());
  if (!loss.same_shape(optimism) || loss.size() != q_hat.size()) throw Error(ErrorCode::ShapeMismatch, "loss shapes");
  std::vector<double> a = correction_term(loss.values(), optimism.values(), eta);
  std::vector<double> g(loss.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = loss[i] + a[i];
  return {mirror_step(q_hat, optimism.values(), eta, space), mirror_step(q_hat, g, eta, space)};
}

ProjectionResult min_entropy_point(const OccupancySpace& space) {
  // D(q, e^{-1}) = psi(q) + const, so the psi-minimizer is the projection of e^{-1}.
  std::vector<double> lt(space.dimension(), -1.0);
  return bregman_project(lt, space);
}

// ---------------------------------------------------------------- simplex

EntropyRegularizer EntropyRegularizer::weighted(std::vector<double> rates) {
  for (double r : rates) {
    if (!(r > 0.0) || !std::isfinite(r)) throw Error(ErrorCode::InvalidParams, "weighted entropy rates must be positive");
  }
  return {Kind::Weighted, std::move(rates)};
}

double EntropyRegularizer::value(std::span<const double> p) const {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    double term = p[i] * std::log(p[i]);
    s += kind == Kind::Weighted ? term / rates.at(i) : term;
  }
  return s;
}

double EntropyRegularizer::divergence(std::span<const double> u, std::span<const double> w) const {
  if (u.size() != w.size()) throw Error(ErrorCode::ShapeMismatch, "divergence arguments");
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double term = u[i] > 0.0 ? u[i] * std::log(u[i] / w[i]) : 0.0;
    if (kind != Kind::Plain) term += w[i] - u[i];
    s += kind == Kind::Weighted ? term / rates.at(i) : term;
  }
  return s;
}

std::vector<double> weighted_simplex_step(std::span<const double> p_prev, std::span<const double> g,
                                          const EntropyRegularizer& reg) {
  const std::size_t n = p_prev.size();
  if (g.size() != n) throw Error(ErrorCode::ShapeMismatch, "simplex step arguments");
  std::vector<double> eps(n, 1.0);
  if (reg.kind == EntropyRegularizer::Kind::Weighted) {
    if (reg.rates.size() != n) throw Error(ErrorCode::ShapeMismatch, "rates length");
    eps = reg.rates;
  }
  std::vector<double> base(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(p_prev[i] > 0.0)) throw Error(ErrorCode::InvalidParams, "simplex iterate must be strictly positive");
    base[i] = std::log(p_prev[i]) - eps[i] * g[i];
  }

  // G(nu) = log sum exp(base_i - eps_i nu) is convex and strictly decreasing; find its root.
  auto eval = [&](double nu, double& slope) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, base[i] - eps[i] * nu);
    double s = 0.0, ds = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double w = std::exp(base[i] - eps[i] * nu - mx);
      s += w;
      ds -= eps[i] * w;
    }
    slope = ds / s;
    return mx + std::log(s);
  };

  double slope = 0.0;
  double lo = 0.0, hi = 0.0;
  double glo = eval(lo, slope);
  if (glo > 0.0) {
    double stepw = 1.0;
    hi = stepw;
    while (eval(hi, slope) > 0.0) {
      lo = hi;
      stepw *= 2.0;
      hi += stepw;
    }
  } else {
    double stepw = 1.0;
    hi = 0.0;
    lo = -stepw;
    while (eval(lo, slope) < 0.0) {
      hi = lo;
      stepw *= 2.0;
      lo -= stepw;
    }
  }
  double nu = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    double val = eval(nu, slope);
    if (std::abs(val) <= 1e-15) break;
    if (val > 0.0) lo = nu; else hi = nu;
    double cand = nu - val / slope;
    nu = (cand > lo && cand < hi) ? cand : 0.5 * (lo + hi);
    if (hi - lo <= 1e-15 * std::max(1.0, std::abs(nu))) break;
  }

  std::vector<double> p(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = std::exp(base[i] - eps[i] * nu);
    total += p[i];
  }
  for (double& v : p) v = std::max(v / total, 1e-300);
  return p;
}

SimplexOptimisticResult corrected_simplex_step(std::span<const double> p_hat,
                                               std::span<const double> optimism,
                                               std::span<const double> loss,
                                               const EntropyRegularizer& reg) {
  const std::size_t n = p_hat.size();
  if (optimism.size() != n || loss.size() != n) throw Error(ErrorCode::ShapeMismatch, "simplex step arguments");
  std::vector<double> eps(n, 1.0);
  if (reg.kind == EntropyRegularizer::Kind::Weighted) eps = reg.rates;
  std::vector<double> corrected(n);
  auto b = correction_term(loss, optimism, eps);
  for (std::size_t i = 0; i < n; ++i) corrected[i] = loss[i] + b[i];
  return {weighted_simplex_step(p_hat, optimism, reg), weighted_simplex_step(p_hat, corrected, reg)};
}

}  // namespace oreps
