#pragma once

#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "oreps/mdp.hpp"

namespace oreps {

enum class SpaceFamily { LoopFreeClipped, SspCapped, InfiniteStationary };

struct ColumnEntry {
  std::size_t row;
  double coeff;
};

/// One of the three clipped occupancy polytopes over a fixed MDP.
///
/// The equality system is stored column-wise (one short list per state-action pair):
/// flow balance with a unit source at x0 for the episodic families, and stationarity
/// (one redundant row dropped) plus normalization for the infinite-horizon family.
class OccupancySpace {
 public:
  static OccupancySpace loop_free(std::shared_ptr<const MdpModel> mdp, double alpha);
  static OccupancySpace ssp_capped(std::shared_ptr<const MdpModel> mdp, double horizon, double alpha);
  static OccupancySpace infinite(std::shared_ptr<const MdpModel> mdp, double alpha);

  SpaceFamily family() const { return family_; }
  double alpha() const { return alpha_; }
  std::optional<double> horizon() const { return horizon_; }
  const MdpModel& mdp() const { return *mdp_; }
  const std::shared_ptr<const MdpModel>& mdp_ptr() const { return mdp_; }

  std::size_t dimension() const { return columns_.size(); }
  std::size_t num_rows() const { return rhs_.size(); }
  const std::vector<std::vector<ColumnEntry>>& columns() const { return columns_; }
  const std::vector<double>& rhs() const { return rhs_; }

  /// Largest violation over equality rows, layer masses, lower bounds and the cap.
  double violation(std::span<const double> q) const;
  bool contains(const OccupancyMeasure& q, double tol = 1e-8) const;

  OccupancyMeasure make(std::vector<double> q) const;

 private:
  OccupancySpace(SpaceFamily family, std::shared_ptr<const MdpModel> mdp, double alpha,
                 std::optional<double> horizon);
  void build_rows();
  void check_feasible();

  SpaceFamily family_;
  std::shared_ptr<const MdpModel> mdp_;
  double alpha_;
  std::optional<double> horizon_;
  std::vector<std::vector<ColumnEntry>> columns_;
  std::vector<double> rhs_;
};

/// Mass of an explicit point of the SSP polytope with every coordinate >= alpha, built by
/// mixing the fast policy's occupancy with the uniform policy's. Caps at or above this value
/// are certified feasible.
double ssp_certified_min_mass(const MdpModel& mdp, double alpha);

struct ProjectionCertificate {
  double kkt_residual = 0.0;
  std::size_t iterations = 0;
  std::vector<std::size_t> active_constraints;  // pairs held at the lower bound
  bool cap_active = false;
  bool used_fallback = false;
};

struct ProjectionResult {
  OccupancyMeasure q;
  ProjectionCertificate certificate;
};

struct SolverOptions {
  double kkt_tolerance = 1e-8;
  std::size_t newton_budget = 200;
  std::size_t fallback_budget = 100'000;
};

/// KL projection: minimizes sum_i [q_i log(q_i/t_i) - q_i + t_i] over the space, where
/// t_i = exp(log_target_i).
ProjectionResult bregman_project(std::span<const double> log_target, const OccupancySpace& space,
                                 const SolverOptions& options = {});

ProjectionResult omd_step(const OccupancyMeasure& q_prev, const LossFunction& loss, double eta,
                          const OccupancySpace& space);

/// argmin over the space of <q, eta o g> + D(q, q_prev); `eta` has size 1 or |X||A| and
/// `gradient` may leave [0,1].
ProjectionResult mirror_step(const OccupancyMeasure& q_prev, std::span<const double> gradient,
                             std::span<const double> eta, const OccupancySpace& space);

struct OptimisticResult {
  ProjectionResult play;
  ProjectionResult next;
};

OptimisticResult optimistic_omd_step(const OccupancyMeasure& q_hat, const LossFunction& optimism,
                                     const LossFunction& loss, double eta, const OccupancySpace& space);

/// Optimistic step whose second update uses l + a with a = 32 eta (l - m)^2.
OptimisticResult corrected_omd_step(const OccupancyMeasure& q_hat, const LossFunction& optimism,
                                    const LossFunction& loss, std::span<const double> eta,
                                    const OccupancySpace& space);

std::vector<double> correction_term(std::span<const double> loss, std::span<const double> optimism,
                                    std::span<const double> eta);

ProjectionResult min_entropy_point(const OccupancySpace& space);

// ---- regularizers and the simplex ----

struct EntropyRegularizer {
  enum class Kind { Plain, Shifted, Weighted };

  Kind kind = Kind::Plain;
  std::vector<double> rates;  // Weighted only

  static EntropyRegularizer plain() { return {Kind::Plain, {}}; }
  static EntropyRegularizer shifted() { return {Kind::Shifted, {}}; }
  static EntropyRegularizer weighted(std::vector<double> rates);

  double value(std::span<const double> p) const;
  double divergence(std::span<const double> u, std::span<const double> w) const;
};

/// p_i = p_prev_i exp(-eps_i (g_i + nu)) with nu chosen so that sum p = 1.
std::vector<double> weighted_simplex_step(std::span<const double> p_prev, std::span<const double> g,
                                          const EntropyRegularizer& reg);

struct SimplexOptimisticResult {
  std::vector<double> play;
  std::vector<double> next;
};

/// Corrected optimistic step on the simplex: play from p_hat with optimism M, then move p_hat
/// with h + 32 eps (h - M)^2.
SimplexOptimisticResult corrected_simplex_step(std::span<const double> p_hat,
                                               std::span<const double> optimism,
                                               std::span<const double> loss,
                                               const EntropyRegularizer& reg);

}  // namespace oreps
