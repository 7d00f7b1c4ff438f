#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "oreps/mdp.hpp"
#include "oreps/random.hpp"

namespace oreps {

enum class GridVariant { LoopFree, CircleSsp, Infinite };

struct GridSpec {
  std::size_t width = 10;
  std::size_t height = 10;
  double slip = 0.1;
  GridVariant variant = GridVariant::LoopFree;
  double mixing_time = 0.0;  // infinite-horizon only
};

struct Cell {
  std::size_t col;
  std::size_t row;
  bool operator==(const Cell&) const = default;
};

// Action labels.
inline constexpr std::size_t kUp = 0, kRight = 1;                     // loop-free grid
inline constexpr std::size_t kForward = 0, kBackward = 1;             // circle
inline constexpr std::size_t kNorth = 0, kSouth = 1, kWest = 2, kEast = 3;  // infinite grid

/// Up/right grid from the lower-left corner to the upper-right goal. State ids are ordered
/// by layer (Manhattan distance from x0), then by column.
MdpModel build_loopfree_grid(const GridSpec& spec);
std::vector<Cell> loopfree_cells(const GridSpec& spec);

/// Closed tour through every cell of the grid: up the left column from the lower-left corner,
/// then boustrophedon rows from the top row down over the remaining columns. The goal is the
/// upper-right cell (18 steps clockwise and 81 counter-clockwise on 10x10); action kForward
/// advances along the tour (clockwise), kBackward reverses.
MdpModel build_circle_ssp(const GridSpec& spec);
std::vector<Cell> circle_tour(const GridSpec& spec);

/// Cycle of `length` cells with the goal at `goal_position`; state ids follow the cycle with the
/// goal removed and x0 at cycle position 0.
MdpModel build_cycle_ssp(std::size_t length, std::size_t goal_position, double slip);

/// Four-action grid without a goal; moves off the boundary leave the state unchanged.
/// State id = row * width + col.
MdpModel build_infinite_grid(const GridSpec& spec);

/// Uniform-policy chain is strongly connected and aperiodic.
bool is_ergodic(const MdpModel& mdp);

enum class LossScheme {
  RandomActionPerState,  // each piece: a random zero-loss action per state, loss 1 elsewhere
  SwapGlobal,            // one zero-loss action shared by all states, swapped every piece
  StationaryBernoulli,   // fixed random means, independent {0,1} draws every round
};

struct LossSchedule {
  std::size_t period = 50;
  LossScheme scheme = LossScheme::RandomActionPerState;
  std::uint64_t seed = 0;
};

std::vector<LossFunction> piecewise_losses(const MdpModel& mdp, const LossSchedule& schedule,
                                           std::size_t rounds);

std::size_t sample_action(const Policy& pi, std::size_t x, Rng& rng);

/// Next state id, or kGoal.
int sample_next(const MdpModel& mdp, std::size_t x, std::size_t a, Rng& rng);

/// Episodic MDPs run from x0 until the goal or `step_budget` steps; infinite-horizon MDPs run
/// exactly `step_budget` steps from `start` (x0 by default).
Trajectory rollout(const MdpModel& mdp, const Policy& pi, const LossFunction& loss, Rng& rng,
                   std::size_t step_budget = 1'000'000, std::size_t start = static_cast<std::size_t>(-1));

}  // namespace oreps
