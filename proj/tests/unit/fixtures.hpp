#pragma once

#include <memory>

#include "oreps/mdp.hpp"

namespace fixtures {

using namespace oreps;

// One state, `actions` actions, every action ends the episode.
inline std::shared_ptr<const MdpModel> bandit(std::size_t actions = 2) {
  std::vector<std::vector<Transition>> kernel(actions, {{kGoal, 1.0}});
  return std::make_shared<const MdpModel>(1, actions, std::move(kernel), 0, LoopFreeVariant{{{0}}});
}

// x0 -> {x1, x2} -> goal; action 0 at x0 goes to x1 w.p. 0.8.
inline std::shared_ptr<const MdpModel> two_layer() {
  std::vector<std::vector<Transition>> kernel(6);
  kernel[0] = {{1, 0.8}, {2, 0.2}};
  kernel[1] = {{1, 0.3}, {2, 0.7}};
  for (std::size_t i = 2; i < 6; ++i) kernel[i] = {{kGoal, 1.0}};
  return std::make_shared<const MdpModel>(3, 2, std::move(kernel), 0, LoopFreeVariant{{{0}, {1, 2}}});
}

// Two states; action 0 stays put w.p. 1 - p, action 1 moves w.p. p; a goal exit of `exit` from both.
inline std::shared_ptr<const MdpModel> leaky_pair(double exit = 0.25) {
  std::vector<std::vector<Transition>> kernel(4);
  kernel[0] = {{0, 1.0 - exit}, {kGoal, exit}};
  kernel[1] = {{1, 1.0 - exit}, {kGoal, exit}};
  kernel[2] = {{1, 1.0 - exit}, {kGoal, exit}};
  kernel[3] = {{0, 1.0 - exit}, {kGoal, exit}};
  return std::make_shared<const MdpModel>(2, 2, std::move(kernel), 0, SspVariant{});
}

// Two-state chain: from state 0 action 0 moves w.p. a, from state 1 w.p. b; action 1 always moves.
inline std::shared_ptr<const MdpModel> flip_chain(double a, double b) {
  std::vector<std::vector<Transition>> kernel(4);
  kernel[0] = {{0, 1.0 - a}, {1, a}};
  kernel[1] = {{1, 1.0}};
  kernel[2] = {{1, 1.0 - b}, {0, b}};
  kernel[3] = {{0, 1.0}};
  return std::make_shared<const MdpModel>(2, 2, std::move(kernel), 0, InfiniteHorizonVariant{1.0});
}

}  // namespace fixtures
