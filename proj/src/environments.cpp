#include "oreps/environments.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <numeric>

namespace oreps {

namespace {

void check_slip(double slip) {
  if (!(slip >= 0.0 && slip <= 0.5)) throw Error(ErrorCode::InvalidParams, "slip must lie in [0, 0.5]");
}

void add(std::vector<Transition>& row, int next, double p) {
  if (p == 0.0) return;
  for (auto& t : row) {
    if (t.next == next) {
      t.prob += p;
      return;
    }
  }
  row.push_back({next, p});
}

}  // namespace

// ---------------------------------------------------------------- loop-free grid

std::vector<Cell> loopfree_cells(const GridSpec& spec) {
  if (spec.width < 2 || spec.height < 2) throw Error(ErrorCode::InvalidParams, "grid sides must be at least 2");
  std::vector<Cell> cells;
  const std::size_t last = spec.width + spec.height - 2;  // distance of the goal
  for (std::size_t d = 0; d < last; ++d) {
    for (std::size_t c = 0; c < spec.width; ++c) {
      if (d < c || d - c >= spec.height) continue;
      cells.push_back({c, d - c});
    }
  }
  return cells;
}

MdpModel build_loopfree_grid(const GridSpec& spec) {
  check_slip(spec.slip);
  auto cells = loopfree_cells(spec);
  const std::size_t n = cells.size();
  std::map<std::pair<std::size_t, std::size_t>, int> index;
  for (std::size_t i = 0; i < n; ++i) index[{cells[i].col, cells[i].row}] = static_cast<int>(i);
  auto id_of = [&](std::size_t c, std::size_t r) {
    if (c == spec.width - 1 && r == spec.height - 1) return kGoal;
    return index.at({c, r});
  };

  std::vector<std::vector<Transition>> kernel(n * 2);
  std::vector<std::vector<std::size_t>> layers(spec.width + spec.height - 2);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [c, r] = cells[i];
    layers[c + r].push_back(i);
    const bool top = r == spec.height - 1, right = c == spec.width - 1;
    for (std::size_t a : {kUp, kRight}) {
      auto& row = kernel[i * 2 + a];
      if (top) {
        add(row, id_of(c + 1, r), 1.0);
      } else if (right) {
        add(row, id_of(c, r + 1), 1.0);
      } else {
        const double p_up = a == kUp ? 1.0 - spec.slip : spec.slip;
        add(row, id_of(c, r + 1), p_up);
        add(row, id_of(c + 1, r), 1.0 - p_up);
      }
    }
  }
  return MdpModel(n, 2, std::move(kernel), 0, LoopFreeVariant{std::move(layers)});
}

// ---------------------------------------------------------------- circle

std::vector<Cell> circle_tour(const GridSpec& spec) {
  std::size_t w = spec.width, h = spec.height;
  if (w < 2 || h < 2) throw Error(ErrorCode::InvalidParams, "grid sides must be at least 2");
  if ((w * h) % 2 != 0) throw Error(ErrorCode::InvalidParams, "a closed tour needs an even number of cells");
  const bool transpose = h % 2 != 0;
  if (transpose) std::swap(w, h);
  std::vector<Cell> tour;
  for (std::size_t r = 0; r < h; ++r) tour.push_back({0, r});
  for (std::size_t k = 0; k < h; ++k) {
    std::size_t r = h - 1 - k;
    if (k % 2 == 0) {
      for (std::size_t c = 1; c < w; ++c) tour.push_back({c, r});
    } else {
      for (std::size_t c = w - 1; c >= 1; --c) tour.push_back({c, r});
    }
  }
  if (transpose) {
    for (auto& cell : tour) std::swap(cell.col, cell.row);
  }
  return tour;
}

MdpModel build_cycle_ssp(std::size_t length, std::size_t goal_position, double slip) {
  check_slip(slip);
  if (length < 2 || goal_position == 0 || goal_position >= length) {
    throw Error(ErrorCode::InvalidParams, "cycle needs length >= 2 and a goal away from x0");
  }
  const std::size_t n = length - 1;
  auto id_of = [&](std::size_t pos) {
    if (pos == goal_position) return kGoal;
    return static_cast<int>(pos < goal_position ? pos : pos - 1);
  };
  std::vector<std::vector<Transition>> kernel(n * 2);
  for (std::size_t pos = 0; pos < length; ++pos) {
    if (pos == goal_position) continue;
    const auto x = static_cast<std::size_t>(id_of(pos));
    const std::size_t fwd = (pos + 1) % length, bwd = (pos + length - 1) % length;
    add(kernel[x * 2 + kForward], id_of(fwd), 1.0 - slip);
    add(kernel[x * 2 + kForward], id_of(bwd), slip);
    add(kernel[x * 2 + kBackward], id_of(bwd), 1.0 - slip);
    add(kernel[x * 2 + kBackward], id_of(fwd), slip);
  }
  return MdpModel(n, 2, std::move(kernel), 0, SspVariant{});
}

MdpModel build_circle_ssp(const GridSpec& spec) {
  auto tour = circle_tour(spec);
  Cell goal{spec.width - 1, spec.height - 1};
  auto it = std::find(tour.begin(), tour.end(), goal);
  return build_cycle_ssp(tour.size(), static_cast<std::size_t>(it - tour.begin()), spec.slip);
}

// ---------------------------------------------------------------- infinite grid

MdpModel build_infinite_grid(const GridSpec& spec) {
  check_slip(spec.slip);
  const std::size_t w = spec.width, h = spec.height;
  if (w < 1 || h < 1 || w * h < 2) throw Error(ErrorCode::InvalidParams, "grid needs at least two cells");
  const std::size_t n = w * h;
  auto move = [&](std::size_t x, std::size_t dir) -> int {
    std::size_t c = x % w, r = x / w;
    switch (dir) {
      case kNorth: if (r + 1 < h) ++r; break;
      case kSouth: if (r > 0) --r; break;
      case kWest: if (c > 0) --c; break;
      default: if (c + 1 < w) ++c; break;
    }
    return static_cast<int>(r * w + c);
  };
  std::vector<std::vector<Transition>> kernel(n * 4);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t a = 0; a < 4; ++a) {
      for (std::size_t dir = 0; dir < 4; ++dir) {
        add(kernel[x * 4 + a], move(x, dir), dir == a ? 1.0 - spec.slip : spec.slip / 3.0);
      }
    }
  }
  MdpModel mdp(n, 4, std::move(kernel), 0, InfiniteHorizonVariant{spec.mixing_time});
  if (!is_ergodic(mdp)) throw Error(ErrorCode::InvalidModel, "grid chain is not irreducible and aperiodic");
  return mdp;
}

bool is_ergodic(const MdpModel& mdp) {
  const std::size_t n = mdp.num_states();
  std::vector<std::vector<std::size_t>> fwd(n), rev(n);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      for (const auto& t : mdp.successors(x, a)) {
        if (t.prob <= 0.0 || t.next == kGoal) continue;
        fwd[x].push_back(static_cast<std::size_t>(t.next));
        rev[static_cast<std::size_t>(t.next)].push_back(x);
      }
    }
  }
  auto bfs = [n](const std::vector<std::vector<std::size_t>>& adj, std::vector<long>& level) {
    level.assign(n, -1);
    std::deque<std::size_t> queue{0};
    level[0] = 0;
    while (!queue.empty()) {
      std::size_t u = queue.front();
      queue.pop_front();
      for (std::size_t v : adj[u]) {
        if (level[v] < 0) {
          level[v] = level[u] + 1;
          queue.push_back(v);
        }
      }
    }
    return std::all_of(level.begin(), level.end(), [](long l) { return l >= 0; });
  };
  std::vector<long> level, back;
  if (!bfs(fwd, level) || !bfs(rev, back)) return false;
  long period = 0;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v : fwd[u]) period = std::gcd(period, std::abs(level[u] + 1 - level[v]));
  }
  return period == 1;
}

// ---------------------------------------------------------------- losses

std::vector<LossFunction> piecewise_losses(const MdpModel& mdp, const LossSchedule& schedule,
                                           std::size_t rounds) {
  if (schedule.period < 1) throw Error(ErrorCode::InvalidParams, "loss period must be at least 1");
  const std::size_t nx = mdp.num_states(), na = mdp.num_actions();
  Rng rng(schedule.seed);
  std::vector<LossFunction> stream;
  stream.reserve(rounds);

  switch (schedule.scheme) {
    case LossScheme::RandomActionPerState: {
      std::vector<double> piece;
      for (std::size_t k = 0; k < rounds; ++k) {
        if (k % schedule.period == 0) {
          piece.assign(nx * na, 1.0);
          for (std::size_t x = 0; x < nx; ++x) piece[x * na + uniform_index(rng, na)] = 0.0;
        }
        stream.emplace_back(nx, na, piece);
      }
      break;
    }
    case LossScheme::SwapGlobal: {
      if (na != 2) throw Error(ErrorCode::InvalidParams, "swap scheme needs exactly two actions");
      std::size_t free_action = uniform_index(rng, 2);
      std::vector<double> piece(nx * na);
      for (std::size_t k = 0; k < rounds; ++k) {
        if (k > 0 && k % schedule.period == 0) free_action = 1 - free_action;
        for (std::size_t x = 0; x < nx; ++x) {
          for (std::size_t a = 0; a < na; ++a) piece[x * na + a] = a == free_action ? 0.0 : 1.0;
        }
        stream.emplace_back(nx, na, piece);
      }
      break;
    }
    case LossScheme::StationaryBernoulli: {
      std::vector<double> mean(nx * na);
      for (double& m : mean) m = uniform01(rng);
      std::vector<double> draw(nx * na);
      for (std::size_t k = 0; k < rounds; ++k) {
        for (std::size_t i = 0; i < draw.size(); ++i) draw[i] = uniform01(rng) < mean[i] ? 1.0 : 0.0;
        stream.emplace_back(nx, na, draw);
      }
      break;
    }
  }
  return stream;
}

// ---------------------------------------------------------------- rollouts

std::size_t sample_action(const Policy& pi, std::size_t x, Rng& rng) {
  return sample_index(rng, pi.row(x));
}

int sample_next(const MdpModel& mdp, std::size_t x, std::size_t a, Rng& rng) {
  const auto& row = mdp.successors(x, a);
  double u = uniform01(rng);
  for (const auto& t : row) {
    if (u < t.prob) return t.next;
    u -= t.prob;
  }
  return row.back().next;
}

Trajectory rollout(const MdpModel& mdp, const Policy& pi, const LossFunction& loss, Rng& rng,
                   std::size_t step_budget, std::size_t start) {
  if (step_budget < 1) throw Error(ErrorCode::InvalidParams, "step budget must be positive");
  Trajectory traj;
  std::size_t x = start == static_cast<std::size_t>(-1) ? mdp.initial_state() : start;
  const bool episodic = mdp.has_goal();
  for (std::size_t step = 0; step < step_budget; ++step) {
    std::size_t a = sample_action(pi, x, rng);
    traj.steps.push_back({x, a, loss(x, a)});
    int next = sample_next(mdp, x, a, rng);
    if (next == kGoal) {
      traj.reached_goal = true;
      return traj;
    }
    x = static_cast<std::size_t>(next);
  }
  traj.budget_exhausted = episodic;
  return traj;
}

}  // namespace oreps
