#include <fstream>
#include <sstream>

#include <toml.hpp>

#include "oreps/harness.hpp"

namespace oreps {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

template <typename T>
std::optional<T> get(const toml::table& t, std::string_view key) {
  const auto* node = t.get(key);
  if (node == nullptr) return std::nullopt;
  if constexpr (std::is_same_v<T, double>) {
    if (auto v = node->value<double>()) return *v;  // accepts integers too
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (auto v = node->value<std::string>()) return *v;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (auto v = node->value<bool>()) return *v;
  } else {
    if (auto v = node->value<std::int64_t>()) {
      if (*v < 0) fail("'" + std::string(key) + "' must be nonnegative");
      return static_cast<T>(*v);
    }
  }
  fail("'" + std::string(key) + "' has the wrong type");
}

const toml::table& section(const toml::table& root, std::string_view name) {
  static const toml::table empty;
  const auto* node = root.get(name);
  if (node == nullptr) return empty;
  if (const auto* t = node->as_table()) return *t;
  fail("[" + std::string(name) + "] must be a table");
}

GridVariant parse_variant(const std::string& kind) {
  if (kind == "loopfree" || kind == "loop-free") return GridVariant::LoopFree;
  if (kind == "circle" || kind == "ssp") return GridVariant::CircleSsp;
  if (kind == "infinite") return GridVariant::Infinite;
  fail("unknown environment kind '" + kind + "'");
}

LossScheme parse_scheme(const std::string& s) {
  if (s == "random-action") return LossScheme::RandomActionPerState;
  if (s == "swap") return LossScheme::SwapGlobal;
  if (s == "bernoulli") return LossScheme::StationaryBernoulli;
  fail("unknown loss scheme '" + s + "'");
}

OptimismSource parse_optimism(const std::string& s) {
  if (s == "none") return OptimismSource::None;
  if (s == "loss") return OptimismSource::Loss;
  if (s == "double-loss") return OptimismSource::DoubleLoss;
  fail("unknown optimism source '" + s + "'");
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, const std::string& source_name) {
  toml::table root;
  try {
    root = toml::parse(text, source_name);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source_name << ": " << e.description() << " at line " << e.source().begin.line;
    fail(msg.str());
  }

  ExperimentConfig c;
  const auto& exp = section(root, "experiment");
  c.name = get<std::string>(exp, "name").value_or(c.name);
  c.rounds = get<std::size_t>(exp, "rounds").value_or(0);
  c.repeats = get<std::size_t>(exp, "repeats").value_or(1);
  c.seed = get<std::uint64_t>(exp, "seed").value_or(0);
  c.output_dir = get<std::string>(exp, "output_dir").value_or(".");
  c.write_svg = get<bool>(exp, "svg").value_or(true);
  c.step_budget = get<std::size_t>(exp, "step_budget").value_or(c.step_budget);
  c.threads = get<std::size_t>(exp, "threads").value_or(0);
  if (c.rounds < 1) fail("[experiment] rounds must be at least 1");
  if (c.repeats < 1) fail("[experiment] repeats must be at least 1");

  const auto& env = section(root, "environment");
  c.environment.mdp_path = get<std::string>(env, "mdp");
  if (!c.environment.mdp_path) {
    auto kind = get<std::string>(env, "kind");
    if (!kind) fail("[environment] needs kind or mdp");
    c.environment.grid.variant = parse_variant(*kind);
  }
  c.environment.grid.width = get<std::size_t>(env, "width").value_or(10);
  c.environment.grid.height = get<std::size_t>(env, "height").value_or(10);
  c.environment.grid.slip = get<double>(env, "slip").value_or(0.1);
  if (const auto* tau = env.get("tau")) {
    if (auto s = tau->value<std::string>()) {
      if (*s != "measured") fail("tau must be a number or \"measured\"");
      c.environment.tau_measured = true;
    } else if (auto v = tau->value<double>()) {
      c.environment.grid.mixing_time = *v;
    } else {
      fail("tau must be a number or \"measured\"");
    }
  }

  const auto& losses = section(root, "losses");
  c.losses.scheme = parse_scheme(get<std::string>(losses, "scheme").value_or("random-action"));
  c.losses.period = get<std::size_t>(losses, "period").value_or(c.rounds);
  c.losses.seed = get<std::uint64_t>(losses, "seed").value_or(c.seed);

  const auto& cmp = section(root, "comparator");
  const auto kind = get<std::string>(cmp, "kind").value_or("piecewise");
  if (kind == "piecewise") {
    c.comparator.kind = ComparatorSpec::Kind::PiecewiseBest;
    c.comparator.period = get<std::size_t>(cmp, "period").value_or(c.losses.period);
  } else if (kind == "fixed") {
    c.comparator.kind = ComparatorSpec::Kind::FixedBestInHindsight;
  } else {
    fail("comparator kind must be piecewise or fixed");
  }

  const auto* learners = root.get("learner");
  if (learners == nullptr || !learners->is_array_of_tables()) fail("at least one [[learner]] table is required");
  for (const auto& node : *learners->as_array()) {
    const auto& t = *node.as_table();
    LearnerEntry e;
    const auto name = get<std::string>(t, "algorithm");
    if (!name) fail("[[learner]] needs an algorithm");
    const auto alg = parse_algorithm(*name);
    if (!alg) fail("unknown algorithm '" + *name + "'");
    e.config.algorithm = *alg;
    e.label = get<std::string>(t, "label").value_or(*name);
    e.optimism = parse_optimism(get<std::string>(t, "optimism").value_or("none"));
    e.config.alpha = get<double>(t, "alpha");
    e.config.eta = get<double>(t, "eta");
    e.config.epsilon = get<double>(t, "epsilon");
    e.config.horizon_cap = get<double>(t, "horizon_cap");
    e.config.tau = get<double>(t, "tau");
    if (const auto* pool = t.get("pool")) {
      const auto* arr = pool->as_array();
      if (arr == nullptr || arr->empty()) fail("pool must be a nonempty array of numbers");
      std::vector<double> values;
      for (const auto& v : *arr) {
        auto d = v.value<double>();
        if (!d || !(*d > 0.0)) fail("pool entries must be positive numbers");
        values.push_back(*d);
      }
      e.config.pool = std::move(values);
    }
    const auto floor = get<std::string>(t, "log_floor").value_or("floor");
    if (floor == "reject") {
      e.config.log_floor = LogFloor::Reject;
    } else if (floor != "floor") {
      fail("log_floor must be floor or reject");
    }
    c.learners.push_back(std::move(e));
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace oreps
