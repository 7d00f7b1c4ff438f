#include <json.hpp>

#include "oreps/harness.hpp"

namespace oreps {

using nlohmann::json;

std::string mdp_to_json(const MdpModel& mdp) {
  json doc;
  doc["states"] = mdp.num_states();
  doc["actions"] = mdp.num_actions();
  doc["initial"] = mdp.initial_state();
  switch (mdp.setting()) {
    case Setting::LoopFree: doc["variant"] = {{"kind", "loop-free"}, {"layers", mdp.layers()}}; break;
    case Setting::Ssp: doc["variant"] = {{"kind", "ssp"}}; break;
    case Setting::InfiniteHorizon:
      doc["variant"] = {{"kind", "infinite-horizon"}, {"mixing_time", mdp.mixing_time()}};
      break;
  }
  json rows = json::array();
  for (std::size_t x = 0; x < mdp.num_states(); ++x) {
    for (std::size_t a = 0; a < mdp.num_actions(); ++a) {
      for (const auto& t : mdp.successors(x, a)) rows.push_back({x, a, t.next, t.prob});
    }
  }
  doc["transitions"] = std::move(rows);
  return doc.dump(1);
}

MdpModel mdp_from_json(std::string_view text) {
  try {
    const json doc = json::parse(text);
    const auto ns = doc.at("states").get<std::size_t>();
    const auto na = doc.at("actions").get<std::size_t>();
    const auto initial = doc.value("initial", std::size_t{0});
    std::vector<std::vector<Transition>> kernel(ns * na);
    for (const auto& row : doc.at("transitions")) {
      if (!row.is_array() || row.size() != 4) throw Error(ErrorCode::InvalidModel, "transition rows are [x, a, x', p]");
      const auto x = row[0].get<std::size_t>(), a = row[1].get<std::size_t>();
      const auto next = row[2].get<long long>();
      if (x >= ns || a >= na || next < -1 || next >= static_cast<long long>(ns)) {
        throw Error(ErrorCode::InvalidModel, "transition index out of range");
      }
      kernel[x * na + a].push_back({static_cast<int>(next), row[3].get<double>()});
    }
    const auto& variant = doc.at("variant");
    const auto kind = variant.at("kind").get<std::string>();
    Variant v;
    if (kind == "loop-free") {
      v = LoopFreeVariant{variant.at("layers").get<std::vector<std::vector<std::size_t>>>()};
    } else if (kind == "ssp") {
      v = SspVariant{};
    } else if (kind == "infinite-horizon") {
      v = InfiniteHorizonVariant{variant.value("mixing_time", 0.0)};
    } else {
      throw Error(ErrorCode::InvalidModel, "unknown variant kind '" + kind + "'");
    }
    return MdpModel(ns, na, std::move(kernel), initial, std::move(v));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidModel, std::string("malformed MDP document: ") + e.what());
  }
}

}  // namespace oreps
