#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "oreps/environments.hpp"
#include "oreps/harness.hpp"
#include "oreps/oracles.hpp"

using namespace oreps;

namespace {

void print_summary(const ExperimentResult& result) {
  std::printf("%-24s %14s %14s %12s %12s %10s\n", "learner", "expected", "comparator", "regret", "switching",
              "path");
  for (const auto& r : result.reports) {
    std::printf("%-24s %14.4f %14.4f %12.4f %12.4f %10.4f\n", r.learner.c_str(), r.expected_total(),
                r.comparator_total, r.regret(), r.switching_total(), r.path_length);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online occupancy-measure learners on adversarial MDPs"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment and write CSV/SVG outputs");
  run->add_option("config", config_path, "TOML experiment file")->required();

  auto* compare = app.add_subcommand("compare", "Run an experiment and print the summary only");
  compare->add_option("config", config_path, "TOML experiment file")->required();

  std::string suite = "all";
  std::uint64_t seed = 0;
  std::string json_out;
  auto* verify = app.add_subcommand("verify", "Run oracle suites");
  verify->add_option("suite", suite, "projection, roundtrip, pathlength, reduction, counterexample or all");
  verify->add_option("--seed", seed, "Seed for random instances");
  verify->add_option("--json", json_out, "Also write the summary to this file");

  std::string kind = "loopfree", out_path;
  std::size_t width = 10, height = 10;
  double slip = 0.1, tau = 0.0;
  auto* exporter = app.add_subcommand("export-mdp", "Write a grid environment as a JSON model");
  exporter->add_option("--kind", kind, "loopfree, circle or infinite")
      ->check(CLI::IsMember({"loopfree", "circle", "infinite"}));
  exporter->add_option("--width", width);
  exporter->add_option("--height", height);
  exporter->add_option("--slip", slip);
  exporter->add_option("--tau", tau, "Mixing time stored with infinite-horizon models");
  exporter->add_option("-o,--output", out_path, "Output file (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed() || compare->parsed()) {
      const auto config = load_config(config_path);
      const auto result = run_experiment(config, run->parsed());
      print_summary(result);
      for (const auto& f : result.files) std::printf("wrote %s\n", f.c_str());
      return 0;
    }
    if (verify->parsed()) {
      const auto results = run_suite(suite, seed);
      bool ok = true;
      for (const auto& r : results) {
        std::printf("%s %-28s instances=%zu max_violation=%.3g tol=%.3g  %s\n", r.pass ? "PASS" : "FAIL",
                    r.name.c_str(), r.instances, r.max_violation, r.tolerance, r.detail.c_str());
        ok = ok && r.pass;
      }
      if (!json_out.empty()) std::ofstream(json_out) << oracle_summary_json(results) << "\n";
      return ok ? 0 : 1;
    }
    if (exporter->parsed()) {
      GridSpec spec{width, height, slip, GridVariant::LoopFree, tau};
      MdpModel mdp = kind == "loopfree" ? build_loopfree_grid(spec)
                     : kind == "circle" ? build_circle_ssp(spec)
                                        : build_infinite_grid(spec);
      const auto text = mdp_to_json(mdp);
      if (out_path.empty()) {
        std::cout << text << "\n";
      } else {
        std::ofstream(out_path) << text << "\n";
      }
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
