// planarvio: scenario runner. `planarvio list-profiles` or `planarvio --scenario <path|name> ...`.

#include <iostream>

#include "CLI11.hpp"
#include "planarvio/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Planar-robot VIO model: observability analysis and batch estimation on simulated scenarios"};
  app.require_subcommand(0, 1);
  auto* list = app.add_subcommand("list-profiles", "Print the built-in scenario profiles");

  std::vector<std::string> scenarios;
  std::string analysis = "both";
  std::string out = "planarvio-out";
  std::string measurements = "imu,features,motion,plane";
  std::uint64_t seed = 0;
  bool check = false;
  app.add_option("--scenario", scenarios, "Scenario file or built-in profile name (repeatable)");
  app.add_option("--analysis", analysis, "observability, estimate or both")->capture_default_str();
  app.add_option("--out", out, "Output directory")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", seed, "Override the scenario seed");
  app.add_flag("--check", check, "Turn the acceptance thresholds into a nonzero exit status");
  app.add_option("--measurements", measurements, "Comma list of imu, features, motion, motion_forward, plane")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (list->parsed()) {
    planarvio::listProfiles(std::cout);
    return 0;
  }
  if (scenarios.empty()) {
    std::cerr << "error: --scenario is required (see --help, or list-profiles for the built-in names)\n";
    return 2;
  }

  planarvio::RunConfig config;
  try {
    config.analysis = planarvio::parseAnalysis(analysis);
    config.measurements = planarvio::parseMeasurements(measurements);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  config.scenarios = scenarios;
  config.out = out;
  config.check = check;
  if (seed_opt->count() > 0) config.seed = seed;
  return planarvio::run(config, std::cout, std::cerr);
}
