#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "planarvio/simulator.hpp"

namespace planarvio {

/// Parse or validation failure in a scenario config; the message names the offending key.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scenario from JSON text (schema in docs/scenario-schema.md). Unknown keys are errors.
Scenario parseScenario(const std::string& text);
Scenario loadScenarioFile(const std::filesystem::path& path);
/// Inverse of parseScenario: every field written out, angles in degrees.
std::string scenarioToJson(const Scenario& scenario);
/// A readable file path wins over a built-in profile of the same name.
Scenario resolveScenario(const std::string& path_or_name);

}  // namespace planarvio
