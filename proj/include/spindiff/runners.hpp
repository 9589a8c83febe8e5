#pragma once

// Experiment runners behind the command line front end.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "spindiff/scenario.hpp"

namespace spindiff {

struct InvariantCheck {
  std::string name;
  double value = 0.0;      ///< measured deviation
  double tolerance = 0.0;  ///< passes when value <= tolerance
  bool passed = false;
};

struct RunReport {
  std::string scenario;
  std::string kind;
  std::string hash;
  std::uint64_t seed = 0;
  double wall_seconds = 0.0;
  std::vector<std::string> manifest;
  std::vector<InvariantCheck> checks;
  std::vector<std::string> warnings;
  bool ok = false;
  std::string error;

  std::string to_json() const;
};

struct RunOptions {
  std::filesystem::path out_dir = "out";
  std::optional<std::uint64_t> seed;
  int workers = 0;  ///< 0 keeps the runtime default
};

/// Runs the scenario and writes CSV tables plus report.json. Outputs become
/// visible only when the run completes; report.ok is false when an invariant
/// check fails. Throws ScenarioError or std::exception on runtime failure,
/// leaving no files behind.
RunReport run_scenario(const Scenario& scenario, const RunOptions& options);

struct Diagnostics {
  std::vector<std::string> derived;   ///< "name = value unit" lines
  std::vector<std::string> warnings;
};

/// Checks the scenario without running it and lists derived quantities.
Diagnostics validate_scenario(const Scenario& scenario);

}  // namespace spindiff
