// Batch front end: run, validate, list-experiments.

#include <CLI11.hpp>
#include <omp.h>

#include <iostream>

#include "spindiff/kernels.hpp"
#include "spindiff/runners.hpp"
#include "spindiff/scenario.hpp"

namespace {

// exit codes
constexpr int kOk = 0;
constexpr int kInvariantFailed = 2;
constexpr int kScenarioError = 3;
constexpr int kRuntimeError = 4;

void print_diagnostics(const spindiff::Diagnostics& d) {
  for (const auto& line : d.derived) std::cout << "  " << line << '\n';
  for (const auto& w : d.warnings) std::cout << "  warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spin diffusion simulations from scenario files"};
  app.require_subcommand(1);
  app.fallthrough();

  int workers = 0;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  app.add_option("--workers", workers, "OpenMP worker count (default: available parallelism)")
      ->check(CLI::NonNegativeNumber);
  auto* seed_opt = app.add_option("--seed", seed, "Override the scenario seed");
  app.add_option("--out-dir", out_dir, "Directory receiving CSV tables and report.json");

  std::string path;
  auto* run = app.add_subcommand("run", "Run a scenario and write its tables");
  run->add_option("scenario", path, "Scenario file")->required();
  auto* validate = app.add_subcommand("validate", "Check a scenario and print derived quantities");
  validate->add_option("scenario", path, "Scenario file")->required();
  auto* list = app.add_subcommand("list-experiments", "List supported experiment kinds");

  CLI11_PARSE(app, argc, argv);

  if (workers > 0) {
    omp_set_num_threads(workers);
    spindiff::kernels::set_workers(workers);
  }

  if (list->parsed()) {
    for (const auto& e : spindiff::experiment_catalog())
      std::cout << e.name << "\n  " << e.summary << "\n  required: " << e.required << '\n';
    return kOk;
  }

  try {
    const auto scenario = spindiff::load_scenario(path);
    if (validate->parsed()) {
      const auto d = spindiff::validate_scenario(scenario);
      std::cout << scenario.name << " (" << spindiff::kind_name(scenario.kind) << ") is valid\n";
      print_diagnostics(d);
      return kOk;
    }
    spindiff::RunOptions opts;
    opts.out_dir = out_dir;
    opts.workers = workers;
    if (*seed_opt) opts.seed = seed;
    const auto report = spindiff::run_scenario(scenario, opts);
    std::cout << report.scenario << " [" << report.hash << "] " << report.wall_seconds << " s\n";
    for (const auto& f : report.manifest) std::cout << "  wrote " << f << '\n';
    for (const auto& c : report.checks)
      if (!c.passed) std::cerr << "invariant failed: " << c.name << " = " << c.value << " > " << c.tolerance << '\n';
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
    return report.ok ? kOk : kInvariantFailed;
  } catch (const spindiff::ScenarioError& e) {
    std::cerr << "error: " << path << ": " << e.what() << '\n';
    return kScenarioError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}
