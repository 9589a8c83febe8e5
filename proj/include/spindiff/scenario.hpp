#pragma once

// Scenario files: one experiment per file, YAML syntax. Frequencies are Hz
// unless the file sets `units: rad/s`; rates of the classical chain are 1/s.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "spindiff/chain.hpp"
#include "spindiff/rf.hpp"
#include "spindiff/spin_model.hpp"

namespace spindiff {

enum class ExperimentKind {
  four_spin_exact,
  four_spin_effective,
  rf_map,
  spectrum,
  cayley,
  chain_sweep,
  fit,
  laplace,
};

struct ExperimentInfo {
  ExperimentKind kind;
  std::string_view name;
  std::string_view summary;
  std::string_view required;  ///< comma separated required keys
};

const std::vector<ExperimentInfo>& experiment_catalog();
std::string_view kind_name(ExperimentKind kind);
std::optional<ExperimentKind> parse_kind(std::string_view name);

/// Parse or validation failure. line/column are 1-based, 0 when unknown.
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(const std::string& what, int line = 0, int column = 0)
      : std::runtime_error(what), line_(line), column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

struct TimeGrid {
  double t_max = 0.0;  ///< s
  int samples = 0;
  std::vector<double> points() const;
};

/// Inclusive linear or logarithmic axis.
struct Axis {
  double lo = 0.0;
  double hi = 0.0;
  int n = 1;
  bool log = false;
  std::vector<double> points() const;
};

struct FourSpinExactConfig {
  FourSpinParams params;
  std::vector<double> j_d;      ///< rad/s
  Frame frame = Frame::hyperfine;
  std::string initial = "0101";  ///< bits n1 e2 e3 n4, 0 = up
  TimeGrid time;
  bool run_exact = true;
  bool run_ts4 = false;
  double ts4_tolerance = 1e-4;
};

struct FourSpinEffectiveConfig {
  FourSpinParams params;
  std::vector<double> j_d;
  int regime = 1;
  TimeGrid time;
};

struct RfMapConfig {
  FourSpinParams params;
  double amplitude = 0.0;
  Axis carrier;  ///< rad/s
  Axis j_d;      ///< rad/s
  DipMapOptions options;
  double dip_contrast = 0.05;
};

struct SpectrumConfig {
  FourSpinParams params;
  Axis j_d;
};

struct CayleyConfig {
  std::vector<int> rings;
  std::vector<double> couplings;  ///< rad/s per ring boundary
  int realizations = 8;
  TimeGrid time;
  double dt = 0.0;  ///< 0 selects by step doubling
  double tolerance = 1e-4;
};

struct ChainSweepConfig {
  int m = 40;
  std::string profile = "uniform";  ///< uniform | gaussian
  std::vector<double> gamma0;       ///< 1/s
  std::vector<int> k;
  double a_rf = 1e6;
  PulseTrain pulse;
  std::vector<double> taus;
  double profile_center = 15.0;
  double profile_width = 2.0;
  double profile_factor = 100.0;
  bool fit = true;
};

struct FitConfig {
  std::filesystem::path data;  ///< CSV with tau and signal columns; empty means synthetic
  double tau_d = 0.0;
  double epsilon = 1.0;
  double s0 = 1.0;
  double s1 = 1.0;
  double noise = 0.0;
  int repeats = 1;
  std::vector<double> taus;
};

struct LaplaceConfig {
  double tau_d = 0.0;
  std::vector<double> epsilon;
  int per_decade = 200;
  double r_c_nm = 0.0;  ///< optional carbon spacing for D_eff
};

using ScenarioBody = std::variant<FourSpinExactConfig, FourSpinEffectiveConfig, RfMapConfig,
                                  SpectrumConfig, CayleyConfig, ChainSweepConfig, FitConfig,
                                  LaplaceConfig>;

struct Scenario {
  ExperimentKind kind = ExperimentKind::four_spin_exact;
  std::string name;
  std::uint64_t seed = 0;
  bool angular_units = false;
  std::string text;  ///< source bytes, hashed with the seed
  ScenarioBody body;

  /// fnv1a64 over the source text and the effective seed.
  std::string hash() const;
};

Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace spindiff
