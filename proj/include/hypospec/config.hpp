#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hypospec/asymptotics.hpp"
#include "hypospec/assembly.hpp"

namespace hypospec::harness {

struct Thresholds {
  double count_exponent_tol = 0.05;
  double coefficient_tol = 0.10;
  double trace_exponent_tol = 0.05;
  double karamata_exponent_tol = 0.05;
  double karamata_coefficient_tol = 0.15;
  double margin = 0.25;
  double spread = 3.0;
  double trend_tol = 0.05;
  double stochastic_sigma = 3.0;
};

/// A scenario together with its registry metadata. `source` is the canonical
/// JSON text of the scenario block, used for hashing and the manifest.
struct ScenarioDef {
  std::string id;
  std::string description;
  std::string source;
  assembly::Scenario scenario;
  int expected_Q_L = 0;
  int expected_tau_L = 0;
  asymptotics::CoefficientKind kind = asymptotics::CoefficientKind::kUnknown;
  std::vector<int> default_resolution;
  std::vector<std::string> default_checks;
  std::string comparison_potential;  // V for the potential-comparison check
  Thresholds thresholds;
};

/// Parses a scenario block (JSON text). Unknown keys are rejected.
ScenarioDef parse_scenario(const std::string& json_text);

struct AuditSettings {
  int grid = 0;        // cell-centered samples per axis; 0 picks a default
  int quasi_random = 0;
  int probe = 0;       // zero-weight lattice probes per axis; 0 picks a default
  int depth_cap = 4;
};

struct CountingSettings {
  int points = 16;
  double min_count = 30.0;
  double max_fraction = 0.05;
};

struct TraceSettings {
  int points = 12;
  std::string method = "auto";  // auto | eigsum | stochastic
  int probes = 64;
  int eigsum_k = 0;             // 0 picks a default
  double kappa = 4.0;
  double min_trace = 10.0;
};

struct DiagSettings {
  int nodes = 16;
  int times = 8;
};

struct SpectrumSettings {
  int k = 40;
};

struct BallSettings {
  std::vector<double> center;  // empty: chart origin
  std::vector<double> deltas = {0.05, 0.07, 0.1, 0.14, 0.2};
  std::string cls = "C2";
  int paths = 10000;
  int control_steps = 4;
  int substeps = 4;
  int bins_per_axis = 24;
};


struct RunConfig {
  ScenarioDef scenario;
  std::vector<int> resolution;
  std::uint64_t seed = 0;
  int workers = 1;
  std::string output = "out";
  bool use_cache = true;
  AuditSettings audit;
  CountingSettings counting;
  TraceSettings trace;
  DiagSettings diag;
  SpectrumSettings spectrum;
  BallSettings ball;
  Thresholds thresholds;
  std::vector<std::string> checks;

  /// Canonical JSON of every setting that influences results (the output
  /// directory and worker count excluded).
  std::string canonical() const;
  std::uint64_t hash() const;
};

/// Parses a run configuration. The "scenario" key holds a registry id or an
/// inline scenario block. Unknown keys anywhere are rejected with ConfigError.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
/// Configuration for a registry scenario with all defaults.
RunConfig default_config(const std::string& scenario_id);

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t v);

/// Check names understood by verify.
const std::vector<std::string>& known_checks();

}  // namespace hypospec::harness
