#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "opclosure/solver2d.hpp"

namespace opclosure {

enum class ScenarioKind { Slab1D, Lattice2D, Model, Verify };

std::string_view to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(std::string_view name);

/// Flat key=value run description. Which keys are accepted depends on the
/// scenario (see scenario_keys); omitted keys take the scenario defaults.
struct ScenarioConfig {
  ScenarioKind scenario = ScenarioKind::Slab1D;

  // slab1d, lattice2d
  std::vector<ClosureFamily> closures;
  // slab1d
  int order = 0;
  double kappa = 1.5;
  double sigma = 1.5;
  double qhat = 0.0;
  double cfl = 0.8;
  double x0 = 0.5;
  int reference_order = 51;
  double measure_correlation = 0.0;  // general_linear: A_ij = r^|i-j|
  // slab1d, model
  Index cells = 1000;
  // lattice2d
  Index nx = 100;
  Index ny = 100;
  double dt = 1e-3;
  std::string geometry;  // empty: built-in lattice
  BoundaryCondition boundary = BoundaryCondition::Dirichlet;
  // model
  double beta = 0.5;
  double gamma = 1.0;
  double tau = 1.0;
  double lower = 0.0;
  double upper = 1.0;
  // verify
  std::uint64_t seed = 1;
  // all but verify
  double t_final = 0.4;
  std::vector<double> snapshot_times;
  // all
  std::string output_dir;  // empty: the scenario name

  bool operator==(const ScenarioConfig&) const = default;
};

/// Keys accepted for a scenario, in serialization order.
std::vector<std::string_view> scenario_keys(ScenarioKind kind);

ScenarioConfig default_config(ScenarioKind kind);

/// Throws Error with `<origin>:<line>: ...` diagnostics.
ScenarioConfig parse_config(std::string_view text, const std::string& origin = "<config>");
ScenarioConfig load_config(const std::filesystem::path& path);

/// Every applicable key, one per line; parse_config(serialize(c)) == c.
std::string serialize(const ScenarioConfig& config);

struct Metric {
  std::string name;
  double value = 0.0;
};

struct ScenarioReport {
  ScenarioKind scenario = ScenarioKind::Slab1D;
  std::filesystem::path output_dir;
  std::vector<std::filesystem::path> files;
  std::vector<Metric> metrics;
  std::vector<std::string> notes;
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
  /// Plain-text summary followed by `metric,<name>,<value>` lines.
  void write(std::ostream& out) const;
};

/// $OPCLOSURE_OUTPUT_ROOT if set, otherwise ./out.
std::filesystem::path output_root();

/// Runs a scenario, writing CSVs below `root` (relative output_dir values
/// are resolved against it). Slab references are cached in root/cache.
ScenarioReport run_scenario(const ScenarioConfig& config, const std::filesystem::path& root = output_root());

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace opclosure
