// opclosure: run moment-closure scenarios from key=value configs.
//
//   opclosure run configs/fig3_N0.cfg
//   opclosure verify
//   opclosure list-scenarios

#include <algorithm>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "opclosure/error.hpp"
#include "opclosure/scenario_cli.hpp"

#ifndef OPCLOSURE_CONFIG_DIR
#define OPCLOSURE_CONFIG_DIR "configs"
#endif

namespace fs = std::filesystem;
using namespace opclosure;

namespace {

int report_and_exit(const ScenarioReport& report) {
  report.write(std::cout);
  return report.ok() ? 0 : 1;
}

void list_scenarios(const fs::path& config_dir) {
  std::cout << "scenario kinds:\n"
            << "  slab1d     periodic slab pulse, closures compared against a high-order P_N reference\n"
            << "  lattice2d  checkerboard lattice, diffusion and crescendo diffusion in 2D\n"
            << "  model      two-component model problem: mean, first- and second-order predictions\n"
            << "  verify     projection, Dyson, full-OP and spatial-moment self-checks\n";
  if (!fs::is_directory(config_dir)) return;
  std::vector<fs::path> configs;
  for (const auto& entry : fs::directory_iterator(config_dir))
    if (entry.path().extension() == ".cfg") configs.push_back(entry.path());
  std::sort(configs.begin(), configs.end());
  std::cout << "shipped configs (" << config_dir.string() << "):\n";
  for (const auto& path : configs) {
    try {
      const ScenarioConfig c = load_config(path);
      std::cout << "  " << path.filename().string() << "  (" << to_string(c.scenario) << ")\n";
    } catch (const Error& e) {
      std::cout << "  " << path.filename().string() << "  invalid: " << e.what() << "\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal-prediction moment closures for radiative transfer"};
  app.require_subcommand(1);
  std::string root_override;
  app.add_option("--output-root", root_override, "Output root (default: $OPCLOSURE_OUTPUT_ROOT or ./out)");

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "Run the scenario described by a config file");
  run_cmd->add_option("config", config_path, "Config file (key=value lines)")->required()->check(CLI::ExistingFile);
  bool print_config = false;
  run_cmd->add_flag("--print-config", print_config, "Echo the fully defaulted config before running");

  std::uint64_t seed = 1;
  auto* verify_cmd = app.add_subcommand("verify", "Run the verification suites");
  verify_cmd->add_option("--seed", seed, "Seed of the randomized suites");

  std::string config_dir = OPCLOSURE_CONFIG_DIR;
  auto* list_cmd = app.add_subcommand("list-scenarios", "List scenario kinds and shipped configs");
  list_cmd->add_option("--configs", config_dir, "Directory of shipped configs");

  CLI11_PARSE(app, argc, argv);
  const fs::path root = root_override.empty() ? output_root() : fs::path(root_override);

  try {
    if (*run_cmd) {
      const ScenarioConfig config = load_config(config_path);
      if (print_config) std::cout << serialize(config);
      return report_and_exit(run_scenario(config, root));
    }
    if (*verify_cmd) {
      ScenarioConfig config = default_config(ScenarioKind::Verify);
      config.seed = seed;
      return report_and_exit(run_scenario(config, root));
    }
    if (*list_cmd) {
      list_scenarios(config_dir);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
