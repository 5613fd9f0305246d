// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phaseopt/cost.hpp"
#include "phaseopt/driver.hpp"
#include "phaseopt/error.hpp"
#include "phaseopt/search.hpp"

namespace phaseopt {

/// Bad command line or configuration file. Exit status 2.
class UsageError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

struct CliConfig {
  CoolingKind cooling = CoolingKind::Geometric;
  std::size_t max_iterations = 100;
  std::uint64_t rng_val = 123;
  double max_temperature = 100;
  double t_floor = 1.0;
  std::size_t initial_sample_size = 20;
  double mutation_rate = 0.05;
  double crossover_rate = 0.95;
  std::size_t population_size = 10;
  CrossoverKind crossover_type = CrossoverKind::SinglePoint;
  MutationKind mutation_type = MutationKind::FlipOne;
  CostType cost_type = CostType::IRAnalysis;
  bool use_protean_collect = false;
  bool module_level_ipc = false;
  EngineChoice engine = EngineChoice::Anneal;
  std::size_t max_recipe_length = 5;
  std::size_t stall_limit = 10;

  std::string library;
  std::string optimizer_cmd;
  std::string scorer_cmd;
  std::string model_file;
  std::string mca_cmd;
  std::string mca_pattern = std::string(kDefaultMcaPattern);
  std::string schema;
  std::string baseline_pipeline;
  std::size_t workers = 0;
  std::string finalize_cmd;
  bool output_table = false;
  std::string json_out;
  std::string scratch_dir;
  double timeout_seconds = 60;
  bool dump_features = false;

  std::vector<std::string> inputs;
  bool help = false;
};

/// `key = value` lines; blank lines and `#` comments skipped. Keys are long
/// flag names without dashes. Throws UsageError with the line number on
/// malformed lines, duplicate keys and unknown keys.
std::map<std::string, std::string> load_config_file(const std::filesystem::path& path);

/// Parses argv (program name excluded). Accepts `--flag value`,
/// `--flag=value`, comma-packed `--protean-args=-name=value,...`, and a
/// `--config` file whose values apply wherever the command line is silent.
/// Throws UsageError; never anything else.
CliConfig parse_args(const std::vector<std::string>& args);

std::string help_text();

/// Scratch root: --scratch-dir, else $PHASEOPT_SCRATCH_DIR, else
/// `<tmp>/phaseopt`.
std::filesystem::path scratch_root(const CliConfig& cfg);

/// Library, cost model, schema and search settings assembled from `cfg`.
/// Throws ConfigError or InfraError.
DriverConfig make_driver_config(const CliConfig& cfg);

/// The whole program: returns the exit status (0 ok, 1 a partition failed,
/// 2 usage or configuration error).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace phaseopt
