// SPDX-License-Identifier: Apache-2.0
#include "phaseopt/cli.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <ostream>
#include <set>
#include <string_view>

#include <CLI11.hpp>

namespace phaseopt {

namespace {

struct EnumText {
  std::string cooling = "geometric";
  std::string crossover = "single-point";
  std::string mutation = "flip-one";
  std::string cost = "ir-analysis";
  std::string engine = "anneal";
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string normalize(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '-' || c == '_') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

template <typename T>
T pick(const std::string& flag, const std::string& value,
       const std::vector<std::pair<std::string, T>>& allowed) {
  for (const auto& [name, v] : allowed) {
    if (normalize(name) == normalize(value)) return v;
  }
  std::string list;
  for (const auto& [name, v] : allowed) list += (list.empty() ? "" : ", ") + name;
  throw UsageError("invalid value \"" + value + "\" for --" + flag + " (allowed: " + list + ")");
}

std::unique_ptr<CLI::App> make_app(CliConfig& c, EnumText& e, std::string& config_path,
                                   std::string& packed) {
  auto app = std::make_unique<CLI::App>(
      "Searches subsequence recipes (orderings of optimization pass pipelines) per IR "
      "module,\nscoring each candidate with a pluggable cost model.",
      "phaseopt");
  app->set_help_flag("-h,--help", "Print this help message and exit");
  app->option_defaults()->always_capture_default();

  const std::string search = "Search";
  app->add_option("--cooling", e.cooling, "Cooling schedule for simulated annealing: geometric, linear")
      ->group(search);
  app->add_option("--max-iterations", c.max_iterations,
                  "Maximum iterations (annealing) or generations (genetic)")
      ->group(search);
  app->add_option("--rng-val", c.rng_val, "Random seed; equal seeds give identical runs")->group(search);
  app->add_option("--max-temperature", c.max_temperature, "Starting temperature for simulated annealing")
      ->group(search);
  app->add_option("--t-floor", c.t_floor, "Temperature reached at the last iteration")->group(search);
  app->add_option("--initial-sample-size", c.initial_sample_size,
                  "Random recipes scored before annealing starts")
      ->group(search);
  app->add_option("--mutation-rate", c.mutation_rate, "Mutation rate for the genetic engine")
      ->check(CLI::Range(0.0, 1.0))
      ->group(search);
  app->add_option("--crossover-rate", c.crossover_rate, "Crossover rate for the genetic engine")
      ->check(CLI::Range(0.0, 1.0))
      ->group(search);
  app->add_option("--population-size", c.population_size, "Population size for the genetic engine")
      ->group(search);
  app->add_option("--crossover-type", e.crossover,
                  "Crossover method: single-point, double-point, uniform")
      ->group(search);
  app->add_option("--mutation-type", e.mutation, "Mutation method: flip-one, swap-two")->group(search);
  app->add_option("--engine", e.engine, "Search engine: anneal, ga")->group(search);
  app->add_option("--max-recipe-length", c.max_recipe_length, "Maximum number of genes in a recipe")
      ->group(search);
  app->add_option("--stall-limit", c.stall_limit,
                  "Stop after this many evaluations leave the best IR unchanged (0 disables)")
      ->group(search);

  const std::string cost = "Cost model";
  app->add_option("--cost-type", e.cost, "Cost model: ir-analysis, mca, instcount, filesize")
      ->group(cost);
  app->add_option("--scorer-cmd", c.scorer_cmd,
                  "External scorer reading feature CSV on stdin, {input} = candidate IR")
      ->group(cost);
  app->add_option("--model-file", c.model_file, "Linear model (bias, then one weight per feature)")
      ->group(cost);
  app->add_option("--mca-cmd", c.mca_cmd, "Cycle count command, {input} = candidate IR")->group(cost);
  app->add_option("--mca-pattern", c.mca_pattern, "Prefix of the cycle count line")->group(cost);
  app->add_option("--schema", c.schema, "Feature schema file (default: built-in 141 columns)")
      ->group(cost);
  app->add_flag("--use-protean-collect", c.use_protean_collect,
                "Write the full feature dump of every candidate next to it")
      ->default_str("false")
      ->group(cost);
  app->add_flag("--module-level-ipc", c.module_level_ipc,
                "Accepted for compatibility; not supported, temp files are used")
      ->default_str("false")
      ->group(cost);

  const std::string run = "Run";
  app->add_option("--library", c.library, "Subsequence library (default: built-in A-E)")->group(run);
  app->add_option("--optimizer-cmd", c.optimizer_cmd,
                  "Optimizer command with {input} {output} {pipeline}")
      ->group(run);
  app->add_option("--baseline-pipeline", c.baseline_pipeline,
                  "Pipeline of the reference artifact (default: the canonical recipe)")
      ->group(run);
  app->add_option("--timeout", c.timeout_seconds, "Seconds allowed per child process")
      ->check(CLI::PositiveNumber)
      ->group(run);
  app->add_option("--workers", c.workers, "Partitions searched in parallel (0 = all cores)")->group(run);
  app->add_option("--finalize-cmd", c.finalize_cmd,
                  "Run once at the end with every output IR path appended")
      ->group(run);
  app->add_flag("--output-table", c.output_table, "Print the search table of every partition")
      ->default_str("false")
      ->group(run);
  app->add_option("--json-out", c.json_out, "Write one JSON summary line per partition")->group(run);
  app->add_option("--scratch-dir", c.scratch_dir, "Work directory root (env PHASEOPT_SCRATCH_DIR)")
      ->group(run);
  app->add_flag("--dump-features", c.dump_features,
                "Print the feature CSV of every input and exit")
      ->default_str("false")
      ->group(run);
  app->add_option("--config", config_path, "key = value file; command-line flags win")->group(run);
  app->add_option("--protean-args", packed, "Comma-packed -name=value items")->group(run);

  app->add_option("inputs", c.inputs, "IR files, one partition each")->default_str("");
  return app;
}

bool is_long_option(const CLI::App& app, const std::string& name) {
  try {
    return app.get_option_no_throw("--" + name) != nullptr;
  } catch (...) {
    return false;
  }
}

// Rewrites every --protean-args item `-name[=value]` as `--name[=value]`;
// a `protean-` prefix is dropped when the remainder names a flag.
std::vector<std::string> expand_packed(const CLI::App& app, const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string packed;
    const std::string& a = args[i];
    if (a.rfind("--protean-args=", 0) == 0) {
      packed = a.substr(15);
    } else if (a == "--protean-args") {
      if (i + 1 >= args.size()) throw UsageError("--protean-args needs a value");
      packed = args[++i];
    } else {
      out.push_back(a);
      continue;
    }
    std::size_t start = 0;
    while (start <= packed.size()) {
      auto end = packed.find(',', start);
      if (end == std::string::npos) end = packed.size();
      std::string item = trim(std::string_view(packed).substr(start, end - start));
      start = end + 1;
      if (item.empty()) continue;
      const auto dashes = item.find_first_not_of('-');
      if (dashes == 0 || dashes == std::string::npos) {
        throw UsageError("malformed --protean-args item \"" + item + "\"");
      }
      item.erase(0, dashes);
      const auto eq = item.find('=');
      std::string name = item.substr(0, eq);
      if (name.rfind("protean-", 0) == 0 && !is_long_option(app, name) &&
          is_long_option(app, name.substr(8))) {
        name = name.substr(8);
      }
      if (name == "protean-args" || name == "config") {
        throw UsageError("--" + name + " cannot appear inside --protean-args");
      }
      out.push_back("--" + name + (eq == std::string::npos ? "" : item.substr(eq)));
    }
  }
  return out;
}

void parse_into(CLI::App& app, const std::vector<std::string>& args) {
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    throw;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
}

void check_config(const CliConfig& c, const EnumText& e) {
  if (c.help) return;
  if (c.inputs.empty()) throw UsageError("no input files");
  if (c.dump_features) return;
  if (c.optimizer_cmd.empty()) throw UsageError("--optimizer-cmd is required");
  if (c.max_iterations == 0) throw UsageError("--max-iterations must be at least 1");
  if (c.max_recipe_length == 0) throw UsageError("--max-recipe-length must be at least 1");
  if (c.population_size < 2) throw UsageError("--population-size must be at least 2");
  switch (c.cost_type) {
    case CostType::IRAnalysis:
      if (c.scorer_cmd.empty() && c.model_file.empty()) {
        throw UsageError("--cost-type=" + e.cost + " needs --scorer-cmd or --model-file");
      }
      break;
    case CostType::MCA:
      if (c.mca_cmd.empty()) throw UsageError("--cost-type=mca needs --mca-cmd");
      break;
    default:
      break;
  }
}

}  // namespace

std::map<std::string, std::string> load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path.string());
  CliConfig scratch;
  EnumText e;
  std::string cfg_path, packed;
  const auto app = make_app(scratch, e, cfg_path, packed);

  std::map<std::string, std::string> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto where = path.string() + ":" + std::to_string(n) + ": ";
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw UsageError(where + "expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw UsageError(where + "missing key");
    if (key == "config" || key == "protean-args" || key == "help" || !is_long_option(*app, key)) {
      throw UsageError(where + "unknown key \"" + key + "\"");
    }
    if (!out.emplace(key, value).second) throw UsageError(where + "duplicate key \"" + key + "\"");
  }
  return out;
}

CliConfig parse_args(const std::vector<std::string>& args) {
  try {
    CliConfig c;
    EnumText e;
    std::string config_path, packed;
    auto app = make_app(c, e, config_path, packed);
    const auto expanded = expand_packed(*app, args);
    try {
      parse_into(*app, expanded);
    } catch (const CLI::CallForHelp&) {
      CliConfig h;
      h.help = true;
      return h;
    }

    if (!config_path.empty()) {
      std::vector<std::string> merged;
      for (const auto& [key, value] : load_config_file(config_path)) {
        if (app->get_option("--" + key)->count() == 0) merged.push_back("--" + key + "=" + value);
      }
      merged.insert(merged.end(), expanded.begin(), expanded.end());
      c = CliConfig{};
      e = EnumText{};
      app = make_app(c, e, config_path, packed);
      try {
        parse_into(*app, merged);
      } catch (const CLI::CallForHelp&) {
        CliConfig h;
        h.help = true;
        return h;
      }
    }

    c.cooling = pick<CoolingKind>("cooling", e.cooling,
                                  {{"geometric", CoolingKind::Geometric}, {"linear", CoolingKind::Linear}});
    c.crossover_type = pick<CrossoverKind>("crossover-type", e.crossover,
                                           {{"single-point", CrossoverKind::SinglePoint},
                                            {"double-point", CrossoverKind::DoublePoint},
                                            {"uniform", CrossoverKind::Uniform}});
    c.mutation_type = pick<MutationKind>(
        "mutation-type", e.mutation, {{"flip-one", MutationKind::FlipOne}, {"swap-two", MutationKind::SwapTwo}});
    c.cost_type = pick<CostType>("cost-type", e.cost,
                                 {{"ir-analysis", CostType::IRAnalysis},
                                  {"mca", CostType::MCA},
                                  {"instcount", CostType::InstCount},
                                  {"filesize", CostType::FileSize}});
    c.engine = pick<EngineChoice>("engine", e.engine,
                                  {{"anneal", EngineChoice::Anneal}, {"ga", EngineChoice::Genetic}});
    check_config(c, e);
    return c;
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& ex) {
    throw UsageError(ex.what());
  }
}

std::string help_text() {
  CliConfig c;
  EnumText e;
  std::string cfg_path, packed;
  return make_app(c, e, cfg_path, packed)->help();
}

std::filesystem::path scratch_root(const CliConfig& cfg) {
  if (!cfg.scratch_dir.empty()) return cfg.scratch_dir;
  if (const char* env = std::getenv("PHASEOPT_SCRATCH_DIR"); env && *env) return env;
  return std::filesystem::temp_directory_path() / "phaseopt";
}

DriverConfig make_driver_config(const CliConfig& c) {
  DriverConfig d;
  d.library = SubsequenceLibrary::load(
      c.library.empty() ? std::filesystem::path(PHASEOPT_DATA_DIR) / "subsequences_default.tsv"
                        : std::filesystem::path(c.library));
  d.schema = c.schema.empty() ? FeatureSchema::default_schema() : FeatureSchema::load(c.schema);

  const auto timeout =
      std::chrono::milliseconds(static_cast<long long>(c.timeout_seconds * 1000.0 + 0.5));
  d.apply.optimizer = CommandTemplate::parse(c.optimizer_cmd);
  d.apply.timeout = timeout;
  d.apply.baseline_pipeline = c.baseline_pipeline;
  d.apply.validate();

  CostConfig cc;
  cc.type = c.cost_type;
  cc.scorer_cmd = c.scorer_cmd;
  cc.model_file = c.model_file;
  cc.mca_cmd = c.mca_cmd;
  cc.mca_pattern = c.mca_pattern;
  cc.timeout = timeout;
  d.cost = make_cost_model(cc, d.schema);

  SearchConfig& s = d.search;
  s.engine = c.engine;
  s.max_length = c.max_recipe_length;
  s.anneal.cooling.kind = c.cooling;
  s.anneal.cooling.t_max = c.max_temperature;
  s.anneal.cooling.t_floor = c.t_floor;
  s.anneal.cooling.max_iterations = c.max_iterations;
  s.anneal.initial_sample_size = c.initial_sample_size;
  s.anneal.rng_seed = c.rng_val;
  s.anneal.stall_limit = c.stall_limit;
  s.anneal.cooling.validate();
  s.ga.population_size = c.population_size;
  s.ga.mutation_rate = c.mutation_rate;
  s.ga.crossover_rate = c.crossover_rate;
  s.ga.crossover = c.crossover_type;
  s.ga.mutation = c.mutation_type;
  s.ga.generations = c.max_iterations;
  s.ga.rng_seed = c.rng_val;
  s.ga.stall_limit = c.stall_limit;
  s.ga.validate();
  SpaceConfig::of(d.library, c.max_recipe_length).validate();

  d.dump_features = c.use_protean_collect;
  d.scratch_root = scratch_root(c);
  d.workers = c.workers;
  if (!c.finalize_cmd.empty()) {
    d.finalize = CommandTemplate::parse(c.finalize_cmd);
    if (!command_exists(d.finalize->argv().front())) {
      throw InfraError("finalize command \"" + d.finalize->argv().front() + "\" not found");
    }
  }
  return d;
}

namespace {

int dump_features(const CliConfig& c, std::ostream& out, std::ostream& err) {
  const FeatureSchema schema =
      c.schema.empty() ? FeatureSchema::default_schema() : FeatureSchema::load(c.schema);
  int status = 0;
  for (const auto& input : c.inputs) {
    try {
      out << dump_features_csv(collect_features(parse_ir_file(input), schema), schema);
    } catch (const Error& e) {
      err << "phaseopt: " << input << ": " << e.what() << '\n';
      status = 1;
    }
  }
  return status;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CliConfig c;
  try {
    c = parse_args(args);
  } catch (const UsageError& e) {
    err << "phaseopt: " << e.what() << "\nRun with --help for usage.\n";
    return 2;
  }
  if (c.help) {
    out << help_text();
    return 0;
  }
  if (c.module_level_ipc) {
    err << "phaseopt: --module-level-ipc is not supported, using temp files\n";
  }
  try {
    if (c.dump_features) return dump_features(c, out, err);

    const DriverConfig d = make_driver_config(c);
    std::vector<std::filesystem::path> inputs(c.inputs.begin(), c.inputs.end());
    const RunReport report = run_driver(inputs, d);

    if (c.output_table) {
      for (const auto& r : report.results) {
        TraceFooter f;
        f.explored = r.explored;
        f.module_path = r.input_path.string();
        f.final_recipe = r.best;
        if (r.best) f.final_pipeline = expand_recipe(*r.best, d.library);
        out << render_trace(r.trace, r.id, &f) << '\n';
      }
    }
    out << render_summary(report.results);
    for (const auto& r : report.results) {
      for (const auto& w : r.warnings) err << "phaseopt: " << r.id << ": warning: " << w << '\n';
      if (r.error) err << "phaseopt: " << r.id << ": " << *r.error << '\n';
    }
    if (report.finalize_error) err << "phaseopt: finalize: " << *report.finalize_error << '\n';
    if (report.finalize && !report.finalize->succeeded()) {
      err << "phaseopt: finalize: " << report.finalize->describe() << '\n' << report.finalize->err;
    }
    if (!c.json_out.empty()) {
      std::ofstream json(c.json_out, std::ios::binary | std::ios::trunc);
      if (!json) throw InfraError("cannot write " + c.json_out);
      for (const auto& r : report.results) json << summary_json(r) << '\n';
    }
    return report.any_failed() ? 1 : 0;
  } catch (const Error& e) {
    err << "phaseopt: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace phaseopt
