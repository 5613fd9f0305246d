// SPDX-License-Identifier: Apache-2.0
#include "phaseopt/driver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "phaseopt/error.hpp"

namespace phaseopt {

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InfraError("cannot read " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::string extension_of(const fs::path& p) {
  const auto ext = p.extension().string();
  return ext.empty() ? ".ll" : ext;
}

std::string excerpt(const std::string& err) {
  if (err.size() <= kStderrExcerptBytes) return err;
  return err.substr(err.size() - kStderrExcerptBytes);
}

void append_log(const Partition& p, const std::string& header, const std::string& err) {
  std::ofstream log(p.work_dir / "optimizer.log", std::ios::app);
  if (!log) return;
  log << header << '\n' << err;
  if (!err.empty() && err.back() != '\n') log << '\n';
}

ApplyOutcome run_pipeline(const Partition& p, const fs::path& out, const std::string& pipeline,
                          const std::string& label, const ApplyConfig& cfg) {
  ApplyOutcome a;
  std::error_code ec;
  fs::remove(out, ec);
  const auto argv = cfg.optimizer.render(
      {{"input", p.input_path.string()}, {"output", out.string()}, {"pipeline", pipeline}});
  const ProcessResult pr = run_process(argv, {}, cfg.timeout);
  a.spawned = true;
  if (!pr.err.empty() || !pr.succeeded()) {
    append_log(p, "[" + label + "] " + pr.describe(), pr.err);
  }
  if (!pr.succeeded()) {
    a.failure = "optimizer " + pr.describe();
    if (!pr.err.empty()) a.failure += ": " + excerpt(pr.err);
    return a;
  }
  if (!fs::is_regular_file(out, ec)) {
    a.failure = "optimizer produced no output file";
    if (!pr.err.empty()) a.failure += ": " + excerpt(pr.err);
    return a;
  }
  a.result = ApplyResult{out, ir_fingerprint(read_file(out))};
  return a;
}

Baseline measure(const fs::path& ir, const CostModel* cost) {
  Baseline b;
  b.bytes = fs::file_size(ir);
  if (auto n = count_instructions(ir)) b.instcount = *n;
  if (cost && cost->needs_cycles()) b.cycles = cost->measure_cycles(ir);
  return b;
}

}  // namespace

std::vector<Partition> partition_inputs(const std::vector<fs::path>& paths,
                                        const fs::path& scratch_root) {
  if (paths.empty()) throw ConfigError("no input files");
  std::vector<Partition> out;
  std::set<std::string> used;
  for (const auto& path : paths) {
    std::ifstream in(path, std::ios::binary);
    std::error_code ec;
    if (!in || fs::is_directory(path, ec)) {
      throw ConfigError("cannot read input file " + path.string());
    }
    Partition p;
    p.input_path = path;
    const std::string stem = path.stem().string().empty() ? "input" : path.stem().string();
    p.id = stem;
    for (std::size_t i = 1; used.count(p.id); ++i) p.id = stem + "-" + std::to_string(i);
    used.insert(p.id);
    p.work_dir = scratch_root / p.id;
    fs::create_directories(p.work_dir, ec);
    if (ec) throw InfraError("cannot create " + p.work_dir.string() + ": " + ec.message());
    p.baseline.bytes = fs::file_size(path, ec);
    if (auto n = count_instructions(path)) p.baseline.instcount = *n;
    out.push_back(std::move(p));
  }
  return out;
}

void ApplyConfig::validate() const {
  if (optimizer.empty()) throw ConfigError("optimizer command is empty");
  for (const char* name : {"input", "output", "pipeline"}) {
    const auto n = optimizer.count(name);
    if (n != 1) {
      throw ConfigError("optimizer command must contain {" + std::string(name) +
                        "} exactly once (found " + std::to_string(n) + ")");
    }
  }
  if (optimizer.argv().front().find('{') != std::string::npos) {
    throw ConfigError("optimizer command must start with the program name");
  }
  if (!command_exists(optimizer.argv().front())) {
    throw InfraError("optimizer \"" + optimizer.argv().front() + "\" not found");
  }
  if (timeout.count() <= 0) throw ConfigError("optimizer timeout must be positive");
}

fs::path artifact_path(const Partition& p, const Recipe& r) {
  const std::string genes = r.empty() ? "empty" : r.genes();
  return p.work_dir / ("recipe-" + genes + extension_of(p.input_path));
}

ApplyOutcome apply_recipe(const Partition& p, const Recipe& r, const SubsequenceLibrary& lib,
                          const ApplyConfig& cfg) {
  const std::string pipeline = expand_recipe(r, lib);
  const fs::path out = artifact_path(p, r);
  if (r.empty()) {
    std::error_code ec;
    fs::copy_file(p.input_path, out, fs::copy_options::overwrite_existing, ec);
    if (ec) throw InfraError("cannot copy " + p.input_path.string() + ": " + ec.message());
    ApplyOutcome a;
    a.result = ApplyResult{out, ir_fingerprint(read_file(out))};
    return a;
  }
  return run_pipeline(p, out, pipeline, "recipe " + r.genes(), cfg);
}

const CacheEntry* EvalCache::find(const Recipe& r) const {
  const auto it = entries_.find(r.genes());
  return it == entries_.end() ? nullptr : &it->second;
}

bool EvalCache::insert(const Recipe& r, CacheEntry e) {
  return entries_.emplace(r.genes(), std::move(e)).second;
}

void EvalCache::stash_artifact(const Recipe& r, ApplyOutcome a) {
  artifacts_.insert_or_assign(r.genes(), std::move(a));
}

std::optional<ApplyOutcome> EvalCache::take_artifact(const Recipe& r) {
  const auto it = artifacts_.find(r.genes());
  if (it == artifacts_.end()) return std::nullopt;
  ApplyOutcome a = std::move(it->second);
  artifacts_.erase(it);
  return a;
}

ScoreOutcome evaluate(const Partition& p, const Recipe& r, const EvalContext& ctx,
                      EvalCache& cache, HistoryBuffer& history) {
  if (const CacheEntry* hit = cache.find(r)) return hit->outcome;

  ApplyOutcome a;
  if (auto stashed = cache.take_artifact(r)) {
    a = std::move(*stashed);
  } else {
    a = apply_recipe(p, r, *ctx.library, *ctx.apply);
    if (a.spawned) ++cache.spawns;
  }

  CacheEntry entry;
  if (!a.result) {
    entry.outcome = ScoreOutcome::failed(a.failure);
    cache.insert(r, entry);
    return entry.outcome;
  }
  entry.fingerprint = a.result->fingerprint;
  entry.output = a.result->output;

  const bool want_features = ctx.cost->needs_features() || ctx.dump_features;
  if (want_features) {
    IrModel model;
    try {
      model = parse_ir_file(a.result->output);
    } catch (const ParseError& e) {
      entry.outcome = ScoreOutcome::failed(std::string("unparseable optimizer output: ") + e.what());
      cache.insert(r, entry);
      return entry.outcome;
    }
    if (ctx.dump_features) {
      const auto rows = collect_features(model, *ctx.schema);
      fs::path dump = a.result->output;
      dump += ".pfs.csv";
      std::ofstream out(dump, std::ios::binary);
      if (!out) throw InfraError("cannot write " + dump.string());
      out << dump_features_csv(rows, *ctx.schema);
    }
    if (ctx.cost->needs_features()) history.push(module_feature_vector(model, *ctx.schema));
  }

  ScoringContext sc;
  sc.candidate = a.result->output;
  sc.history = &history;
  sc.baseline = p.baseline;
  entry.outcome = ctx.cost->score(sc);
  cache.insert(r, entry);
  return entry.outcome;
}

std::string_view to_string(EngineChoice e) {
  return e == EngineChoice::Anneal ? "anneal" : "ga";
}

PartitionResult optimize_partition(const Partition& input, const SearchConfig& search,
                                   const EvalContext& ctx) {
  PartitionResult res;
  res.id = input.id;
  res.input_path = input.input_path;
  Partition p = input;
  EvalCache cache(p.id);
  try {
    const SpaceConfig space = SpaceConfig::of(*ctx.library, search.max_length);
    const Recipe canonical = canonical_recipe(space);
    std::ofstream(p.work_dir / "optimizer.log", std::ios::trunc);

    if (ctx.cost->needs_features() || ctx.cost->type() == CostType::InstCount) {
      try {
        parse_ir_file(p.input_path);
      } catch (const ParseError& e) {
        throw InfraError("input " + p.input_path.string() + " does not parse: " + e.what());
      }
    }

    // Reference artifact: shared with the canonical recipe unless a custom
    // baseline pipeline is configured.
    ApplyOutcome base;
    if (ctx.apply->baseline_pipeline.empty()) {
      base = apply_recipe(p, canonical, *ctx.library, *ctx.apply);
      if (base.spawned) ++cache.spawns;
      cache.stash_artifact(canonical, base);
    } else {
      base = run_pipeline(p, p.work_dir / ("baseline" + extension_of(p.input_path)),
                          ctx.apply->baseline_pipeline, "baseline", *ctx.apply);
    }
    const fs::path base_ir = base.result ? base.result->output : p.input_path;
    if (!base.result) res.warnings.push_back("baseline failed, using the input: " + base.failure);
    p.baseline = measure(base_ir, ctx.cost);

    HistoryBuffer history;
    if (ctx.cost->needs_features()) {
      try {
        history.push(module_feature_vector(parse_ir_file(base_ir), *ctx.schema));
      } catch (const ParseError&) {
        history.push(module_feature_vector(parse_ir_file(p.input_path), *ctx.schema));
      }
    }

    const CostFn cost = [&](const Recipe& r) { return evaluate(p, r, ctx, cache, history); };
    const StallFn stall = [&](const Recipe& r, const ScoreOutcome& o, const Recipe* best) {
      if (!o.ok() || !best) return false;
      const CacheEntry* e = cache.find(r);
      const CacheEntry* b = cache.find(*best);
      return e && b && e->fingerprint && e->fingerprint == b->fingerprint;
    };

    SearchResult sr;
    if (search.engine == EngineChoice::Anneal) {
      sr = run_annealing(search.anneal, space, cost, stall);
    } else {
      sr = run_ga(search.ga, space, cost, stall);
    }

    res.best = sr.best;
    res.best_score = sr.best_cost;
    res.iterations = sr.trace.rows.size();
    res.failures = sr.failures;
    res.terminal_reason = sr.trace.terminal_reason;
    res.trace = std::move(sr.trace);
    res.evaluations = sr.evaluations;
    res.explored = cache.size();

    if (res.best) {
      const CacheEntry* e = cache.find(*res.best);
      if (!e || !e->output || !e->fingerprint) throw Error("best recipe has no artifact");
      const fs::path final_path = p.work_dir / (p.id + ".best" + extension_of(p.input_path));
      std::error_code ec;
      fs::copy_file(*e->output, final_path, fs::copy_options::overwrite_existing, ec);
      if (ec) throw InfraError("cannot write " + final_path.string() + ": " + ec.message());
      const auto fp = ir_fingerprint(read_file(final_path));
      if (fp != *e->fingerprint) {
        throw InfraError("artifact of recipe " + res.best->genes() + " changed during the search");
      }
      res.output = final_path;
      res.output_fingerprint = fp;
    }
  } catch (const std::exception& e) {
    res.error = e.what();
    res.explored = cache.size();
  }
  res.spawns = cache.spawns;
  return res;
}

bool RunReport::any_failed() const {
  if (finalize_error) return true;
  if (finalize && !finalize->succeeded()) return true;
  return std::any_of(results.begin(), results.end(),
                     [](const PartitionResult& r) { return r.error.has_value(); });
}

RunReport run_driver(const std::vector<fs::path>& inputs, const DriverConfig& cfg) {
  if (!cfg.cost) throw ConfigError("no cost model configured");
  cfg.apply.validate();
  const auto partitions = partition_inputs(inputs, cfg.scratch_root);

  EvalContext ctx;
  ctx.library = &cfg.library;
  ctx.apply = &cfg.apply;
  ctx.cost = cfg.cost.get();
  ctx.schema = &cfg.schema;
  ctx.dump_features = cfg.dump_features;

  RunReport report;
  report.results.resize(partitions.size());
  std::size_t width = cfg.workers ? cfg.workers : std::thread::hardware_concurrency();
  width = std::clamp<std::size_t>(width, 1, partitions.size());

  std::atomic<std::size_t> next{0};
  std::mutex collect;
  auto worker = [&] {
    for (std::size_t i = next++; i < partitions.size(); i = next++) {
      PartitionResult r = optimize_partition(partitions[i], cfg.search, ctx);
      std::lock_guard lock(collect);
      report.results[i] = std::move(r);
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < width; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  if (cfg.finalize && !cfg.finalize->empty()) {
    std::vector<std::string> argv = cfg.finalize->argv();
    for (const auto& r : report.results) {
      if (r.output) argv.push_back(r.output->string());
    }
    try {
      report.finalize = run_process(argv, {}, cfg.finalize_timeout);
    } catch (const Error& e) {
      report.finalize_error = e.what();
    }
  }
  return report;
}

std::string format_temperature(double t) {
  const double truncated = std::floor(t * 1000.0 + 1e-9) / 1000.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", truncated);
  return buf;
}

namespace {

std::string format_cost(const std::optional<double>& c, const char* missing) {
  if (!c) return missing;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", *c);
  return buf;
}

std::string state(const Recipe& r) { return r.empty() ? "-" : r.genes(); }

std::string pad_left(std::string s, std::size_t w) {
  if (s.size() < w) s.insert(0, w - s.size(), ' ');
  return s;
}

std::string pad_right(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

void banner(std::ostringstream& os, const std::string& line) {
  os << line << '\n' << std::string(line.size() - 1, '-') << '\n';
}

}  // namespace

std::string render_trace(const SearchTrace& t, std::string_view partition_id,
                         const TraceFooter* footer) {
  const bool sa = t.engine == EngineKind::Annealing;
  std::ostringstream os;
  banner(os, sa ? "phaseopt :: Beginning Simulated Annealing..."
                : "phaseopt :: Beginning Genetic Search...");
  banner(os, "phaseopt :: Optimizing module \"" + std::string(partition_id) + "\"");
  os << "Iteration  Current State       Next State     Best State    Current Cost    "
        "Next Cost        Best Cost     Temperature\n";
  for (const auto& row : t.rows) {
    std::string line = pad_right(std::to_string(row.iteration), 12);
    line += pad_left(state(row.current), 5);
    line += pad_left(state(row.next), 20);
    line += pad_left(row.best_cost ? state(row.best) : "-", 15);
    line += std::string(9, ' ');
    line += pad_right(format_cost(row.current_cost, "FAIL"), 16);
    line += pad_right(format_cost(row.next_cost, "FAIL"), 16);
    line += pad_right(format_cost(row.best_cost, "-"), 14);
    line += pad_left(format_temperature(row.temperature), 7);
    os << line << '\n';
  }
  if (footer) {
    os << '\n' << "Explored Recipes Size: " << footer->explored << '\n';
    os << "phaseopt :: " << (sa ? "Simulated Annealing" : "Genetic Search")
       << " finished running for Module " << footer->module_path << '\n';
    if (footer->final_recipe) {
      os << "The final recipe accepted is \"" << footer->final_recipe->genes() << "\":\n"
         << footer->final_pipeline << '\n';
    } else {
      os << "No recipe was accepted.\n";
    }
  }
  return os.str();
}

std::string summary_json(const PartitionResult& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["best_recipe"] = nullptr;
  if (r.best) j["best_recipe"] = r.best->genes();
  j["best_score"] = nullptr;
  if (r.best_score) j["best_score"] = *r.best_score;
  j["iterations"] = r.iterations;
  j["failures"] = r.failures;
  j["terminal_reason"] = r.error ? "error" : std::string(to_string(r.terminal_reason));
  j["explored"] = r.explored;
  if (r.error) j["error"] = *r.error;
  return j.dump();
}

std::string render_summary(const std::vector<PartitionResult>& results) {
  std::size_t id_w = 9;
  for (const auto& r : results) id_w = std::max(id_w, r.id.size());
  std::ostringstream os;
  os << pad_right("Partition", id_w) << "  " << pad_right("Best", 8) << "  "
     << pad_left("Score", 10) << "  " << pad_left("Iterations", 10) << "  "
     << pad_left("Failures", 8) << "  Status\n";
  for (const auto& r : results) {
    os << pad_right(r.id, id_w) << "  " << pad_right(r.best ? state(*r.best) : "-", 8) << "  "
       << pad_left(format_cost(r.best_score, "-"), 10) << "  "
       << pad_left(std::to_string(r.iterations), 10) << "  "
       << pad_left(std::to_string(r.failures), 8) << "  "
       << (r.error ? "error: " + *r.error : std::string(to_string(r.terminal_reason))) << '\n';
  }
  return os.str();
}

}  // namespace phaseopt
