// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phaseopt/cost.hpp"
#include "phaseopt/features.hpp"
#include "phaseopt/recipe.hpp"
#include "phaseopt/search.hpp"
#include "phaseopt/subprocess.hpp"

namespace phaseopt {

namespace fs = std::filesystem;

/// One independently optimized input file.
struct Partition {
  std::string id;
  fs::path input_path;
  fs::path work_dir;
  /// Metrics of the raw input; replaced by the baseline artifact's metrics
  /// when the search starts.
  Baseline baseline;
};

/// One partition per input, ids from file stems with `-1`, `-2`, ... added
/// on collision; work directories are created as `scratch_root/<id>`.
/// Throws ConfigError on an empty list or an unreadable file.
std::vector<Partition> partition_inputs(const std::vector<fs::path>& paths,
                                        const fs::path& scratch_root);

struct ApplyConfig {
  /// Must contain {input}, {output} and {pipeline} exactly once each.
  CommandTemplate optimizer;
  std::chrono::milliseconds timeout{60000};
  /// Pipeline producing the reference artifact; empty means the expansion of
  /// the canonical recipe.
  std::string baseline_pipeline;

  /// ConfigError on malformed placeholders, InfraError when the optimizer
  /// binary cannot be found.
  void validate() const;
};

struct ApplyResult {
  fs::path output;
  std::uint64_t fingerprint = 0;
};

struct ApplyOutcome {
  std::optional<ApplyResult> result;
  std::string failure;  // set when result is empty
  bool spawned = false;
};

inline constexpr std::size_t kStderrExcerptBytes = 2048;

/// Path of the artifact produced for `r` inside the partition's work dir.
fs::path artifact_path(const Partition& p, const Recipe& r);

/// Runs the optimizer on the partition input with the recipe's pipeline.
/// Nonzero exit, death by signal, timeout or a missing output file yield a
/// failure carrying at most kStderrExcerptBytes of stderr. The empty recipe
/// copies the input without spawning anything. Child stderr is appended to
/// `work_dir/optimizer.log`.
ApplyOutcome apply_recipe(const Partition& p, const Recipe& r, const SubsequenceLibrary& lib,
                          const ApplyConfig& cfg);

struct CacheEntry {
  ScoreOutcome outcome = ScoreOutcome::failed("unscored");
  std::optional<std::uint64_t> fingerprint;
  std::optional<fs::path> output;
};

/// Scored recipes of one partition, plus artifacts applied ahead of scoring
/// (the baseline). Entries are written once.
class EvalCache {
 public:
  explicit EvalCache(std::string partition_id = "") : partition_(std::move(partition_id)) {}

  const CacheEntry* find(const Recipe& r) const;
  /// Returns false (and keeps the old entry) when `r` is already present.
  bool insert(const Recipe& r, CacheEntry e);
  std::size_t size() const noexcept { return entries_.size(); }
  const std::string& partition() const noexcept { return partition_; }

  void stash_artifact(const Recipe& r, ApplyOutcome a);
  std::optional<ApplyOutcome> take_artifact(const Recipe& r);

  /// Optimizer processes spawned on behalf of this cache.
  std::size_t spawns = 0;

 private:
  std::string partition_;
  std::map<std::string, CacheEntry> entries_;
  std::map<std::string, ApplyOutcome> artifacts_;
};

struct EvalContext {
  const SubsequenceLibrary* library = nullptr;
  const ApplyConfig* apply = nullptr;
  const CostModel* cost = nullptr;
  const FeatureSchema* schema = nullptr;
  /// Write the full feature dump of every scored artifact next to it.
  bool dump_features = false;
};

/// Cached apply-and-score. Cache hits never spawn. On a miss the recipe is
/// applied; on success the artifact's module features are pushed to the
/// history (when the cost model needs them) and scored. Failures are cached
/// like scores.
ScoreOutcome evaluate(const Partition& p, const Recipe& r, const EvalContext& ctx,
                      EvalCache& cache, HistoryBuffer& history);

enum class EngineChoice { Anneal, Genetic };
std::string_view to_string(EngineChoice e);

struct SearchConfig {
  EngineChoice engine = EngineChoice::Anneal;
  AnnealerConfig anneal;
  GaConfig ga;
  std::size_t max_length = 5;
};

struct PartitionResult {
  std::string id;
  fs::path input_path;
  std::optional<Recipe> best;
  std::optional<double> best_score;
  std::size_t iterations = 0;
  std::size_t failures = 0;
  TerminalReason terminal_reason = TerminalReason::IterationsExhausted;
  SearchTrace trace;
  std::optional<fs::path> output;
  std::optional<std::uint64_t> output_fingerprint;
  /// Distinct recipes scored (the "Explored Recipes Size").
  std::size_t explored = 0;
  std::size_t evaluations = 0;
  std::size_t spawns = 0;
  std::vector<std::string> warnings;
  /// Set when the partition aborted on an infrastructure or input error.
  std::optional<std::string> error;
};

/// Baseline artifact, then the chosen engine over evaluate(). The stall
/// counter advances while the evaluated artifact's fingerprint equals the
/// best artifact's. The winning artifact is copied to
/// `work_dir/<id>.best<ext>` and its fingerprint re-checked. Errors are
/// reported in PartitionResult::error, never thrown.
PartitionResult optimize_partition(const Partition& p, const SearchConfig& search,
                                   const EvalContext& ctx);

struct DriverConfig {
  SearchConfig search;
  SubsequenceLibrary library;
  ApplyConfig apply;
  std::shared_ptr<const CostModel> cost;
  FeatureSchema schema = FeatureSchema::default_schema();
  bool dump_features = false;
  fs::path scratch_root;
  /// 0 means std::thread::hardware_concurrency().
  std::size_t workers = 0;
  /// Run once after all partitions with every output path appended.
  std::optional<CommandTemplate> finalize;
  std::chrono::milliseconds finalize_timeout{600000};
};

struct RunReport {
  std::vector<PartitionResult> results;  // in input order
  std::optional<ProcessResult> finalize;
  std::optional<std::string> finalize_error;

  bool any_failed() const;
};

RunReport run_driver(const std::vector<fs::path>& inputs, const DriverConfig& cfg);

/// The search table of one partition. `footer` adds the explored count,
/// the finished banner and the expanded final recipe.
struct TraceFooter {
  std::size_t explored = 0;
  std::string module_path;
  std::optional<Recipe> final_recipe;
  std::string final_pipeline;
};

std::string render_trace(const SearchTrace& t, std::string_view partition_id,
                         const TraceFooter* footer = nullptr);

/// Temperature with three decimals, truncated.
std::string format_temperature(double t);

/// One JSON object (single line, no trailing newline): id, best_recipe,
/// best_score, iterations, failures, terminal_reason, explored, and error
/// when set.
std::string summary_json(const PartitionResult& r);

/// Fixed-width per-partition summary table.
std::string render_summary(const std::vector<PartitionResult>& results);

}  // namespace phaseopt
