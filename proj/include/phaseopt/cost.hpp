// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phaseopt/features.hpp"
#include "phaseopt/score.hpp"
#include "phaseopt/subprocess.hpp"

namespace phaseopt {

enum class CostType { IRAnalysis, MCA, InstCount, FileSize };
std::string_view to_string(CostType t);

/// The last few feature vectors of a search, oldest first.
class HistoryBuffer {
 public:
  static constexpr std::size_t kCapacity = 5;

  /// Throws ConfigError when `fv` does not match the vectors already held.
  void push(FeatureVector fv);
  const std::deque<FeatureVector>& window() const noexcept { return window_; }
  std::size_t size() const noexcept { return window_.size(); }
  bool empty() const noexcept { return window_.empty(); }

 private:
  std::deque<FeatureVector> window_;
};

HistoryBuffer push_history(HistoryBuffer h, FeatureVector fv);

/// Element-wise mean of the window. Throws Error when the buffer is empty.
FeatureVector aggregate_history(const HistoryBuffer& h);

/// Reference measurements of a partition against which speedups are taken.
struct Baseline {
  std::size_t instcount = 0;
  std::uintmax_t bytes = 0;
  std::optional<std::uint64_t> cycles;
};

struct ScoringContext {
  std::filesystem::path candidate;
  const HistoryBuffer* history = nullptr;
  Baseline baseline;
};

class CostModel {
 public:
  virtual ~CostModel() = default;
  virtual CostType type() const noexcept = 0;
  /// Whether the caller must push the candidate's features to the history
  /// before calling score().
  virtual bool needs_features() const noexcept { return false; }
  /// Whether Baseline::cycles must be measured.
  virtual bool needs_cycles() const noexcept { return false; }
  virtual ScoreOutcome score(const ScoringContext& ctx) const = 0;
  /// Cycle count of `ir`, for cost models that use one.
  virtual std::optional<std::uint64_t> measure_cycles(const std::filesystem::path&) const {
    return std::nullopt;
  }
};

/// Writes the aggregated history as two CSV lines (schema names, values) to
/// the scorer's stdin and reads one positive decimal from its stdout. The
/// command may contain `{input}`, replaced by the candidate IR path.
ScoreOutcome score_external(const CommandTemplate& scorer, const HistoryBuffer& h,
                            const FeatureSchema& schema, std::chrono::milliseconds timeout,
                            const std::filesystem::path& candidate = {});

/// Instructions as counted by parse_ir over all function bodies.
std::optional<std::size_t> count_instructions(const std::filesystem::path& ir);

ScoreOutcome score_instcount(const std::filesystem::path& ir, std::size_t baseline_instcount);
ScoreOutcome score_filesize(const std::filesystem::path& ir, std::uintmax_t baseline_bytes);

inline constexpr std::string_view kDefaultMcaPattern = "Total Cycles:";

/// Integer after the first line (leading whitespace ignored) starting with
/// `prefix`.
std::optional<std::uint64_t> parse_cycle_count(std::string_view output, std::string_view prefix);

/// Runs the command (`{input}` replaced by the IR path) and returns
/// baseline_cycles / candidate_cycles.
ScoreOutcome score_mca(const CommandTemplate& mca, const std::filesystem::path& ir,
                       std::uint64_t baseline_cycles, std::chrono::milliseconds timeout,
                       std::string_view prefix = kDefaultMcaPattern);

/// Bias plus weights, one per schema column.
struct LinearModel {
  double bias = 0;
  std::vector<double> weights;

  /// One number per line, bias first; blank lines and `#` comments skipped.
  static LinearModel parse(std::string_view text, std::size_t features);
  static LinearModel load(const std::filesystem::path& path, std::size_t features);
};

inline constexpr double kDefaultScoreFloor = 1e-6;

/// bias + dot(weights, aggregate_history(h)), clamped below at `floor`.
ScoreOutcome score_linear_model(const LinearModel& model, const HistoryBuffer& h,
                                double floor = kDefaultScoreFloor);

struct CostConfig {
  CostType type = CostType::IRAnalysis;
  std::string scorer_cmd;
  std::filesystem::path model_file;
  std::string mca_cmd;
  std::string mca_pattern = std::string(kDefaultMcaPattern);
  std::chrono::milliseconds timeout{60000};
  double score_floor = kDefaultScoreFloor;
};

/// Validates the configuration (ConfigError) and checks that external
/// commands exist (InfraError).
std::unique_ptr<CostModel> make_cost_model(const CostConfig& cfg, const FeatureSchema& schema);

}  // namespace phaseopt
