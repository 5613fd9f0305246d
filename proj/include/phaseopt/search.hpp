// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "phaseopt/recipe.hpp"
#include "phaseopt/rng.hpp"
#include "phaseopt/score.hpp"

namespace phaseopt {

enum class CoolingKind { Geometric, Linear };

/// Temperature as a function of the iteration index.
///
/// Geometric: t_max * r^k with r = (t_floor / t_max)^(1 / max_iterations).
/// Linear:    t_max - k * (t_max - t_floor) / max_iterations.
/// With the defaults (100, 1, 20 iterations) the geometric schedule yields
/// 100, 79.43, 63.10, ... and reaches 1.26 at k = 19.
struct CoolingSchedule {
  CoolingKind kind = CoolingKind::Geometric;
  double t_max = 100.0;
  double t_floor = 1.0;
  std::size_t max_iterations = 100;

  void validate() const;
  /// Per-iteration ratio of the geometric schedule.
  double ratio() const;
  /// Throws std::out_of_range unless k < max_iterations.
  double temperature_at(std::size_t k) const;
};

/// Metropolis rule for a maximized score: 1 on strict improvement, otherwise
/// exp((next - present) / T), which lies in (0, 1]. Throws std::domain_error
/// on non-finite inputs or T <= 0.
double acceptance_probability(double next_cost, double present_cost,
                              double temperature);

/// True with probability `prob`. Always draws exactly one number.
bool accept_step(double prob, Rng& rng);

enum class TerminalReason { IterationsExhausted, EarlyExitStall, EnumerationComplete };
std::string_view to_string(TerminalReason r);

enum class EngineKind { Annealing, Genetic };

/// One iteration (annealing) or generation (genetic). `current` is the state
/// before that iteration's acceptance decision. Costs are empty for states
/// whose evaluation failed or that have not been scored.
struct TraceRow {
  std::size_t iteration = 0;
  Recipe current;
  Recipe next;
  Recipe best;
  std::optional<double> current_cost;
  std::optional<double> next_cost;
  std::optional<double> best_cost;
  double temperature = 0.0;
};

struct SearchTrace {
  EngineKind engine = EngineKind::Annealing;
  std::vector<TraceRow> rows;
  TerminalReason terminal_reason = TerminalReason::IterationsExhausted;
};

/// Scores a recipe. Must be deterministic per recipe within one run.
/// Infrastructure failures are thrown, not returned.
using CostFn = std::function<ScoreOutcome(const Recipe&)>;

/// Decides whether one evaluation counts toward the early-exit stall counter.
/// Receives the evaluated recipe, its outcome, and the best recipe after the
/// evaluation (nullptr while nothing has succeeded). When unset, an
/// evaluation stalls iff it did not improve the best score.
using StallFn =
    std::function<bool(const Recipe& evaluated, const ScoreOutcome& outcome,
                       const Recipe* best)>;

struct SearchResult {
  std::optional<Recipe> best;
  std::optional<double> best_cost;
  SearchTrace trace;
  /// Distinct recipes whose evaluation failed.
  std::size_t failures = 0;
  /// Calls made to the cost callback.
  std::size_t evaluations = 0;
};

struct AnnealerConfig {
  CoolingSchedule cooling;
  std::size_t initial_sample_size = 20;
  std::uint64_t rng_seed = 123;
  /// Consecutive stalled proposals that end the search; 0 disables.
  std::size_t stall_limit = 10;

  std::size_t max_iterations() const noexcept { return cooling.max_iterations; }
};

/// Simulated annealing over recipes.
///
/// Random samples are scored first and may seed the best state. Iteration 0
/// then scores the canonical recipe as the starting state; every later
/// iteration proposes neighbor(current) at temperature_at(k). Failed
/// proposals are never accepted and never become best.
SearchResult run_annealing(const AnnealerConfig& cfg, const SpaceConfig& space,
                           const CostFn& cost, const StallFn& stall = {});

enum class CrossoverKind { SinglePoint, DoublePoint, Uniform };
enum class MutationKind { FlipOne, SwapTwo };

struct GaConfig {
  std::size_t population_size = 10;
  double mutation_rate = 0.05;
  double crossover_rate = 0.95;
  CrossoverKind crossover = CrossoverKind::SinglePoint;
  MutationKind mutation = MutationKind::FlipOne;
  std::size_t generations = 100;
  std::size_t elitism = 1;
  std::size_t tournament_size = 2;
  std::uint64_t rng_seed = 123;
  /// Consecutive stalled evaluations (checked per generation); 0 disables.
  std::size_t stall_limit = 10;

  void validate() const;
};

/// Gene used to pad genomes to max_length during crossover. Never appears in
/// a recipe.
inline constexpr char kPadGene = '.';

/// Single-point crossover with an explicit cut: the first `cut` genes of the
/// padded parents stay, the tails are exchanged.
std::pair<Recipe, Recipe> single_point_crossover(const Recipe& a,
                                                 const Recipe& b,
                                                 std::size_t cut,
                                                 const SpaceConfig& space);

std::pair<Recipe, Recipe> crossover(const Recipe& a, const Recipe& b,
                                    CrossoverKind kind,
                                    const SpaceConfig& space, Rng& rng);

/// Called after each generation is scored (generation 0 included).
using GenerationObserver =
    std::function<void(std::size_t generation, std::span<const Recipe>)>;

/// Generational GA with elitism and tournament selection. Generation 0 is the
/// canonical recipe plus random recipes; each later generation keeps the
/// top `elitism` members and fills the rest with (possibly crossed and
/// mutated) offspring of tournament winners. One trace row per generation.
SearchResult run_ga(const GaConfig& cfg, const SpaceConfig& space,
                    const CostFn& cost, const StallFn& stall = {},
                    const GenerationObserver& observer = {});

}  // namespace phaseopt
