// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "phaseopt/error.hpp"
#include "phaseopt/search.hpp"

namespace phaseopt {

void CoolingSchedule::validate() const {
  if (max_iterations < 1) throw ConfigError("max iterations must be at least 1");
  if (!std::isfinite(t_max) || !std::isfinite(t_floor)) {
    throw ConfigError("temperatures must be finite");
  }
  if (kind == CoolingKind::Geometric && t_floor <= 0) {
    throw ConfigError("geometric cooling needs a positive temperature floor");
  }
  if (t_floor < 0) throw ConfigError("temperature floor must be >= 0");
  if (t_max < t_floor) throw ConfigError("max temperature is below the floor");
}

double CoolingSchedule::ratio() const {
  return std::pow(t_floor / t_max, 1.0 / static_cast<double>(max_iterations));
}

double CoolingSchedule::temperature_at(std::size_t k) const {
  if (k >= max_iterations) {
    throw std::out_of_range("iteration " + std::to_string(k) +
                            " outside cooling schedule of " +
                            std::to_string(max_iterations));
  }
  const double kd = static_cast<double>(k);
  if (kind == CoolingKind::Geometric) return t_max * std::pow(ratio(), kd);
  return t_max - kd * (t_max - t_floor) / static_cast<double>(max_iterations);
}

double acceptance_probability(double next_cost, double present_cost,
                              double temperature) {
  if (!std::isfinite(next_cost) || !std::isfinite(present_cost) ||
      !std::isfinite(temperature)) {
    throw std::domain_error("acceptance probability needs finite inputs");
  }
  if (temperature <= 0) {
    throw std::domain_error("acceptance probability needs temperature > 0");
  }
  if (next_cost > present_cost) return 1.0;
  return std::exp((next_cost - present_cost) / temperature);
}

bool accept_step(double prob, Rng& rng) { return rng.bernoulli(prob); }

std::string_view to_string(TerminalReason r) {
  switch (r) {
    case TerminalReason::IterationsExhausted: return "iterations-exhausted";
    case TerminalReason::EarlyExitStall: return "early-exit-stall";
    case TerminalReason::EnumerationComplete: return "enumeration-complete";
  }
  return "unknown";
}

namespace {

std::uint64_t space_size_or_max(const SpaceConfig& space) {
  try {
    return space_size(space);
  } catch (const std::overflow_error&) {
    return std::numeric_limits<std::uint64_t>::max();
  }
}

}  // namespace

SearchResult run_annealing(const AnnealerConfig& cfg, const SpaceConfig& space,
                           const CostFn& cost, const StallFn& stall) {
  cfg.cooling.validate();
  space.validate();

  Rng rng(cfg.rng_seed);
  SearchResult result;
  result.trace.engine = EngineKind::Annealing;

  const std::uint64_t total = space_size_or_max(space);
  std::unordered_set<Recipe> seen;
  std::unordered_set<Recipe> failed;

  // Scores `r`, folds it into best, and reports whether best improved.
  auto evaluate = [&](const Recipe& r, ScoreOutcome& out) {
    out = cost(r);
    ++result.evaluations;
    seen.insert(r);
    if (!out.ok()) {
      failed.insert(r);
      return false;
    }
    if (!result.best_cost || out.value() > *result.best_cost) {
      result.best = r;
      result.best_cost = out.value();
      return true;
    }
    return false;
  };

  ScoreOutcome outcome = ScoreOutcome::failed("unscored");
  for (std::size_t i = 0; i < cfg.initial_sample_size; ++i) {
    evaluate(random_recipe(space, rng), outcome);
  }

  Recipe current = canonical_recipe(space);
  std::optional<double> current_cost;
  std::size_t stalled = 0;
  const double t_max = cfg.cooling.t_max;

  for (std::size_t k = 0; k < cfg.max_iterations(); ++k) {
    const double temperature = cfg.cooling.temperature_at(k);
    Recipe next = k == 0 ? current : neighbor(current, space, temperature, t_max, rng);

    const bool improved = evaluate(next, outcome);
    std::optional<double> next_cost;
    if (outcome.ok()) next_cost = outcome.value();

    TraceRow row;
    row.iteration = k;
    row.current = current;
    row.next = next;
    row.temperature = temperature;

    if (k == 0) {
      // The starting state is scored by its own proposal.
      current_cost = next_cost;
      row.current_cost = next_cost;
    } else {
      row.current_cost = current_cost;
      if (next_cost) {
        bool accept = true;
        if (current_cost && temperature > 0) {
          accept = accept_step(
              acceptance_probability(*next_cost, *current_cost, temperature), rng);
        } else if (current_cost) {
          accept = *next_cost > *current_cost;
        }
        if (accept) {
          current = next;
          current_cost = next_cost;
        }
      }
    }
    row.next_cost = next_cost;
    if (result.best) row.best = *result.best;
    row.best_cost = result.best_cost;
    result.trace.rows.push_back(std::move(row));

    const bool is_stall =
        stall ? stall(next, outcome, result.best ? &*result.best : nullptr)
              : !improved;
    stalled = is_stall ? stalled + 1 : 0;

    if (seen.size() >= total) {
      result.trace.terminal_reason = TerminalReason::EnumerationComplete;
      break;
    }
    if (cfg.stall_limit > 0 && stalled >= cfg.stall_limit) {
      result.trace.terminal_reason = TerminalReason::EarlyExitStall;
      break;
    }
  }

  result.failures = failed.size();
  return result;
}

}  // namespace phaseopt
