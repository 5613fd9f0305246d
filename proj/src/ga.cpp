// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "phaseopt/error.hpp"
#include "phaseopt/search.hpp"

namespace phaseopt {

void GaConfig::validate() const {
  if (population_size < 1) throw ConfigError("population size must be >= 1");
  if (!(mutation_rate >= 0 && mutation_rate <= 1)) {
    throw ConfigError("mutation rate must be in [0, 1]");
  }
  if (!(crossover_rate >= 0 && crossover_rate <= 1)) {
    throw ConfigError("crossover rate must be in [0, 1]");
  }
  if (elitism >= population_size) {
    throw ConfigError("elitism must be smaller than the population size");
  }
  if (tournament_size < 1) throw ConfigError("tournament size must be >= 1");
}

namespace {

std::string padded(const Recipe& r, std::size_t len) {
  std::string g = r.genes();
  if (g.size() < len) g.append(len - g.size(), kPadGene);
  return g;
}

Recipe stripped(std::string genes) {
  std::erase(genes, kPadGene);
  return Recipe(std::move(genes));
}

std::size_t genome_length(const Recipe& a, const Recipe& b,
                          const SpaceConfig& space) {
  return std::max({space.max_length, a.size(), b.size()});
}

}  // namespace

std::pair<Recipe, Recipe> single_point_crossover(const Recipe& a,
                                                 const Recipe& b,
                                                 std::size_t cut,
                                                 const SpaceConfig& space) {
  const std::size_t len = genome_length(a, b, space);
  std::string x = padded(a, len);
  std::string y = padded(b, len);
  cut = std::min(cut, len);
  std::swap_ranges(x.begin() + static_cast<std::ptrdiff_t>(cut), x.end(),
                   y.begin() + static_cast<std::ptrdiff_t>(cut));
  return {stripped(std::move(x)), stripped(std::move(y))};
}

std::pair<Recipe, Recipe> crossover(const Recipe& a, const Recipe& b,
                                    CrossoverKind kind,
                                    const SpaceConfig& space, Rng& rng) {
  const std::size_t len = genome_length(a, b, space);
  if (len < 2) return {a, b};

  std::string x = padded(a, len);
  std::string y = padded(b, len);
  switch (kind) {
    case CrossoverKind::SinglePoint: {
      const std::size_t cut = 1 + rng.index(len - 1);
      std::swap_ranges(x.begin() + static_cast<std::ptrdiff_t>(cut), x.end(),
                       y.begin() + static_cast<std::ptrdiff_t>(cut));
      break;
    }
    case CrossoverKind::DoublePoint: {
      std::size_t lo = rng.index(len + 1);
      std::size_t hi = rng.index(len + 1);
      if (lo > hi) std::swap(lo, hi);
      std::swap_ranges(x.begin() + static_cast<std::ptrdiff_t>(lo),
                       x.begin() + static_cast<std::ptrdiff_t>(hi),
                       y.begin() + static_cast<std::ptrdiff_t>(lo));
      break;
    }
    case CrossoverKind::Uniform:
      for (std::size_t i = 0; i < len; ++i) {
        if (rng.bernoulli(0.5)) std::swap(x[i], y[i]);
      }
      break;
  }
  return {stripped(std::move(x)), stripped(std::move(y))};
}

SearchResult run_ga(const GaConfig& cfg, const SpaceConfig& space,
                    const CostFn& cost, const StallFn& stall,
                    const GenerationObserver& observer) {
  cfg.validate();
  space.validate();

  constexpr double kFailedFitness = -std::numeric_limits<double>::infinity();

  Rng rng(cfg.rng_seed);
  SearchResult result;
  result.trace.engine = EngineKind::Genetic;

  std::uint64_t total = std::numeric_limits<std::uint64_t>::max();
  try {
    total = space_size(space);
  } catch (const std::overflow_error&) {
  }

  std::unordered_map<Recipe, double> fitness_of;
  std::unordered_set<Recipe> failed;
  std::size_t stalled = 0;

  auto fitness = [&](const Recipe& r) {
    if (auto it = fitness_of.find(r); it != fitness_of.end()) return it->second;
    const ScoreOutcome out = cost(r);
    ++result.evaluations;
    bool improved = false;
    double f = kFailedFitness;
    if (out.ok()) {
      f = out.value();
      if (!result.best_cost || f > *result.best_cost) {
        result.best = r;
        result.best_cost = f;
        improved = true;
      }
    } else {
      failed.insert(r);
    }
    fitness_of.emplace(r, f);
    const bool is_stall =
        stall ? stall(r, out, result.best ? &*result.best : nullptr) : !improved;
    stalled = is_stall ? stalled + 1 : 0;
    return f;
  };

  // Fittest member; ties go to the earliest.
  auto fittest = [&](const std::vector<Recipe>& pop) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pop.size(); ++i) {
      if (fitness(pop[i]) > fitness(pop[best])) best = i;
    }
    return pop[best];
  };

  auto tournament = [&](const std::vector<Recipe>& pop) -> const Recipe& {
    std::size_t winner = rng.index(pop.size());
    for (std::size_t t = 1; t < cfg.tournament_size; ++t) {
      const std::size_t c = rng.index(pop.size());
      if (fitness(pop[c]) > fitness(pop[winner])) winner = c;
    }
    return pop[winner];
  };

  auto mutate = [&](const Recipe& r) {
    return cfg.mutation == MutationKind::FlipOne ? mutate_flip_one(r, space, rng)
                                                 : mutate_swap_two(r, rng);
  };

  std::vector<Recipe> population;
  population.reserve(cfg.population_size);
  population.push_back(canonical_recipe(space));
  while (population.size() < cfg.population_size) {
    population.push_back(random_recipe(space, rng));
  }
  for (const auto& r : population) fitness(r);
  if (observer) observer(0, population);

  auto finished = [&] {
    if (fitness_of.size() >= total) {
      result.trace.terminal_reason = TerminalReason::EnumerationComplete;
      return true;
    }
    if (cfg.stall_limit > 0 && stalled >= cfg.stall_limit) {
      result.trace.terminal_reason = TerminalReason::EarlyExitStall;
      return true;
    }
    return false;
  };

  auto optional_fitness = [&](const Recipe& r) -> std::optional<double> {
    const double f = fitness(r);
    if (f == kFailedFitness) return std::nullopt;
    return f;
  };

  for (std::size_t g = 0; g < cfg.generations && !finished(); ++g) {
    std::vector<std::size_t> order(population.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return fitness(population[a]) > fitness(population[b]);
    });

    std::vector<Recipe> next;
    next.reserve(cfg.population_size);
    for (std::size_t e = 0; e < cfg.elitism; ++e) next.push_back(population[order[e]]);

    while (next.size() < cfg.population_size) {
      const Recipe& p1 = tournament(population);
      const Recipe& p2 = tournament(population);
      auto [c1, c2] = rng.bernoulli(cfg.crossover_rate)
                          ? crossover(p1, p2, cfg.crossover, space, rng)
                          : std::pair<Recipe, Recipe>{p1, p2};
      if (rng.bernoulli(cfg.mutation_rate)) c1 = mutate(c1);
      if (rng.bernoulli(cfg.mutation_rate)) c2 = mutate(c2);
      next.push_back(std::move(c1));
      if (next.size() < cfg.population_size) next.push_back(std::move(c2));
    }
    for (const auto& r : next) fitness(r);
    if (observer) observer(g + 1, next);

    TraceRow row;
    row.iteration = g;
    row.current = fittest(population);
    row.current_cost = optional_fitness(row.current);
    row.next = fittest(next);
    row.next_cost = optional_fitness(row.next);
    if (result.best) row.best = *result.best;
    row.best_cost = result.best_cost;
    row.temperature = 0.0;
    result.trace.rows.push_back(std::move(row));

    population = std::move(next);
  }

  result.failures = failed.size();
  return result;
}

}  // namespace phaseopt
