// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "phaseopt/error.hpp"
#include "phaseopt/search.hpp"

using namespace phaseopt;

namespace {

// Deterministic random score per recipe.
std::map<Recipe, double> cost_table(const SpaceConfig& space, std::uint64_t seed) {
  Rng rng(seed);
  std::map<Recipe, double> t;
  for (const auto& r : enumerate_space(space)) t[r] = rng.uniform01();
  return t;
}

CostFn table_cost(const std::map<Recipe, double>& t) {
  return [&t](const Recipe& r) { return ScoreOutcome::success(t.at(r)); };
}

}  // namespace

TEST(Cooling, GeometricEndpointsAndRatio) {
  CoolingSchedule s;
  s.max_iterations = 20;
  EXPECT_DOUBLE_EQ(s.temperature_at(0), 100.0);
  EXPECT_NEAR(s.ratio(), std::exp(std::log(0.01) / 20), 1e-15);
  for (std::size_t k = 0; k < 20; ++k) {
    EXPECT_NEAR(s.temperature_at(k), 100.0 * std::exp(std::log(0.01) * k / 20.0), 1e-9) << k;
  }
  EXPECT_THROW(s.temperature_at(20), std::out_of_range);
}

TEST(Cooling, LinearIsArithmetic) {
  CoolingSchedule s;
  s.kind = CoolingKind::Linear;
  s.max_iterations = 10;
  s.t_floor = 0;
  for (std::size_t k = 0; k < 10; ++k) EXPECT_NEAR(s.temperature_at(k), 100.0 - 10.0 * k, 1e-12);
}

TEST(Cooling, ValidationRejectsBadSchedules) {
  CoolingSchedule s;
  s.t_floor = 0;
  EXPECT_THROW(s.validate(), ConfigError);
  s.t_floor = 200;
  EXPECT_THROW(s.validate(), ConfigError);
  s.t_floor = 1;
  s.max_iterations = 0;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Acceptance, ImprovementIsCertain) {
  EXPECT_EQ(acceptance_probability(1.1, 1.0, 0.5), 1.0);
  EXPECT_EQ(acceptance_probability(1.0, 1.0, 10), 1.0);
  EXPECT_NEAR(acceptance_probability(0.8, 1.0, 0.1), std::exp(-2.0), 1e-15);
}

TEST(Acceptance, RejectsInvalidInputs) {
  EXPECT_THROW(acceptance_probability(1, 1, 0), std::domain_error);
  EXPECT_THROW(acceptance_probability(NAN, 1, 1), std::domain_error);
  EXPECT_THROW(acceptance_probability(1, 1, INFINITY), std::domain_error);
}

TEST(Acceptance, AcceptStepDrawsOnce) {
  Rng a(9), b(9);
  accept_step(0.5, a);
  b.next();
  EXPECT_EQ(a.next(), b.next());
}

TEST(Annealing, TraceShapeAndTemperatures) {
  AnnealerConfig cfg;
  cfg.cooling.max_iterations = 20;
  cfg.stall_limit = 0;
  const auto space = SpaceConfig::letters(5, 5);
  const auto t = cost_table(SpaceConfig::letters(5, 5), 1);
  const auto res = run_annealing(cfg, space, table_cost(t));
  ASSERT_EQ(res.trace.rows.size(), 20u);
  EXPECT_EQ(res.trace.rows[0].current.genes(), "ABCDE");
  EXPECT_EQ(res.trace.rows[0].next.genes(), "ABCDE");
  for (std::size_t k = 0; k < 20; ++k) {
    EXPECT_DOUBLE_EQ(res.trace.rows[k].temperature, cfg.cooling.temperature_at(k));
  }
  EXPECT_EQ(res.evaluations, 20u + 20u);
  EXPECT_EQ(res.trace.terminal_reason, TerminalReason::IterationsExhausted);
}

TEST(Annealing, BestIsMaxOfEverythingScored) {
  AnnealerConfig cfg;
  cfg.cooling.max_iterations = 60;
  cfg.stall_limit = 0;
  const auto space = SpaceConfig::letters(5, 4);
  const auto t = cost_table(space, 4);
  std::set<Recipe> seen;
  const CostFn cost = [&](const Recipe& r) {
    seen.insert(r);
    return ScoreOutcome::success(t.at(r));
  };
  const auto res = run_annealing(cfg, space, cost);
  double best = -1;
  for (const auto& r : seen) best = std::max(best, t.at(r));
  ASSERT_TRUE(res.best_cost);
  EXPECT_EQ(*res.best_cost, best);
}

TEST(Annealing, SameSeedSameTrace) {
  AnnealerConfig cfg;
  cfg.cooling.max_iterations = 50;
  const auto space = SpaceConfig::letters(5, 5);
  const auto t = cost_table(space, 2);
  const auto a = run_annealing(cfg, space, table_cost(t));
  const auto b = run_annealing(cfg, space, table_cost(t));
  ASSERT_EQ(a.trace.rows.size(), b.trace.rows.size());
  for (std::size_t i = 0; i < a.trace.rows.size(); ++i) {
    EXPECT_EQ(a.trace.rows[i].next, b.trace.rows[i].next);
    EXPECT_EQ(a.trace.rows[i].current_cost, b.trace.rows[i].current_cost);
  }
}

TEST(Annealing, FailedRecipesNeverBecomeCurrentOrBest) {
  AnnealerConfig cfg;
  cfg.cooling.max_iterations = 200;
  cfg.stall_limit = 0;
  const auto space = SpaceConfig::letters(5, 3);
  const auto t = cost_table(space, 8);
  std::set<Recipe> failed;
  const CostFn cost = [&](const Recipe& r) {
    if (std::hash<Recipe>{}(r) % 2) {
      failed.insert(r);
      return ScoreOutcome::failed("odd");
    }
    return ScoreOutcome::success(t.at(r));
  };
  const auto res = run_annealing(cfg, space, cost);
  EXPECT_EQ(res.failures, failed.size());
  ASSERT_TRUE(res.best);
  EXPECT_FALSE(failed.count(*res.best));
  for (std::size_t i = 1; i < res.trace.rows.size(); ++i) {
    const auto& row = res.trace.rows[i];
    if (row.current_cost) {
      EXPECT_FALSE(failed.count(row.current)) << i;
    }
  }
}

TEST(Annealing, StallCounterEndsSearch) {
  AnnealerConfig cfg;
  cfg.cooling.max_iterations = 100;
  cfg.initial_sample_size = 5;
  cfg.stall_limit = 4;
  const auto res = run_annealing(cfg, SpaceConfig::letters(5, 5),
                                 [](const Recipe&) { return ScoreOutcome::success(1.0); });
  EXPECT_EQ(res.trace.terminal_reason, TerminalReason::EarlyExitStall);
  EXPECT_EQ(res.trace.rows.size(), 4u);
}

TEST(Annealing, TinySpaceEndsWithEnumeration) {
  AnnealerConfig cfg;
  cfg.cooling.max_iterations = 500;
  cfg.stall_limit = 0;
  const auto space = SpaceConfig::letters(1, 2);
  const auto res =
      run_annealing(cfg, space, [](const Recipe& r) { return ScoreOutcome::success(r.size()); });
  EXPECT_EQ(res.trace.terminal_reason, TerminalReason::EnumerationComplete);
  EXPECT_EQ(res.best->genes(), "AA");
}

TEST(Crossover, SinglePointExplicitCut) {
  const auto space = SpaceConfig::letters(5, 5);
  auto [x, y] = single_point_crossover(Recipe("ABC"), Recipe("DE"), 2, space);
  EXPECT_EQ(x.genes(), "AB");
  EXPECT_EQ(y.genes(), "DEC");
  auto [p, q] = single_point_crossover(Recipe("ABCDE"), Recipe("EDCBA"), 0, space);
  EXPECT_EQ(p.genes(), "EDCBA");
  EXPECT_EQ(q.genes(), "ABCDE");
}

TEST(Crossover, PreservesGeneMultiset) {
  const auto space = SpaceConfig::letters(5, 5);
  Rng rng(3);
  for (auto kind : {CrossoverKind::SinglePoint, CrossoverKind::DoublePoint, CrossoverKind::Uniform}) {
    for (int i = 0; i < 200; ++i) {
      const Recipe a = random_recipe(space, rng), b = random_recipe(space, rng);
      auto [x, y] = crossover(a, b, kind, space, rng);
      std::string before = a.genes() + b.genes(), after = x.genes() + y.genes();
      std::sort(before.begin(), before.end());
      std::sort(after.begin(), after.end());
      EXPECT_EQ(before, after);
      EXPECT_LE(x.size(), 5u);
      EXPECT_LE(y.size(), 5u);
    }
  }
}

TEST(Genetic, ElitismKeepsBest) {
  GaConfig cfg;
  cfg.generations = 30;
  cfg.stall_limit = 0;
  const auto space = SpaceConfig::letters(5, 4);
  const auto t = cost_table(space, 12);
  double prev = -1;
  const auto res = run_ga(cfg, space, table_cost(t), {},
                          [&](std::size_t, std::span<const Recipe> pop) {
                            double best = -1;
                            for (const auto& r : pop) best = std::max(best, t.at(r));
                            EXPECT_GE(best, prev);
                            prev = best;
                          });
  EXPECT_EQ(res.trace.engine, EngineKind::Genetic);
  EXPECT_EQ(res.trace.rows.size(), 30u);
  EXPECT_EQ(*res.best_cost, prev);
}

TEST(Genetic, FirstGenerationStartsFromCanonical) {
  GaConfig cfg;
  cfg.generations = 1;
  std::vector<Recipe> first;
  run_ga(cfg, SpaceConfig::letters(5, 5), [](const Recipe&) { return ScoreOutcome::success(1); }, {},
         [&](std::size_t g, std::span<const Recipe> pop) {
           if (g == 0) first.assign(pop.begin(), pop.end());
         });
  ASSERT_EQ(first.size(), 10u);
  EXPECT_EQ(first[0].genes(), "ABCDE");
}

TEST(Genetic, SameSeedSameResult) {
  GaConfig cfg;
  cfg.generations = 25;
  const auto space = SpaceConfig::letters(5, 5);
  const auto t = cost_table(space, 6);
  const auto a = run_ga(cfg, space, table_cost(t));
  const auto b = run_ga(cfg, space, table_cost(t));
  EXPECT_EQ(a.best, b.best);
  EXPECT_EQ(a.evaluations, b.evaluations);
  ASSERT_EQ(a.trace.rows.size(), b.trace.rows.size());
  for (std::size_t i = 0; i < a.trace.rows.size(); ++i) {
    EXPECT_EQ(a.trace.rows[i].next, b.trace.rows[i].next);
  }
}

TEST(Genetic, ValidatesRates) {
  GaConfig cfg;
  cfg.mutation_rate = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.elitism = cfg.population_size;
  EXPECT_THROW(cfg.validate(), ConfigError);
}
