// SPDX-License-Identifier: Apache-2.0
// Acceptance checks: one PASS/FAIL/SKIP line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "phaseopt/driver.hpp"
#include "phaseopt/error.hpp"

using namespace phaseopt;

namespace {

// Tolerances and limits.
constexpr double kTemperatureTolerance = 0.001;
constexpr double kAcceptanceTolerance = 0.01;
constexpr std::size_t kAcceptanceTrials = 100000;
constexpr std::size_t kOracleSeeds = 100;
constexpr std::size_t kOracleRequired = 95;
constexpr std::size_t kRandomFixtures = 50;

const fs::path kFixtures = fs::path(PHASEOPT_TEST_DIR) / "fixtures";
const fs::path kGolden = fs::path(PHASEOPT_TEST_DIR) / "golden";

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

Outcome pass(std::string d) { return {Verdict::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Verdict::Fail, std::move(d)}; }

Outcome check(bool ok, std::string d) { return {ok ? Verdict::Pass : Verdict::Fail, std::move(d)}; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "phaseopt-acceptance" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

SubsequenceLibrary portable() {
  return SubsequenceLibrary::load(fs::path(PHASEOPT_DATA_DIR) / "subsequences_portable.tsv");
}

ApplyConfig stub(const std::string& mode) {
  ApplyConfig a;
  a.optimizer = CommandTemplate({PHASEOPT_STUB_OPT, mode, "{input}", "{output}", "{pipeline}"});
  a.timeout = std::chrono::seconds(20);
  return a;
}

// Stub optimizer that first appends the pipeline it was given to `log`.
ApplyConfig recording_stub(const std::string& mode, const fs::path& log) {
  ApplyConfig a;
  a.optimizer = CommandTemplate({"sh", "-c", "printf '%s\\n' \"$3\" >> \"$0\"; exec \"$4\" \"$5\" \"$1\" \"$2\" \"$3\"",
                                 log.string(), "{input}", "{output}", "{pipeline}", PHASEOPT_STUB_OPT, mode});
  a.timeout = std::chrono::seconds(20);
  return a;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Distinct deterministic score per artifact name, so recipes compete even when outputs are identical.
class NameHashCost : public CostModel {
 public:
  CostType type() const noexcept override { return CostType::FileSize; }
  ScoreOutcome score(const ScoringContext& ctx) const override {
    return ScoreOutcome::success(0.5 + double(fnv1a(ctx.candidate.filename().string()) % 1000) / 1000.0);
  }
};

std::map<Recipe, double> random_table(const SpaceConfig& space, std::uint64_t seed) {
  Rng rng(seed * 0x9E3779B97F4A7C15ull + 1);
  std::map<Recipe, double> t;
  for (const auto& r : enumerate_space(space)) t[r] = 0.5 + rng.uniform01();
  return t;
}

std::optional<Recipe> unique_argmax(const std::map<Recipe, double>& t) {
  std::optional<Recipe> best;
  double v = -1;
  std::size_t ties = 0;
  for (const auto& [r, c] : t) {
    if (c > v) {
      best = r;
      v = c;
      ties = 1;
    } else if (c == v) {
      ++ties;
    }
  }
  if (ties != 1) return std::nullopt;
  return best;
}

// 1 ---------------------------------------------------------------------------

Outcome space_sizes() {
  const std::uint64_t s3 = space_size(5, 3), s4 = space_size(5, 4), s5 = space_size(5, 5),
                      s6 = space_size(5, 6), s7 = space_size(5, 7);
  // Reference sizes: 156, 781, "4k", "19k", "97k"; 3096 also appears in print for m = 5, a digit swap of 3906.
  const bool ok = s3 == 156 && s4 == 781 && s5 == 3906 && std::llround(s5 / 1000.0) == 4 &&
                  s6 / 1000 == 19 && s7 / 1000 == 97;
  char buf[160];
  std::snprintf(buf, sizeof buf, "m=3..7 -> %llu %llu %llu %llu %llu", (unsigned long long)s3,
                (unsigned long long)s4, (unsigned long long)s5, (unsigned long long)s6,
                (unsigned long long)s7);
  return check(ok, buf);
}

// 2 ---------------------------------------------------------------------------

Outcome cooling_trace() {
  CoolingSchedule s;
  s.t_max = 100;
  s.t_floor = 1;
  s.max_iterations = 20;
  const std::vector<std::pair<std::size_t, double>> printed = {
      {0, 100.000}, {1, 79.432}, {2, 63.095}, {8, 15.848}, {9, 12.589},
      {10, 10.000}, {11, 7.943}, {12, 6.309}, {18, 1.584}, {19, 1.258}};
  double worst = 0;
  for (const auto& [k, want] : printed) {
    worst = std::max(worst, std::fabs(std::stod(format_temperature(s.temperature_at(k))) - want));
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "10 reference temperatures, max deviation %.4f", worst);
  return check(worst <= kTemperatureTolerance + 1e-12, buf);
}

// 3 ---------------------------------------------------------------------------

Outcome acceptance_rule() {
  Rng rng(20240);
  for (double t : {1.0, 10.0, 100.0}) {
    for (double gain : {0.0, 0.01, 0.5}) {
      if (acceptance_probability(1.0 + gain, 1.0, t) != 1.0) return fail("improvement not certain");
    }
  }
  double worst = 0;
  for (double delta : {-0.01, -0.05, -0.2}) {
    for (double t : {1.0, 10.0, 100.0}) {
      const double p = acceptance_probability(1.0 + delta, 1.0, t);
      std::size_t accepted = 0;
      for (std::size_t i = 0; i < kAcceptanceTrials; ++i) accepted += accept_step(p, rng);
      const double rate = double(accepted) / kAcceptanceTrials;
      worst = std::max(worst, std::fabs(rate - std::exp(delta / t)));
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "9 (delta, T) pairs, max |rate - exp(delta/T)| = %.4f", worst);
  return check(worst <= kAcceptanceTolerance, buf);
}

// 4 ---------------------------------------------------------------------------

Outcome oracle_equivalence() {
  const auto space = SpaceConfig::letters(5, 3);
  std::size_t sa_hits = 0, ga_hits = 0, seeds = 0;
  for (std::uint64_t seed = 1; seeds < kOracleSeeds; ++seed) {
    const auto table = random_table(space, seed);
    const auto argmax = unique_argmax(table);
    if (!argmax || table.size() != 156) continue;
    ++seeds;
    const CostFn cost = [&](const Recipe& r) { return ScoreOutcome::success(table.at(r)); };

    AnnealerConfig sa;
    sa.cooling.max_iterations = 500;
    sa.rng_seed = seed;
    sa.stall_limit = 0;
    const auto a = run_annealing(sa, space, cost);
    sa_hits += a.best && *a.best == *argmax;

    GaConfig ga;
    ga.generations = 40;
    ga.rng_seed = seed;
    ga.stall_limit = 0;
    const auto g = run_ga(ga, space, cost);
    ga_hits += g.best && *g.best == *argmax;
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "annealing %zu/%zu, genetic %zu/%zu seeds hit the argmax (need %zu)", sa_hits,
                seeds, ga_hits, seeds, kOracleRequired);
  return check(sa_hits >= kOracleRequired && ga_hits >= kOracleRequired, buf);
}

// 5 ---------------------------------------------------------------------------

Outcome rejection_semantics() {
  const auto root = scratch("rejection");
  const auto log = root / "proposed.txt";
  const auto lib = portable();
  const auto apply = recording_stub("fail-half", log);
  const auto schema = FeatureSchema::default_schema();
  const auto cost = std::make_unique<NameHashCost>();
  EvalContext ctx{&lib, &apply, cost.get(), &schema, false};
  SearchConfig sc;
  sc.anneal.cooling.max_iterations = 60;
  sc.anneal.stall_limit = 0;

  const auto p = partition_inputs({kFixtures / "loop-wrap.ll"}, root / "work").at(0);
  const auto r = optimize_partition(p, sc, ctx);
  if (r.error) return fail("driver error: " + *r.error);

  std::set<std::string> proposed, failed;
  for (const auto& l : lines_of(slurp(log))) {
    proposed.insert(l);
    if (fnv1a(l) & 1) failed.insert(l);
  }
  bool best_ok = r.best && !r.best->empty() && !(fnv1a(expand_recipe(*r.best, lib)) & 1);
  for (const auto& row : r.trace.rows) {
    if (row.best_cost && !row.best.empty() && (fnv1a(expand_recipe(row.best, lib)) & 1)) best_ok = false;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu distinct spawned, %zu failed by hash, reported failures %zu, best %s",
                proposed.size(), failed.size(), r.failures, r.best ? r.best->genes().c_str() : "(none)");
  return check(best_ok && !failed.empty() && r.failures == failed.size(), buf);
}

// 6 ---------------------------------------------------------------------------

Outcome early_exit() {
  const auto root = scratch("early-exit");
  const auto lib = portable();
  const auto apply = stub("copy");
  CostConfig cc;
  cc.type = CostType::InstCount;
  const auto schema = FeatureSchema::default_schema();
  const auto cost = make_cost_model(cc, schema);
  EvalContext ctx{&lib, &apply, cost.get(), &schema, false};
  SearchConfig sc;
  const auto p = partition_inputs({kFixtures / "loop-wrap.ll"}, root).at(0);
  const auto r = optimize_partition(p, sc, ctx);
  if (r.error) return fail("driver error: " + *r.error);
  const std::size_t bound = sc.anneal.stall_limit + sc.anneal.initial_sample_size + 1;
  char buf[128];
  std::snprintf(buf, sizeof buf, "terminal %s after %zu evaluations (bound %zu)",
                std::string(to_string(r.terminal_reason)).c_str(), r.evaluations, bound);
  return check(r.terminal_reason == TerminalReason::EarlyExitStall && r.evaluations <= bound, buf);
}

// 7 ---------------------------------------------------------------------------

Outcome cache_contract() {
  const auto root = scratch("cache");
  const auto log = root / "spawned.txt";
  const auto lib = portable();
  const auto apply = recording_stub("tag", log);
  CostConfig cc;
  cc.type = CostType::FileSize;
  const auto schema = FeatureSchema::default_schema();
  const auto cost = make_cost_model(cc, schema);
  EvalContext ctx{&lib, &apply, cost.get(), &schema, false};
  const auto space = SpaceConfig::of(lib, 5);

  Rng rng(77);
  std::vector<Recipe> script;
  while (script.size() < 70) script.push_back(random_recipe(space, rng));
  for (int i = 0; i < 30; ++i) script.push_back(script[rng.index(70)]);
  for (std::size_t i = script.size(); i > 1; --i) std::swap(script[i - 1], script[rng.index(i)]);

  std::set<Recipe> distinct_nonempty;
  for (const auto& r : script) {
    if (!r.empty()) distinct_nonempty.insert(r);
  }
  const auto p = partition_inputs({kFixtures / "loop-wrap.ll"}, root / "work").at(0);
  EvalCache cache(p.id);
  HistoryBuffer history;
  const auto before = spawn_count();
  for (const auto& r : script) evaluate(p, r, ctx, cache, history);
  const auto spawned = spawn_count() - before;
  const auto logged = lines_of(slurp(log)).size();
  char buf[128];
  std::snprintf(buf, sizeof buf, "100 proposals, %zu distinct non-empty, %llu spawns, %zu logged",
                distinct_nonempty.size(), (unsigned long long)spawned, logged);
  return check(spawned == distinct_nonempty.size() && logged == spawned, buf);
}

// 8 ---------------------------------------------------------------------------

struct Counters {
  std::size_t functions = 0, globals = 0, instructions = 0, blocks = 0, loops = 0;
};

// Counts from raw lines: defines, globals, body lines that are not labels, labels plus entries, and
// branch lines carrying loop metadata or jumping to their own block.
Counters line_scan(const std::string& text) {
  static const std::regex global_re(R"(^@[\w.$]+ = .*\b(global|constant)\b)");
  static const std::regex label_re(R"(^([\w.$]+):)");
  static const std::regex target_re(R"(label %([\w.$]+))");
  Counters c;
  bool body = false, open_bracket = false;
  std::size_t fn_instructions = 0;
  std::string block;
  for (const auto& l : lines_of(text)) {
    if (l.rfind("define ", 0) == 0) {
      ++c.functions;
      ++c.blocks;
      body = true;
      fn_instructions = 0;
      block.clear();
      continue;
    }
    if (!body) {
      c.globals += std::regex_search(l, global_re);
      continue;
    }
    if (l == "}") {
      body = false;
      continue;
    }
    if (l.find_first_not_of(' ') == std::string::npos) continue;
    std::smatch m;
    if (std::regex_search(l, m, label_re)) {
      if (fn_instructions > 0) ++c.blocks;
      block = m[1];
      continue;
    }
    if (open_bracket) {
      open_bracket = l.find(']') == std::string::npos;
      continue;
    }
    ++c.instructions;
    ++fn_instructions;
    open_bracket = l.find('[') != std::string::npos && l.find(']') == std::string::npos;
    if (l.find("  br ") == 0) {
      bool loop = l.find("!llvm.loop") != std::string::npos;
      for (auto it = std::sregex_iterator(l.begin(), l.end(), target_re); it != std::sregex_iterator(); ++it) {
        loop |= !block.empty() && (*it)[1] == block;
      }
      c.loops += loop;
    }
  }
  return c;
}

// Random module: globals, then functions made of blocks chained by branches; some blocks loop on
// themselves.
std::string random_module(Rng& rng) {
  std::ostringstream ir;
  const std::size_t globals = rng.index(4);
  for (std::size_t g = 0; g < globals; ++g) ir << "@g" << g << " = global i32 " << rng.index(100) << "\n";
  const std::size_t functions = 1 + rng.index(4);
  for (std::size_t f = 0; f < functions; ++f) {
    ir << "\ndefine i32 @f" << f << "(i32 %n) {\nentry:\n";
    const std::size_t blocks = 1 + rng.index(5);
    for (std::size_t b = 0; b < blocks; ++b) {
      if (b > 0) ir << "b" << b << ":\n";
      const bool loops = b > 0 && rng.bernoulli(0.4);
      if (loops) ir << "  %i" << b << " = phi i32 [ 0, %" << (b == 1 ? "entry" : "b" + std::to_string(b - 1))
                    << " ], [ %i" << b << ".next, %b" << b << " ]\n";
      const std::size_t straight = rng.index(4);
      for (std::size_t k = 0; k < straight; ++k) ir << "  %v" << b << "." << k << " = add i32 %n, " << k << "\n";
      if (loops) {
        ir << "  %i" << b << ".next = add i32 %i" << b << ", 1\n";
        ir << "  %c" << b << " = icmp slt i32 %i" << b << ".next, %n\n";
      }
      const std::string next = b + 1 < blocks ? "b" + std::to_string(b + 1) : "";
      if (loops && !next.empty()) {
        ir << "  br i1 %c" << b << ", label %b" << b << ", label %" << next << "\n";
      } else if (loops) {
        ir << "  br i1 %c" << b << ", label %b" << b << ", label %out" << "\n";
      } else if (!next.empty()) {
        ir << "  br label %" << next << "\n";
      } else {
        ir << "  ret i32 %n\n";
      }
      if (loops && next.empty()) ir << "out:\n  ret i32 %n\n";
    }
    ir << "}\n";
  }
  return ir.str();
}

double column(const FeatureRow& row, const FeatureSchema& s, std::string_view name) {
  return row.values.values.at(*s.index_of(name));
}

Outcome dump_conformance() {
  const auto& s = FeatureSchema::default_schema();
  const std::string text = slurp(kFixtures / "loop-wrap.ll");
  const auto rows = collect_features(parse_ir(text, "loop-wrap.ll"), s);
  const std::string csv = dump_features_csv(rows, s);
  const auto ls = lines_of(csv);
  if (ls.size() != 3) return fail("expected header + 2 rows, got " + std::to_string(ls.size()) + " lines");

  const std::string reference_prefix =
      "Module|Function|Callee|Caller|Loop,average-store-instructions-per-function,"
      "average-load-instructions-per-function,average-instructions-per-function,global-variable-count,"
      "critical-edge-count,total-edge-count,loop-count,median-calls-per-function,";
  if (ls[0].rfind(reference_prefix, 0) != 0) return fail("header prefix differs");
  if (ls[1].rfind("loop-wrap.ll||||,", 0) != 0) return fail("module key differs: " + ls[1].substr(0, 40));
  if (ls[2].rfind("loop-wrap.ll|main|||for.cond,", 0) != 0) return fail("loop key differs: " + ls[2].substr(0, 40));
  for (const auto& l : ls) {
    if (std::count(l.begin(), l.end(), ',') != 141) return fail("row without 141 value columns");
  }
  // Reference rows for the same fixture.
  const auto golden = lines_of(slurp(kGolden / "loop-wrap.features.csv"));
  const std::regex ratio(R"(^-?\d+\.\d{6}$)");
  std::size_t differing = 0;
  for (std::size_t i = 1; i < 3; ++i) {
    std::vector<std::string> mine, reference;
    std::stringstream a(ls[i]), b(golden.at(i));
    for (std::string f; std::getline(a, f, ',');) mine.push_back(f);
    for (std::string f; std::getline(b, f, ',');) reference.push_back(f);
    for (std::size_t k = 1; k < mine.size(); ++k) {
      if (s.columns()[k - 1].kind == ValueKind::Ratio && mine[k] != "0" && !std::regex_match(mine[k], ratio)) {
        return fail("ratio not printed with 6 decimals: " + mine[k]);
      }
      // Block counts: the reference dump reports 64 where the fixture holds 8 blocks.
      const auto& name = s.columns()[k - 1].name;
      if (name == "average-bb-per-function" || name == "total-bb-count") continue;
      differing += mine[k] != reference.at(k);
    }
  }
  if (differing) return fail(std::to_string(differing) + " fields differ from the reference dump");

  Rng rng(4242);
  std::vector<std::pair<std::string, std::string>> fixtures = {{"counters.ll", slurp(kFixtures / "counters.ll")}};
  for (std::size_t i = 0; i < kRandomFixtures; ++i) fixtures.emplace_back("random" + std::to_string(i), random_module(rng));
  for (const auto& [name, ir] : fixtures) {
    const auto oracle = line_scan(ir);
    const auto mod = collect_features(parse_ir(ir, name), s).at(0);
    const bool ok = column(mod, s, "function-count") == oracle.functions &&
                    column(mod, s, "global-variable-count") == oracle.globals &&
                    column(mod, s, "total-instruction-count") == oracle.instructions &&
                    column(mod, s, "total-bb-count") == oracle.blocks &&
                    column(mod, s, "loop-count") == oracle.loops;
    if (!ok) {
      char buf[200];
      std::snprintf(buf, sizeof buf, "%s: counters f/g/i/bb/loops %g/%g/%g/%g/%g vs line scan %zu/%zu/%zu/%zu/%zu",
                    name.c_str(), column(mod, s, "function-count"), column(mod, s, "global-variable-count"),
                    column(mod, s, "total-instruction-count"), column(mod, s, "total-bb-count"),
                    column(mod, s, "loop-count"), oracle.functions, oracle.globals, oracle.instructions,
                    oracle.blocks, oracle.loops);
      return fail(buf);
    }
  }
  return pass("header, keys, 141 columns, 6-decimal ratios; counters match on " +
              std::to_string(fixtures.size()) + " fixtures (block-count columns excluded from reference diff)");
}

// 9 ---------------------------------------------------------------------------

Outcome trace_format() {
  // Reference trace rows.
  CoolingSchedule s;
  s.max_iterations = 20;
  SearchTrace reference;
  auto row = [&](std::size_t k, const char* cur, const char* next, const char* best, double cc, double nc,
                 double bc) {
    TraceRow r;
    r.iteration = k;
    r.current = Recipe(cur);
    r.next = Recipe(next);
    r.best = Recipe(best);
    r.current_cost = cc;
    r.next_cost = nc;
    r.best_cost = bc;
    r.temperature = s.temperature_at(k);
    reference.rows.push_back(r);
  };
  row(0, "ABCDE", "ABCDE", "ABCDE", 1.05, 1.05, 1.05);
  row(10, "ACDCD", "CD", "CBCCC", 1.01, 1.08, 1.06);
  row(11, "CD", "CDAEC", "CD", 1.08, 1.07, 1.08);
  row(19, "DBBBC", "DCCBA", "CD", 1.03, 1.06, 1.08);
  const std::vector<std::string> expected = {
      "Iteration  Current State       Next State     Best State    Current Cost    Next Cost        Best Cost     "
      "Temperature",
      "0           ABCDE               ABCDE          ABCDE         1.05            1.05            1.05          "
      "100.000",
      "10          ACDCD                  CD          CBCCC         1.01            1.08            1.06           "
      "10.000",
      "11             CD               CDAEC             CD         1.08            1.07            1.08            "
      "7.943",
      "19          DBBBC               DCCBA             CD         1.03            1.06            1.08            "
      "1.258"};
  const auto rendered = lines_of(render_trace(reference, "susan.c"));
  if (rendered.size() != 4 + expected.size()) return fail("unexpected line count");
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (rendered[4 + i] != expected[i]) return fail("row differs from reference: \"" + rendered[4 + i] + "\"");
  }

  // Seeded 20-iteration run against the checked-in golden file.
  const auto lib = portable();
  const auto space = SpaceConfig::of(lib, 5);
  Rng rng(2024);
  std::map<Recipe, double> table;
  for (const auto& r : enumerate_space(space)) table[r] = 0.9 + 0.2 * rng.uniform01();
  AnnealerConfig cfg;
  cfg.cooling.max_iterations = 20;
  cfg.stall_limit = 0;
  const auto res =
      run_annealing(cfg, space, [&](const Recipe& r) { return ScoreOutcome::success(table.at(r)); });
  TraceFooter f;
  f.explored = 20;
  f.module_path = "loop-wrap.ll";
  f.final_recipe = res.best;
  f.final_pipeline = expand_recipe(*res.best, lib);
  const auto text = render_trace(res.trace, "loop-wrap.c", &f);
  if (text != slurp(kGolden / "trace_anneal_20.txt")) return fail("seeded trace differs from golden file");
  const bool footer = text.find("\nExplored Recipes Size: 20\n") != std::string::npos &&
                      text.find("The final recipe accepted is \"" + res.best->genes() + "\":") != std::string::npos;
  return check(footer, "4 reference rows byte-identical; seeded 20-iteration trace matches golden file");
}

// 10 --------------------------------------------------------------------------

Outcome determinism() {
  const std::vector<fs::path> inputs = {kFixtures / "loop-wrap.ll", kFixtures / "counters.ll",
                                        kFixtures / "loop-wrap.ll"};
  auto run = [&](const std::string& name, std::size_t workers, EngineChoice engine) {
    DriverConfig cfg;
    cfg.library = portable();
    cfg.apply = stub("tag");
    CostConfig cc;
    cc.type = CostType::FileSize;
    cfg.cost = make_cost_model(cc, cfg.schema);
    cfg.search.engine = engine;
    cfg.search.anneal.cooling.max_iterations = 30;
    cfg.search.ga.generations = 10;
    cfg.workers = workers;
    cfg.scratch_root = scratch(name);
    const auto report = run_driver(inputs, cfg);
    std::string out;
    for (const auto& r : report.results) {
      out += summary_json(r) + "\n" + render_trace(r.trace, r.id) + slurp(*r.output);
    }
    return out;
  };
  for (auto engine : {EngineChoice::Anneal, EngineChoice::Genetic}) {
    const auto a = run("det-a", 1, engine);
    const auto b = run("det-b", 1, engine);
    const auto c = run("det-c", 4, engine);
    if (a != b) return fail(std::string(to_string(engine)) + ": repeated runs differ");
    if (a != c) return fail(std::string(to_string(engine)) + ": 1 vs 4 workers differ");
  }
  return pass("anneal and ga: 3 partitions, repeated runs and 1 vs 4 workers byte-identical");
}

// 11 --------------------------------------------------------------------------

Outcome end_to_end() {
  std::string opt;
  if (const char* env = std::getenv("PHASEOPT_OPT")) opt = env;
  else if (command_exists("opt")) opt = "opt";
  if (opt.empty() || !command_exists(opt)) {
    return {Verdict::Skip, "no opt-compatible binary (set PHASEOPT_OPT or put opt on PATH)"};
  }
  const auto root = scratch("e2e");
  const auto json = root / "summary.jsonl";
  const std::vector<std::string> argv = {PHASEOPT_BIN,
                                         "--optimizer-cmd=" + opt + " -S -passes={pipeline} {input} -o {output}",
                                         "--library=" + (fs::path(PHASEOPT_DATA_DIR) / "subsequences_portable.tsv").string(),
                                         "--cost-type=instcount",
                                         "--max-iterations=10",
                                         "--scratch-dir=" + (root / "work").string(),
                                         "--json-out=" + json.string(),
                                         (kFixtures / "loop-wrap.ll").string(),
                                         (kFixtures / "counters.ll").string()};
  const auto r = run_process(argv, "", std::chrono::minutes(10));
  if (!r.succeeded()) return fail("phaseopt " + r.describe() + ": " + r.err.substr(0, 300));
  const auto ls = lines_of(slurp(json));
  std::size_t with_best = 0;
  for (const auto& l : ls) {
    with_best += l.find("\"best_recipe\":null") == std::string::npos &&
                 l.find("\"best_recipe\":\"\"") == std::string::npos;
  }
  return check(ls.size() == 2 && with_best == 2,
               std::to_string(with_best) + "/" + std::to_string(ls.size()) + " partitions with a non-empty best");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "space-size", 0.001, space_sizes},
      {2, "cooling-trace", 0.001, cooling_trace},
      {3, "acceptance-rule", 5, acceptance_rule},
      {4, "oracle-equivalence", 30, oracle_equivalence},
      {5, "rejection-semantics", 10, rejection_semantics},
      {6, "early-exit", 5, early_exit},
      {7, "cache-contract", 5, cache_contract},
      {8, "dump-format", 0, dump_conformance},
      {9, "trace-format", 0, trace_format},
      {10, "determinism", 0, determinism},
      {11, "end-to-end", 0, end_to_end},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.verdict == Verdict::Pass && c.limit_seconds > 0 && secs > c.limit_seconds) {
      o = fail(o.detail + "; over the " + std::to_string(c.limit_seconds) + " s limit");
    }
    const char* tag = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Fail ? "FAIL" : "SKIP";
    std::printf("%s criterion %2d %-20s %s (%.3f s)\n", tag, c.id, c.name, o.detail.c_str(), secs);
    failed += o.verdict == Verdict::Fail;
  }
  std::fflush(stdout);
  return failed ? 1 : 0;
}
