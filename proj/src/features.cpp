// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <unordered_map>

#include "phaseopt/features.hpp"

namespace phaseopt {

namespace {

struct BlockStats {
  std::size_t instructions = 0;
  std::size_t loads = 0;
  std::size_t stores = 0;
};

struct FnStats {
  const FunctionModel* fn = nullptr;
  std::vector<BlockStats> blocks;
  std::vector<std::vector<std::size_t>> succ;
  std::vector<std::vector<std::size_t>> pred;
  LoopAnalysis loops;

  std::size_t instructions = 0;
  std::size_t loads = 0;
  std::size_t stores = 0;
  std::size_t vector_instructions = 0;
  std::size_t conditional_branches = 0;
  std::size_t edges = 0;
  std::size_t critical_edges = 0;
  std::size_t calls_defined = 0;
  std::size_t call_uses = 0;
  std::size_t cb_with_arg = 0;
  std::size_t call_return_ptr = 0;
  std::size_t indirect_calls = 0;
  std::size_t callsites_in_loop = 0;
  std::size_t call_uses_in_loop = 0;
  std::size_t max_dom_level = 0;
  std::size_t max_loop_depth = 0;
  double avg_loop_depth = 0;
  std::size_t instructions_in_loops = 0;
  std::size_t multi_succ_blocks_in_loops = 0;
  std::size_t conditionally_executed_blocks = 0;
  bool recursive = false;
  std::size_t users = 0;
  std::size_t height = 0;
  std::size_t scc_size = 1;
};

struct ModuleStats {
  std::size_t functions = 0;
  std::size_t globals = 0;
  std::size_t instructions = 0;
  std::size_t blocks = 0;
  std::size_t loads = 0;
  std::size_t stores = 0;
  std::size_t edges = 0;
  std::size_t critical_edges = 0;
  std::size_t loops = 0;
  std::size_t calls_defined = 0;
  std::size_t median_calls = 0;
  std::size_t call_graph_edges = 0;
};

struct CallEdge {
  std::size_t caller = 0;
  std::size_t callee = 0;
  std::vector<const CallSite*> sites;
};

struct Ctx {
  const ModuleStats* module = nullptr;
  const FnStats* fn = nullptr;
  const LoopModel* loop = nullptr;
  const CallEdge* edge = nullptr;
  const FnStats* caller = nullptr;
  const FnStats* callee = nullptr;
};

using Value = std::optional<double>;

double ratio(double a, double b) { return b == 0 ? 0.0 : a / b; }

double as_double(std::size_t v) { return static_cast<double>(v); }

void compute_function(FnStats& s, std::size_t* visits) {
  const FunctionModel& f = *s.fn;
  const std::size_t n = f.blocks.size();
  s.blocks.resize(n);
  s.succ.resize(n);
  s.pred.resize(n);

  for (std::size_t b = 0; b < n; ++b) {
    auto& bs = s.blocks[b];
    for (const auto& ins : f.blocks[b].instructions) {
      if (visits) ++*visits;
      ++bs.instructions;
      bs.loads += ins.is_load;
      bs.stores += ins.is_store;
      s.vector_instructions += ins.is_vector;
      if (ins.opcode == "switch" ||
          (ins.opcode == "br" && ins.text.find("br i1") != std::string::npos)) {
        ++s.conditional_branches;
      }
    }
    s.instructions += bs.instructions;
    s.loads += bs.loads;
    s.stores += bs.stores;
  }

  for (const auto& [from, to] : f.edges) {
    const auto a = f.block_index(from);
    const auto b = f.block_index(to);
    if (!a || !b) continue;
    s.succ[*a].push_back(*b);
    s.pred[*b].push_back(*a);
  }
  s.edges = f.edges.size();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b : s.succ[a]) {
      s.critical_edges += s.succ[a].size() > 1 && s.pred[b].size() > 1;
    }
  }
  for (std::size_t b = 1; b < n; ++b) {
    for (std::size_t p : s.pred[b]) {
      if (s.succ[p].size() > 1) {
        ++s.conditionally_executed_blocks;
        break;
      }
    }
  }

  s.max_dom_level = compute_dominators(f).max_depth();
  s.loops = detect_loops(f, visits);
  std::vector<char> in_loop(n, 0);
  double depth_sum = 0;
  for (const auto& loop : s.loops.loops) {
    s.max_loop_depth = std::max(s.max_loop_depth, loop.depth);
    depth_sum += static_cast<double>(loop.depth);
    for (std::size_t b : loop.blocks) in_loop[b] = 1;
  }
  s.avg_loop_depth = ratio(depth_sum, as_double(s.loops.loops.size()));
  for (std::size_t b = 0; b < n; ++b) {
    if (!in_loop[b]) continue;
    s.instructions_in_loops += s.blocks[b].instructions;
    s.multi_succ_blocks_in_loops += s.succ[b].size() > 1;
  }

  for (const auto& cs : f.calls) {
    s.call_uses += cs.result_used;
    s.cb_with_arg += cs.args > 0;
    s.call_return_ptr += cs.returns_pointer;
    s.indirect_calls += cs.indirect;
    s.callsites_in_loop += cs.in_loop;
    s.call_uses_in_loop += cs.in_loop && cs.result_used;
    s.recursive |= cs.callee == f.name;
  }
}

// SCC sizes and heights over the call graph of defined functions.
void call_graph(std::vector<FnStats>& fns, const std::vector<CallEdge>& edges) {
  const std::size_t n = fns.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& e : edges) adj[e.caller].push_back(e.callee);

  // Tarjan, iterative.
  std::vector<std::size_t> index(n, SIZE_MAX), low(n, 0), comp(n, SIZE_MAX);
  std::vector<char> on_stack(n, 0);
  std::vector<std::size_t> stack;
  std::size_t counter = 0, comps = 0;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != SIZE_MAX) continue;
    std::vector<std::pair<std::size_t, std::size_t>> work{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!work.empty()) {
      auto& [v, i] = work.back();
      if (i < adj[v].size()) {
        const std::size_t w = adj[v][i++];
        if (index[w] == SIZE_MAX) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          work.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        while (true) {
          const std::size_t w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp[w] = comps;
          if (w == v) break;
        }
        ++comps;
      }
      const std::size_t done = v;
      work.pop_back();
      if (!work.empty()) low[work.back().first] = std::min(low[work.back().first], low[done]);
    }
  }

  std::vector<std::size_t> comp_size(comps, 0);
  for (std::size_t v = 0; v < n; ++v) ++comp_size[comp[v]];
  // Tarjan emits components in reverse topological order, so successors of
  // a component always have a smaller id.
  std::vector<std::size_t> comp_height(comps, 0);
  for (std::size_t c = 0; c < comps; ++c) {
    for (std::size_t v = 0; v < n; ++v) {
      if (comp[v] != c) continue;
      for (std::size_t w : adj[v]) {
        if (comp[w] != c) comp_height[c] = std::max(comp_height[c], comp_height[comp[w]] + 1);
      }
    }
  }
  for (std::size_t v = 0; v < n; ++v) {
    fns[v].scc_size = comp_size[comp[v]];
    fns[v].height = comp_height[comp[v]];
  }
}

using Metric = std::function<Value(const Ctx&)>;
using FnMetric = std::function<double(const FnStats&)>;

const std::unordered_map<std::string_view, Metric>& module_metrics() {
  static const std::unordered_map<std::string_view, Metric> table = {
      {"average-store-instructions-per-function",
       [](const Ctx& c) { return ratio(as_double(c.module->stores), as_double(c.module->functions)); }},
      {"average-load-instructions-per-function",
       [](const Ctx& c) { return ratio(as_double(c.module->loads), as_double(c.module->functions)); }},
      {"average-instructions-per-function",
       [](const Ctx& c) { return ratio(as_double(c.module->instructions), as_double(c.module->functions)); }},
      {"global-variable-count", [](const Ctx& c) { return as_double(c.module->globals); }},
      {"critical-edge-count", [](const Ctx& c) { return as_double(c.module->critical_edges); }},
      {"total-edge-count", [](const Ctx& c) { return as_double(c.module->edges); }},
      {"loop-count", [](const Ctx& c) { return as_double(c.module->loops); }},
      {"median-calls-per-function", [](const Ctx& c) { return as_double(c.module->median_calls); }},
      {"average-calls-per-function",
       [](const Ctx& c) { return ratio(as_double(c.module->calls_defined), as_double(c.module->functions)); }},
      {"total-function-calls", [](const Ctx& c) { return as_double(c.module->calls_defined); }},
      {"total-instruction-count", [](const Ctx& c) { return as_double(c.module->instructions); }},
      {"average-bb-per-function",
       [](const Ctx& c) { return ratio(as_double(c.module->blocks), as_double(c.module->functions)); }},
      {"total-bb-count", [](const Ctx& c) { return as_double(c.module->blocks); }},
      {"function-count", [](const Ctx& c) { return as_double(c.module->functions); }},
      {"node-count", [](const Ctx& c) { return as_double(c.module->functions); }},
      {"edge-count", [](const Ctx& c) { return as_double(c.module->call_graph_edges); }},
  };
  return table;
}

// Per-function metrics, used as `callee-X` / `caller-X` on call-edge rows and
// as bare `X` in function-scope columns.
const std::unordered_map<std::string_view, FnMetric>& function_metrics() {
  static const std::unordered_map<std::string_view, FnMetric> table = {
      {"BlockWithMultipleSuccessorsPerLoop",
       [](const FnStats& s) { return ratio(as_double(s.multi_succ_blocks_in_loops), as_double(s.loops.loops.size())); }},
      {"InstrPerLoop",
       [](const FnStats& s) { return ratio(as_double(s.instructions_in_loops), as_double(s.loops.loops.size())); }},
      {"AvgNestedLoopLevel", [](const FnStats& s) { return s.avg_loop_depth; }},
      {"AvgVecInstr",
       [](const FnStats& s) { return ratio(as_double(s.vector_instructions), as_double(s.instructions)); }},
      {"SuccessorPerBlock",
       [](const FnStats& s) { return ratio(as_double(s.edges), as_double(s.blocks.size())); }},
      {"InstructionPerBlock",
       [](const FnStats& s) { return ratio(as_double(s.instructions), as_double(s.blocks.size())); }},
      {"NumOfCallUsesInLoop", [](const FnStats& s) { return as_double(s.call_uses_in_loop); }},
      {"NumCallsiteInLoop", [](const FnStats& s) { return as_double(s.callsites_in_loop); }},
      {"IsRecursive", [](const FnStats& s) { return s.recursive ? 1.0 : 0.0; }},
      {"CallUsage", [](const FnStats& s) { return as_double(s.call_uses); }},
      {"CallerHeight", [](const FnStats& s) { return as_double(s.height); }},
      {"CBwithArg", [](const FnStats& s) { return as_double(s.cb_with_arg); }},
      {"ConditionalBranch", [](const FnStats& s) { return as_double(s.conditional_branches); }},
      {"CallReturnPtr", [](const FnStats& s) { return as_double(s.call_return_ptr); }},
      {"PtrCallee", [](const FnStats& s) { return as_double(s.indirect_calls); }},
      {"PtrArgs", [](const FnStats& s) { return as_double(s.fn->pointer_params); }},
      {"MaxDomTreeLevel", [](const FnStats& s) { return as_double(s.max_dom_level); }},
      {"MaxLoopDepth", [](const FnStats& s) { return as_double(s.max_loop_depth); }},
      {"Loops", [](const FnStats& s) { return as_double(s.loops.loops.size()); }},
      {"IsLinkOnce", [](const FnStats& s) { return s.fn->linkage == "linkonce" ? 1.0 : 0.0; }},
      {"IsLinkOnceODR", [](const FnStats& s) { return s.fn->linkage == "linkonce_odr" ? 1.0 : 0.0; }},
      {"IsLocal",
       [](const FnStats& s) {
         return s.fn->linkage == "internal" || s.fn->linkage == "private" ? 1.0 : 0.0;
       }},
      {"Calls", [](const FnStats& s) { return as_double(s.fn->calls.size()); }},
      {"Blocks", [](const FnStats& s) { return as_double(s.blocks.size()); }},
      {"InitialSize", [](const FnStats& s) { return as_double(s.instructions); }},
      {"users", [](const FnStats& s) { return as_double(s.users); }},
      {"conditionally-executed-blocks",
       [](const FnStats& s) { return as_double(s.conditionally_executed_blocks); }},
      {"basic-block-count", [](const FnStats& s) { return as_double(s.blocks.size()); }},
      {"scc-size", [](const FnStats& s) { return as_double(s.scc_size); }},
  };
  return table;
}

const std::unordered_map<std::string_view, Metric>& edge_metrics() {
  auto any = [](const Ctx& c, auto pred) {
    return std::any_of(c.edge->sites.begin(), c.edge->sites.end(), pred) ? 1.0 : 0.0;
  };
  auto max_of = [](const Ctx& c, auto get) {
    std::size_t m = 0;
    for (const CallSite* cs : c.edge->sites) m = std::max(m, get(*cs));
    return as_double(m);
  };
  static const std::unordered_map<std::string_view, Metric> table = {
      {"is-tail", [=](const Ctx& c) { return any(c, [](const CallSite* s) { return s->tail; }); }},
      {"is-must-tail", [=](const Ctx& c) { return any(c, [](const CallSite* s) { return s->must_tail; }); }},
      {"is-in-inner-loop",
       [=](const Ctx& c) { return any(c, [](const CallSite* s) { return s->in_innermost_loop; }); }},
      {"is-indirect", [](const Ctx&) { return 0.0; }},
      {"loop-level", [=](const Ctx& c) { return max_of(c, [](const CallSite& s) { return s.loop_depth; }); }},
      {"nr-ctant-params",
       [=](const Ctx& c) { return max_of(c, [](const CallSite& s) { return s.constant_args; }); }},
      {"constant-args",
       [=](const Ctx& c) { return max_of(c, [](const CallSite& s) { return s.constant_args; }); }},
      {"callsite-height", [](const Ctx& c) { return as_double(c.caller->height); }},
      {"num-loops", [](const Ctx& c) { return as_double(c.callee->loops.loops.size()); }},
      {"is-multiple-blocks", [](const Ctx& c) { return c.callee->blocks.size() > 1 ? 1.0 : 0.0; }},
  };
  return table;
}

struct LoopFacts {
  std::size_t instructions = 0;
  std::size_t loads = 0;
  std::size_t stores = 0;
};

LoopFacts loop_facts(const FnStats& s, const LoopModel& l) {
  LoopFacts f;
  for (std::size_t b : l.blocks) {
    f.instructions += s.blocks[b].instructions;
    f.loads += s.blocks[b].loads;
    f.stores += s.blocks[b].stores;
  }
  return f;
}

std::size_t loop_height(const LoopAnalysis& la, std::size_t i) {
  std::size_t h = 0;
  for (std::size_t c : la.loops[i].children) h = std::max(h, loop_height(la, c) + 1);
  return h;
}

std::size_t loop_index(const FnStats& s, const LoopModel& l) {
  return static_cast<std::size_t>(&l - s.loops.loops.data());
}

const std::unordered_map<std::string_view, Metric>& loop_metrics() {
  auto facts = [](const Ctx& c) { return loop_facts(*c.fn, *c.loop); };
  auto nest = [](const Ctx& c) {
    const auto& loops = c.fn->loops.loops;
    const LoopModel* root = c.loop;
    while (root->parent) root = &loops[*root->parent];
    return loop_facts(*c.fn, *root);
  };
  auto bound = [](const Ctx& c, auto get) -> Value {
    if (!c.loop->bounds) return std::nullopt;
    return static_cast<double>(get(*c.loop->bounds));
  };
  auto children_avg = [](const Ctx& c, auto get) {
    const auto& kids = c.loop->children;
    double sum = 0;
    for (std::size_t k : kids) sum += as_double(get(loop_facts(*c.fn, c.fn->loops.loops[k])));
    return ratio(sum, as_double(kids.size()));
  };
  static const std::unordered_map<std::string_view, Metric> table = {
      {"IsFixedTripCount", [](const Ctx& c) { return c.loop->bounds ? 1.0 : 0.0; }},
      {"MaxLoopHeight",
       [](const Ctx& c) { return as_double(loop_height(c.fn->loops, loop_index(*c.fn, *c.loop))); }},
      {"IsOuterMostLoop", [](const Ctx& c) { return c.loop->parent ? 0.0 : 1.0; }},
      {"IsInnerMostLoop", [](const Ctx& c) { return c.loop->children.empty() ? 1.0 : 0.0; }},
      {"TotBlocksPerLoop", [](const Ctx& c) { return as_double(c.loop->blocks.size()); }},
      {"AvgNumLoadInstPerLoop",
       [=](const Ctx& c) { const auto f = facts(c); return ratio(as_double(f.loads), as_double(f.instructions)); }},
      {"TotLoopInstCount", [=](const Ctx& c) { return as_double(facts(c).instructions); }},
      {"NumStoreInstPerLoop", [=](const Ctx& c) { return as_double(facts(c).stores); }},
      {"NumLoadInstPerLoop", [=](const Ctx& c) { return as_double(facts(c).loads); }},
      {"AvgNumLoadInstPerLoopNest",
       [=](const Ctx& c) { const auto f = nest(c); return ratio(as_double(f.loads), as_double(f.instructions)); }},
      {"TotLoopNestInstCount", [=](const Ctx& c) { return as_double(nest(c).instructions); }},
      {"NumStoreInstPerLoopNest", [=](const Ctx& c) { return as_double(nest(c).stores); }},
      {"NumLoadInstPerLoopNest", [=](const Ctx& c) { return as_double(nest(c).loads); }},
      {"AvgNumInsts",
       [=](const Ctx& c) { return children_avg(c, [](const LoopFacts& f) { return f.instructions; }); }},
      {"AvgStoreSetSize",
       [=](const Ctx& c) { return children_avg(c, [](const LoopFacts& f) { return f.stores; }); }},
      {"IndVarSetSize", [](const Ctx& c) { return as_double(c.loop->induction_phis); }},
      {"StepValueInt", [=](const Ctx& c) { return bound(c, [](const InductionBounds& b) { return b.step; }); }},
      {"FinalIVValueInt", [=](const Ctx& c) { return bound(c, [](const InductionBounds& b) { return b.final; }); }},
      {"InitialIVValueInt",
       [=](const Ctx& c) { return bound(c, [](const InductionBounds& b) { return b.initial; }); }},
      {"Size",
       [=](const Ctx& c) {
         std::size_t crossing = 0;
         for (std::size_t b : c.loop->blocks) {
           for (std::size_t p : c.fn->pred[b]) crossing += !c.loop->contains(p);
           for (std::size_t s : c.fn->succ[b]) crossing += !c.loop->contains(s);
         }
         return as_double(facts(c).instructions + crossing);
       }},
      {"MaxTripCount",
       [=](const Ctx& c) { return bound(c, [](const InductionBounds& b) { return b.trip_count; }); }},
      {"TripCount",
       [=](const Ctx& c) { return bound(c, [](const InductionBounds& b) { return b.trip_count; }); }},
  };
  return table;
}

Value evaluate_column(const FeatureColumn& col, const Ctx& c) {
  const std::string_view name = col.name;
  switch (col.scope) {
    case FeatureScope::Module: {
      const auto& t = module_metrics();
      if (auto it = t.find(name); it != t.end()) return it->second(c);
      return std::nullopt;
    }
    case FeatureScope::Function: {
      if (!c.fn) return std::nullopt;
      const auto& t = function_metrics();
      if (auto it = t.find(name); it != t.end()) return it->second(*c.fn);
      return std::nullopt;
    }
    case FeatureScope::CalleeCaller: {
      if (!c.edge) return std::nullopt;
      const auto& t = edge_metrics();
      if (auto it = t.find(name); it != t.end()) return it->second(c);
      const FnStats* side = nullptr;
      std::string_view base;
      if (name.starts_with("callee-")) {
        side = c.callee;
        base = name.substr(7);
      } else if (name.starts_with("caller-")) {
        side = c.caller;
        base = name.substr(7);
      }
      if (!side) return std::nullopt;
      const auto& ft = function_metrics();
      if (auto it = ft.find(base); it != ft.end()) return it->second(*side);
      return std::nullopt;
    }
    case FeatureScope::Loop: {
      if (!c.loop) return std::nullopt;
      const auto& t = loop_metrics();
      if (auto it = t.find(name); it != t.end()) return it->second(c);
      return std::nullopt;
    }
  }
  return std::nullopt;
}

bool populates(FeatureScope row, FeatureScope column) {
  if (column == FeatureScope::Module) return true;
  switch (row) {
    case FeatureScope::Module: return false;
    case FeatureScope::Function: return column == FeatureScope::Function;
    case FeatureScope::Loop: return column == FeatureScope::Function || column == FeatureScope::Loop;
    case FeatureScope::CalleeCaller: return column == FeatureScope::CalleeCaller;
  }
  return false;
}

FeatureRow make_row(RowKey key, FeatureScope scope, const Ctx& c, const FeatureSchema& schema) {
  FeatureRow row;
  row.key = std::move(key);
  row.scope = scope;
  row.values.schema_id = schema.id();
  row.values.values.assign(schema.size(), 0.0);
  row.computed.assign(schema.size(), false);
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto& col = schema.columns()[i];
    if (!populates(scope, col.scope)) continue;
    const Value v = evaluate_column(col, c);
    if (v && std::isfinite(*v)) {
      row.values.values[i] = *v;
      row.computed[i] = true;
    }
  }
  return row;
}

}  // namespace

std::vector<FeatureRow> collect_features(const IrModel& model, const FeatureSchema& schema,
                                         CollectStats* stats) {
  std::size_t visits = 0;
  std::vector<FnStats> fns(model.functions.size());
  std::unordered_map<std::string_view, std::size_t> by_name;
  for (std::size_t i = 0; i < fns.size(); ++i) {
    fns[i].fn = &model.functions[i];
    by_name.emplace(model.functions[i].name, i);
    compute_function(fns[i], &visits);
  }

  // Call edges between defined functions, per caller in first-seen order.
  std::vector<CallEdge> edges;
  std::vector<std::vector<std::size_t>> edges_of(fns.size());
  for (std::size_t i = 0; i < fns.size(); ++i) {
    std::unordered_map<std::size_t, std::size_t> slot;
    for (const auto& cs : model.functions[i].calls) {
      const auto it = by_name.find(cs.callee);
      if (cs.callee.empty() || it == by_name.end()) continue;
      ++fns[i].calls_defined;
      ++fns[it->second].users;
      auto [pos, fresh] = slot.emplace(it->second, edges.size());
      if (fresh) {
        edges.push_back({i, it->second, {}});
        edges_of[i].push_back(edges.size() - 1);
      }
      edges[pos->second].sites.push_back(&cs);
    }
  }
  call_graph(fns, edges);

  ModuleStats ms;
  ms.functions = fns.size();
  ms.globals = model.globals.size();
  ms.call_graph_edges = edges.size();
  std::vector<std::size_t> per_fn_calls;
  for (const auto& s : fns) {
    ms.instructions += s.instructions;
    ms.blocks += s.blocks.size();
    ms.loads += s.loads;
    ms.stores += s.stores;
    ms.edges += s.edges;
    ms.critical_edges += s.critical_edges;
    ms.loops += s.loops.loops.size();
    ms.calls_defined += s.calls_defined;
    per_fn_calls.push_back(s.calls_defined);
  }
  if (!per_fn_calls.empty()) {
    std::sort(per_fn_calls.begin(), per_fn_calls.end());
    const std::size_t k = per_fn_calls.size();
    ms.median_calls = k % 2 ? per_fn_calls[k / 2] : (per_fn_calls[k / 2 - 1] + per_fn_calls[k / 2]) / 2;
  }

  const std::string& mod = model.module_name;
  std::vector<FeatureRow> rows;
  Ctx base;
  base.module = &ms;
  rows.push_back(make_row({mod, "", "", "", ""}, FeatureScope::Module, base, schema));

  for (std::size_t i = 0; i < fns.size(); ++i) {
    const FnStats& s = fns[i];
    const std::string& fname = s.fn->name;
    Ctx c = base;
    c.fn = &s;
    if (s.loops.loops.empty()) {
      rows.push_back(make_row({mod, fname, "", "", ""}, FeatureScope::Function, c, schema));
    }
    for (const auto& loop : s.loops.loops) {
      c.loop = &loop;
      rows.push_back(make_row({mod, fname, "", "", loop.header}, FeatureScope::Loop, c, schema));
    }
    for (std::size_t e : edges_of[i]) {
      Ctx ec = base;
      ec.edge = &edges[e];
      ec.caller = &fns[edges[e].caller];
      ec.callee = &fns[edges[e].callee];
      rows.push_back(make_row({mod, fname, ec.callee->fn->name, fname, ""},
                              FeatureScope::CalleeCaller, ec, schema));
    }
  }

  if (stats) {
    stats->instructions = ms.instructions;
    stats->instruction_visits = visits;
  }
  return rows;
}

FeatureVector module_feature_vector(const IrModel& model, const FeatureSchema& schema) {
  return collect_features(model, schema).front().values;
}

}  // namespace phaseopt
