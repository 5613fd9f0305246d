// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <charconv>
#include <regex>
#include <unordered_map>

#include "phaseopt/features.hpp"

namespace phaseopt {

bool LoopModel::contains(std::size_t block) const {
  return std::binary_search(blocks.begin(), blocks.end(), block);
}

bool DominatorTree::dominates(std::size_t a, std::size_t b) const {
  if (b >= idom.size() || !idom[b]) return false;
  while (true) {
    if (a == b) return true;
    const auto up = *idom[b];
    if (up == b) return false;
    b = up;
  }
}

std::size_t DominatorTree::max_depth() const {
  std::size_t d = 0;
  for (std::size_t i = 0; i < idom.size(); ++i) {
    if (idom[i]) d = std::max(d, depth[i]);
  }
  return d;
}

namespace {

struct Cfg {
  std::vector<std::vector<std::size_t>> succ;
  std::vector<std::vector<std::size_t>> pred;
};

Cfg build_cfg(const FunctionModel& f) {
  Cfg g;
  g.succ.resize(f.blocks.size());
  g.pred.resize(f.blocks.size());
  std::unordered_map<std::string_view, std::size_t> index;
  for (std::size_t i = 0; i < f.blocks.size(); ++i) index.emplace(f.blocks[i].label, i);
  for (const auto& [from, to] : f.edges) {
    const auto a = index.find(from);
    const auto b = index.find(to);
    if (a == index.end() || b == index.end()) continue;
    g.succ[a->second].push_back(b->second);
    g.pred[b->second].push_back(a->second);
  }
  return g;
}

std::vector<std::size_t> reverse_postorder(const Cfg& g) {
  const std::size_t n = g.succ.size();
  std::vector<std::size_t> post;
  if (n == 0) return post;
  std::vector<char> seen(n, 0);
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  seen[0] = 1;
  while (!stack.empty()) {
    auto& [v, i] = stack.back();
    if (i < g.succ[v].size()) {
      const std::size_t w = g.succ[v][i++];
      if (!seen[w]) {
        seen[w] = 1;
        stack.push_back({w, 0});
      }
    } else {
      post.push_back(v);
      stack.pop_back();
    }
  }
  std::reverse(post.begin(), post.end());
  return post;
}

DominatorTree dominators(const Cfg& g) {
  const std::size_t n = g.succ.size();
  DominatorTree dt;
  dt.idom.assign(n, std::nullopt);
  dt.depth.assign(n, 0);
  if (n == 0) return dt;

  const auto rpo = reverse_postorder(g);
  std::vector<std::size_t> order(n, n);
  for (std::size_t i = 0; i < rpo.size(); ++i) order[rpo[i]] = i;

  auto intersect = [&](std::size_t a, std::size_t b) {
    while (a != b) {
      while (order[a] > order[b]) a = *dt.idom[a];
      while (order[b] > order[a]) b = *dt.idom[b];
    }
    return a;
  };

  dt.idom[0] = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 1; i < rpo.size(); ++i) {
      const std::size_t b = rpo[i];
      std::optional<std::size_t> next;
      for (std::size_t p : g.pred[b]) {
        if (!dt.idom[p]) continue;
        next = next ? intersect(p, *next) : p;
      }
      if (next && dt.idom[b] != next) {
        dt.idom[b] = next;
        changed = true;
      }
    }
  }
  for (std::size_t b : rpo) {
    if (b != 0) dt.depth[b] = dt.depth[*dt.idom[b]] + 1;
  }
  return dt;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  if (s == "true") return 1;
  if (s == "false") return 0;
  std::int64_t v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::string_view strip_percent(std::string_view s) {
  if (!s.empty() && s.front() == '%') s.remove_prefix(1);
  return s;
}

// Number of leading k = 0, 1, ... for which `pred(a + k*s, bound)` holds,
// or nullopt when it never fails.
std::optional<std::uint64_t> leading_true(std::int64_t a, std::int64_t s,
                                          std::string_view pred, std::int64_t bound) {
  __extension__ typedef __int128 i128;
  auto holds = [&](i128 v) {
    if (pred == "slt" || pred == "ult") return v < bound;
    if (pred == "sle" || pred == "ule") return v <= bound;
    if (pred == "sgt" || pred == "ugt") return v > bound;
    if (pred == "sge" || pred == "uge") return v >= bound;
    if (pred == "ne") return v != bound;
    if (pred == "eq") return v == bound;
    return false;
  };
  if (!holds(a)) return 0;
  if (s == 0) return std::nullopt;
  auto ceil_div = [](i128 num, i128 den) { return num <= 0 ? i128(0) : (num + den - 1) / den; };
  const i128 A = a, S = s, B = bound;
  i128 k = -1;
  if ((pred == "slt" || pred == "ult") && s > 0) k = ceil_div(B - A, S);
  else if ((pred == "sle" || pred == "ule") && s > 0) k = ceil_div(B - A + 1, S);
  else if ((pred == "sgt" || pred == "ugt") && s < 0) k = ceil_div(A - B, -S);
  else if ((pred == "sge" || pred == "uge") && s < 0) k = ceil_div(A - B + 1, -S);
  else if (pred == "ne") {
    if ((B - A) % S == 0 && (B - A) / S > 0) k = (B - A) / S;
  } else if (pred == "eq") {
    k = 1;
  }
  if (k < 0 || k > i128(INT64_MAX)) return std::nullopt;
  return static_cast<std::uint64_t>(k);
}

std::string invert(std::string_view pred) {
  static const std::pair<const char*, const char*> kPairs[] = {
      {"slt", "sge"}, {"sge", "slt"}, {"sle", "sgt"}, {"sgt", "sle"},
      {"ult", "uge"}, {"uge", "ult"}, {"ule", "ugt"}, {"ugt", "ule"},
      {"eq", "ne"},   {"ne", "eq"}};
  for (auto [a, b] : kPairs) {
    if (pred == a) return b;
  }
  return std::string(pred);
}

std::string swap_operands(std::string_view pred) {
  static const std::pair<const char*, const char*> kPairs[] = {
      {"slt", "sgt"}, {"sgt", "slt"}, {"sle", "sge"}, {"sge", "sle"},
      {"ult", "ugt"}, {"ugt", "ult"}, {"ule", "uge"}, {"uge", "ule"}};
  for (auto [a, b] : kPairs) {
    if (pred == a) return b;
  }
  return std::string(pred);
}

struct Def {
  std::size_t block;
  const InstructionRecord* ins;
};

// Fills loop.induction_phis and loop.bounds.
void match_induction(const FunctionModel& f, const Cfg& g, LoopModel& loop,
                     const std::unordered_map<std::string_view, Def>& defs,
                     std::size_t* visits) {
  static const std::regex phi_re(R"(^phi\s+(i\d+)\s+(.*)$)");
  static const std::regex incoming_re(R"(\[\s*([^,\]]+?)\s*,\s*%("[^"]*"|[-A-Za-z0-9._$]+)\s*\])");
  static const std::regex add_re(
      R"(^(add|sub)\s+(?:nuw\s+|nsw\s+)*(i\d+)\s+([^,\s]+)\s*,\s*([^,\s]+)$)");
  static const std::regex icmp_re(R"(^icmp\s+(\w+)\s+(i\d+)\s+([^,\s]+)\s*,\s*([^,\s]+)$)");
  static const std::regex condbr_re(
      R"(^br\s+i1\s+%("[^"]*"|[-A-Za-z0-9._$]+)\s*,\s*label\s+%("[^"]*"|[-A-Za-z0-9._$]+)\s*,\s*label\s+%("[^"]*"|[-A-Za-z0-9._$]+)$)");

  const auto header = f.block_index(loop.header);
  if (!header) return;

  auto rhs = [](const InstructionRecord& ins) -> std::string {
    const auto eq = ins.text.find('=');
    std::string s = eq == std::string::npos ? ins.text : ins.text.substr(eq + 1);
    const auto first = s.find_first_not_of(" \t");
    s = first == std::string::npos ? "" : s.substr(first);
    if (auto meta = s.find(", !"); meta != std::string::npos) s.resize(meta);
    return s;
  };
  auto unquote = [](std::string s) {
    if (s.size() >= 2 && s.front() == '"') s = s.substr(1, s.size() - 2);
    return s;
  };

  std::optional<InductionBounds> found;
  for (const auto& ins : f.blocks[*header].instructions) {
    if (visits) ++*visits;
    if (ins.opcode != "phi") continue;
    std::smatch pm;
    const std::string text = rhs(ins);
    if (!std::regex_match(text, pm, phi_re)) continue;
    ++loop.induction_phis;
    if (found) continue;

    std::optional<std::int64_t> init;
    std::string next_name;
    bool shape_ok = true;
    const std::string incoming = pm[2].str();
    for (std::sregex_iterator it(incoming.begin(), incoming.end(), incoming_re), end; it != end; ++it) {
      const std::string value = (*it)[1].str();
      const auto pred = f.block_index(unquote((*it)[2].str()));
      if (!pred) { shape_ok = false; break; }
      if (loop.contains(*pred)) {
        if (value.front() != '%' || !next_name.empty()) { shape_ok = false; break; }
        next_name = unquote(std::string(strip_percent(value)));
      } else {
        const auto c = parse_int(value);
        if (!c || init) { shape_ok = false; break; }
        init = c;
      }
    }
    if (!shape_ok || !init || next_name.empty()) continue;

    const auto nd = defs.find(next_name);
    if (nd == defs.end() || !loop.contains(nd->second.block)) continue;
    std::smatch am;
    const std::string add_text = rhs(*nd->second.ins);
    if (!std::regex_match(add_text, am, add_re)) continue;
    const std::string iv = "%" + ins.result;
    std::optional<std::int64_t> step;
    if (am[3].str() == iv) step = parse_int(am[4].str());
    else if (am[4].str() == iv && am[1].str() == "add") step = parse_int(am[3].str());
    if (!step) continue;
    if (am[1].str() == "sub") step = -*step;

    // The single exiting conditional branch must test iv or next against a
    // constant.
    std::optional<InductionBounds> candidate;
    std::size_t exits = 0;
    for (std::size_t b : loop.blocks) {
      for (std::size_t s : g.succ[b]) exits += !loop.contains(s);
    }
    if (exits != 1) continue;
    for (std::size_t b : loop.blocks) {
      bool exiting = false;
      for (std::size_t s : g.succ[b]) exiting |= !loop.contains(s);
      if (!exiting || f.blocks[b].instructions.empty()) continue;
      std::smatch bm;
      const std::string br_text = rhs(f.blocks[b].instructions.back());
      if (!std::regex_match(br_text, bm, condbr_re)) break;
      const auto cd = defs.find(unquote(bm[1].str()));
      if (cd == defs.end()) break;
      std::smatch cm;
      const std::string cmp_text = rhs(*cd->second.ins);
      if (!std::regex_match(cmp_text, cm, icmp_re)) break;
      std::string pred = cm[1].str();
      std::string lhs = cm[3].str();
      std::string bound_text = cm[4].str();
      if (parse_int(lhs) && !parse_int(bound_text)) {
        std::swap(lhs, bound_text);
        pred = swap_operands(pred);
      }
      const auto bound = parse_int(bound_text);
      const std::string nx = "%" + next_name;
      if (!bound || (lhs != iv && lhs != nx)) break;
      const auto true_target = f.block_index(unquote(bm[2].str()));
      if (!true_target) break;
      if (!loop.contains(*true_target)) pred = invert(pred);

      std::optional<std::uint64_t> trips;
      const bool latch = std::find(g.succ[b].begin(), g.succ[b].end(), *header) != g.succ[b].end();
      if (b == *header && lhs == iv && !latch) {
        trips = leading_true(*init, *step, pred, *bound);
      } else {
        const std::int64_t first = lhs == iv ? *init : *init + *step;
        const auto more = leading_true(first, *step, pred, *bound);
        if (more) trips = *more + 1;
      }
      if (trips) candidate = InductionBounds{*init, *step, *bound, *trips};
      break;
    }
    found = candidate;
  }
  loop.bounds = found;
}

}  // namespace

DominatorTree compute_dominators(const FunctionModel& f) {
  return dominators(build_cfg(f));
}

LoopAnalysis detect_loops(const FunctionModel& f, std::size_t* instruction_visits) {
  LoopAnalysis out;
  const Cfg g = build_cfg(f);
  const DominatorTree dt = dominators(g);
  const std::size_t n = f.blocks.size();

  // Back edges grouped by header, in header block order.
  std::vector<std::vector<std::size_t>> latches(n);
  const auto rpo = reverse_postorder(g);
  std::vector<std::size_t> order(n, n);
  for (std::size_t i = 0; i < rpo.size(); ++i) order[rpo[i]] = i;
  for (std::size_t a = 0; a < n; ++a) {
    if (!dt.idom[a]) continue;
    for (std::size_t b : g.succ[a]) {
      if (dt.dominates(b, a)) latches[b].push_back(a);
      else if (order[b] <= order[a]) ++out.irreducible_edges;
    }
  }

  for (std::size_t h = 0; h < n; ++h) {
    if (latches[h].empty()) continue;
    std::vector<char> in(n, 0);
    in[h] = 1;
    std::vector<std::size_t> work;
    for (std::size_t l : latches[h]) {
      if (!in[l]) {
        in[l] = 1;
        work.push_back(l);
      }
    }
    while (!work.empty()) {
      const std::size_t v = work.back();
      work.pop_back();
      for (std::size_t p : g.pred[v]) {
        if (!in[p] && dt.idom[p]) {
          in[p] = 1;
          work.push_back(p);
        }
      }
    }
    LoopModel loop;
    loop.header = f.blocks[h].label;
    for (std::size_t i = 0; i < n; ++i) {
      if (in[i]) loop.blocks.push_back(i);
    }
    out.loops.push_back(std::move(loop));
  }

  // Parent = smallest strictly enclosing loop.
  auto& loops = out.loops;
  for (std::size_t i = 0; i < loops.size(); ++i) {
    const std::size_t hi = *f.block_index(loops[i].header);
    std::optional<std::size_t> parent;
    for (std::size_t j = 0; j < loops.size(); ++j) {
      if (i == j || loops[j].blocks.size() <= loops[i].blocks.size()) continue;
      if (!loops[j].contains(hi)) continue;
      if (!parent || loops[j].blocks.size() < loops[*parent].blocks.size()) parent = j;
    }
    loops[i].parent = parent;
    if (parent) loops[*parent].children.push_back(i);
  }
  for (auto& loop : loops) {
    std::size_t d = 1;
    for (auto p = loop.parent; p; p = loops[*p].parent) ++d;
    loop.depth = d;
  }

  if (loops.empty()) return out;
  std::unordered_map<std::string_view, Def> defs;
  for (std::size_t b = 0; b < n; ++b) {
    for (const auto& ins : f.blocks[b].instructions) {
      if (instruction_visits) ++*instruction_visits;
      if (!ins.result.empty()) defs.emplace(ins.result, Def{b, &ins});
    }
  }
  for (auto& loop : loops) match_induction(f, g, loop, defs, instruction_visits);
  return out;
}

}  // namespace phaseopt
