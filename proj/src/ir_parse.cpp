// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "phaseopt/error.hpp"
#include "phaseopt/features.hpp"

namespace phaseopt {

std::optional<std::size_t> FunctionModel::block_index(std::string_view label) const {
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (blocks[i].label == label) return i;
  }
  return std::nullopt;
}

std::size_t FunctionModel::instruction_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.instructions.size();
  return n;
}

const FunctionModel* IrModel::find_function(std::string_view name) const {
  for (const auto& f : functions) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Drops a `;` comment that is not inside a quoted string.
std::string_view strip_comment(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    else if (s[i] == ';' && !quoted) return s.substr(0, i);
  }
  return s;
}

bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' ||
         c == '-' || c == '$';
}

// Reads an identifier body (after the sigil) at s[pos]; quoted names keep
// their content without quotes.
std::string read_name(std::string_view s, std::size_t& pos) {
  if (pos < s.size() && s[pos] == '"') {
    const auto end = s.find('"', pos + 1);
    if (end == std::string_view::npos) {
      std::string out(s.substr(pos + 1));
      pos = s.size();
      return out;
    }
    std::string out(s.substr(pos + 1, end - pos - 1));
    pos = end + 1;
    return out;
  }
  const std::size_t start = pos;
  while (pos < s.size() && is_ident_char(s[pos])) ++pos;
  return std::string(s.substr(start, pos - start));
}

std::vector<std::string_view> words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

// Splits on commas at bracket depth 0.
std::vector<std::string_view> split_top_level(std::string_view s) {
  std::vector<std::string_view> out;
  int depth = 0;
  bool quoted = false;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '"') quoted = !quoted;
    if (quoted) continue;
    if (c == '(' || c == '[' || c == '{' || c == '<') ++depth;
    else if (c == ')' || c == ']' || c == '}' || c == '>') --depth;
    else if (c == ',' && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  const auto last = trim(s.substr(start));
  if (!last.empty() || !out.empty()) out.push_back(last);
  return out;
}

// Index of the bracket closing the one at `open`, or npos.
std::size_t matching_paren(std::string_view s, std::size_t open) {
  int depth = 0;
  bool quoted = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (quoted) continue;
    if (s[i] == '(') ++depth;
    else if (s[i] == ')' && --depth == 0) return i;
  }
  return std::string_view::npos;
}

bool is_pointer_type(std::string_view param) {
  const auto w = words(param);
  if (w.empty()) return false;
  return w[0] == "ptr" || w[0].back() == '*';
}

const std::unordered_set<std::string_view> kTerminators = {
    "ret",       "br",         "switch",   "indirectbr", "invoke",     "resume",
    "unreachable", "callbr",   "catchswitch", "catchret", "cleanupret"};

const std::unordered_set<std::string_view> kLinkages = {
    "private",  "internal",    "available_externally", "linkonce",   "weak",
    "common",   "appending",   "extern_weak",          "linkonce_odr", "weak_odr",
    "external"};

const std::regex& vector_type_re() {
  static const std::regex re(R"(<\s*(vscale\s+x\s+)?\d+\s+x\s)");
  return re;
}

struct PendingEdge {
  std::size_t from;
  std::string to;
  std::size_t line;
};

class Parser {
 public:
  explicit Parser(std::string module_name) { model_.module_name = std::move(module_name); }

  void line(std::string_view raw, std::size_t line_no) {
    std::string_view s = trim(strip_comment(raw));
    if (!pending_.empty()) {
      pending_ += ' ';
      pending_ += s;
      if (bracket_balance(pending_) <= 0) {
        const std::string joined = std::move(pending_);
        pending_.clear();
        instruction(joined, pending_line_);
      }
      return;
    }
    if (s.empty()) return;
    if (fn_) {
      body_line(s, line_no);
    } else {
      top_level_line(s, line_no);
    }
  }

  IrModel finish(std::size_t last_line) {
    if (!pending_.empty()) {
      throw ParseError(pending_line_, "unterminated bracket list in instruction");
    }
    if (fn_) {
      throw ParseError(fn_line_, "function @" + fn_->name + " has no closing '}' (reached line " +
                                     std::to_string(last_line) + ")");
    }
    for (auto& f : model_.functions) annotate_calls(f);
    return std::move(model_);
  }

 private:
  static int bracket_balance(std::string_view s) {
    int depth = 0;
    bool quoted = false;
    for (char c : s) {
      if (c == '"') quoted = !quoted;
      if (quoted) continue;
      if (c == '[') ++depth;
      else if (c == ']') --depth;
    }
    return depth;
  }

  void top_level_line(std::string_view s, std::size_t line_no) {
    if (s == "}") throw ParseError(line_no, "unbalanced '}' outside a function");
    if (s.starts_with("define")) {
      begin_function(s, line_no);
      return;
    }
    if (s.starts_with("declare")) {
      const auto at = s.find('@');
      if (at != std::string_view::npos) {
        std::size_t pos = at + 1;
        model_.declarations.push_back(read_name(s, pos));
      }
      return;
    }
    if (s.front() == '@') {
      std::size_t pos = 1;
      std::string name = read_name(s, pos);
      const auto eq = s.find('=', pos);
      if (eq == std::string_view::npos) return;
      for (std::string_view w : words(s.substr(eq + 1))) {
        if (w == "alias" || w == "ifunc") return;
        if (w == "global" || w == "constant") {
          model_.globals.push_back({std::move(name), w == "constant"});
          return;
        }
      }
    }
  }

  void begin_function(std::string_view s, std::size_t line_no) {
    if (s.back() != '{') {
      throw ParseError(line_no, "expected '{' at the end of the function header");
    }
    const auto at = s.find('@');
    if (at == std::string_view::npos) throw ParseError(line_no, "function header without a name");
    std::size_t pos = at + 1;
    FunctionModel f;
    f.name = read_name(s, pos);
    if (f.name.empty()) throw ParseError(line_no, "function header without a name");
    if (!names_.insert(f.name).second) {
      throw ParseError(line_no, "duplicate function @" + f.name);
    }
    for (std::string_view w : words(s.substr(0, at))) {
      if (kLinkages.contains(w)) f.linkage = std::string(w);
    }
    const auto open = s.find('(', pos);
    if (open != std::string_view::npos) {
      const auto close = matching_paren(s, open);
      if (close != std::string_view::npos) {
        for (auto p : split_top_level(s.substr(open + 1, close - open - 1))) {
          if (is_pointer_type(p)) ++f.pointer_params;
        }
      }
    }
    fn_ = std::move(f);
    fn_line_ = line_no;
    labels_.clear();
    edge_lines_.clear();
    block_open_ = false;
    implicit_blocks_ = 0;
  }

  void end_function() {
    auto& f = *fn_;
    for (const auto& e : edge_lines_) {
      if (!f.block_index(e.to)) {
        throw ParseError(e.line, "branch to undefined label %" + e.to + " in @" + f.name);
      }
    }
    std::set<std::pair<std::size_t, std::string>> seen;
    for (const auto& e : edge_lines_) {
      if (seen.insert({e.from, e.to}).second) {
        f.edges.emplace_back(f.blocks[e.from].label, e.to);
      }
    }
    model_.functions.push_back(std::move(f));
    fn_.reset();
  }

  void body_line(std::string_view s, std::size_t line_no) {
    if (s == "}") {
      end_function();
      return;
    }
    if (s.starts_with("define ")) {
      throw ParseError(line_no, "function @" + fn_->name + " opened at line " +
                                    std::to_string(fn_line_) + " is not closed before a new definition");
    }
    if (auto label = block_label(s)) {
      open_block(*label, line_no);
      return;
    }
    if (bracket_balance(s) > 0) {
      pending_ = std::string(s);
      pending_line_ = line_no;
      return;
    }
    instruction(s, line_no);
  }

  static std::optional<std::string> block_label(std::string_view s) {
    std::size_t pos = 0;
    if (s.front() == '%') pos = 1;
    if (pos >= s.size()) return std::nullopt;
    if (s[pos] != '"' && !is_ident_char(s[pos])) return std::nullopt;
    std::string name = read_name(s, pos);
    if (name.empty() || pos >= s.size() || s[pos] != ':') return std::nullopt;
    if (!trim(s.substr(pos + 1)).empty()) return std::nullopt;
    return name;
  }

  void open_block(std::string label, std::size_t line_no) {
    if (!labels_.insert(label).second) {
      throw ParseError(line_no, "duplicate block label %" + label + " in @" + fn_->name);
    }
    fn_->blocks.push_back({std::move(label), {}});
    block_open_ = true;
  }

  void instruction(std::string_view s, std::size_t line_no) {
    if (!block_open_) {
      std::string label = fn_->blocks.empty()
                              ? std::string("<entry>")
                              : "<bb" + std::to_string(++implicit_blocks_) + ">";
      open_block(std::move(label), line_no);
    }
    InstructionRecord ins = classify(s);
    auto& block = fn_->blocks.back();
    const std::size_t block_idx = fn_->blocks.size() - 1;

    if (ins.is_call) record_call(ins, block_idx);
    if (ins.is_terminator) {
      static const std::regex label_re(R"(label\s+%("[^"]*"|[-A-Za-z0-9._$]+))");
      for (std::sregex_iterator it(ins.text.begin(), ins.text.end(), label_re), end;
           it != end; ++it) {
        std::string target = (*it)[1].str();
        if (target.size() >= 2 && target.front() == '"') {
          target = target.substr(1, target.size() - 2);
        }
        edge_lines_.push_back({block_idx, std::move(target), line_no});
      }
      block_open_ = false;
    }
    block.instructions.push_back(std::move(ins));
  }

  static InstructionRecord classify(std::string_view s) {
    InstructionRecord ins;
    ins.text = std::string(s);
    std::string_view rest = s;
    if (s.front() == '%') {
      std::size_t pos = 1;
      std::string name = read_name(s, pos);
      const auto after = trim(s.substr(pos));
      if (!after.empty() && after.front() == '=') {
        ins.result = std::move(name);
        rest = trim(after.substr(1));
      }
    }
    auto w = words(rest);
    std::size_t op = 0;
    while (op < w.size() && (w[op] == "tail" || w[op] == "musttail" || w[op] == "notail")) ++op;
    if (op < w.size()) ins.opcode = std::string(w[op]);

    const std::string_view opc = ins.opcode;
    ins.is_load = opc == "load";
    ins.is_store = opc == "store";
    ins.is_call = opc == "call" || opc == "invoke" || opc == "callbr";
    ins.is_branch = opc == "br" || opc == "switch" || opc == "indirectbr";
    ins.is_terminator = kTerminators.contains(opc);
    ins.is_vector = (!opc.empty() && opc.front() == 'v' && opc != "va_arg") ||
                    opc == "extractelement" || opc == "insertelement" ||
                    opc == "shufflevector" ||
                    std::regex_search(ins.text, vector_type_re());

    // Operands: top-level comma-separated fields after the opcode, ignoring
    // metadata attachments.
    const auto op_pos = rest.find(opc);
    if (op_pos != std::string_view::npos) {
      const auto tail = trim(rest.substr(op_pos + opc.size()));
      if (!tail.empty()) {
        for (auto field : split_top_level(tail)) {
          if (!field.empty() && field.front() != '!' && !field.starts_with("align ")) {
            ++ins.operands;
          }
        }
      }
    }
    return ins;
  }

  void record_call(const InstructionRecord& ins, std::size_t block_idx) {
    CallSite cs;
    cs.block = block_idx;
    cs.result_used = !ins.result.empty();
    const std::string_view text = ins.text;
    cs.tail = text.find("tail call") != std::string_view::npos;
    cs.must_tail = text.find("musttail call") != std::string_view::npos;

    static const std::regex callee_re(R"(([@%])("[^"]*"|[-A-Za-z0-9._$]+)\s*\()");
    std::match_results<std::string_view::const_iterator> m;
    const auto op_pos = text.find(ins.opcode);
    const auto search_from = text.begin() + static_cast<std::ptrdiff_t>(op_pos + ins.opcode.size());
    if (!std::regex_search(search_from, text.end(), m, callee_re)) {
      fn_->calls.push_back(cs);  // inline asm or unrecognized form
      return;
    }
    std::string name = m[2].str();
    if (name.size() >= 2 && name.front() == '"') name = name.substr(1, name.size() - 2);
    if (m[1].str() == "@") {
      cs.callee = std::move(name);
    } else {
      cs.indirect = true;
    }

    std::string_view ret_part(&*search_from, static_cast<std::size_t>(m[0].first - search_from));
    if (auto paren = ret_part.find('('); paren != std::string_view::npos) {
      ret_part = ret_part.substr(0, paren);
    }
    for (auto w : words(ret_part)) {
      if (w == "ptr" || w.back() == '*') cs.returns_pointer = true;
    }

    const auto open = static_cast<std::size_t>(m[0].second - text.begin()) - 1;
    const auto close = matching_paren(text, open);
    if (close != std::string_view::npos) {
      for (auto arg : split_top_level(text.substr(open + 1, close - open - 1))) {
        if (arg.empty()) continue;
        ++cs.args;
        const auto aw = words(arg);
        if (!aw.empty() && aw.back().front() != '%') ++cs.constant_args;
      }
    }
    fn_->calls.push_back(std::move(cs));
  }

  static void annotate_calls(FunctionModel& f) {
    if (f.calls.empty()) return;
    const LoopAnalysis la = detect_loops(f);
    for (auto& cs : f.calls) {
      std::size_t depth = 0;
      bool innermost = false;
      for (const auto& loop : la.loops) {
        if (loop.contains(cs.block) && loop.depth > depth) {
          depth = loop.depth;
          innermost = loop.children.empty();
        }
      }
      cs.in_loop = depth > 0;
      cs.loop_depth = depth;
      cs.in_innermost_loop = innermost;
    }
  }

  IrModel model_;
  std::unordered_set<std::string> names_;
  std::optional<FunctionModel> fn_;
  std::size_t fn_line_ = 0;
  std::unordered_set<std::string> labels_;
  std::vector<PendingEdge> edge_lines_;
  bool block_open_ = false;
  std::size_t implicit_blocks_ = 0;
  std::string pending_;
  std::size_t pending_line_ = 0;
};

}  // namespace

IrModel parse_ir(std::string_view text, std::string module_name) {
  Parser p(std::move(module_name));
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    p.line(text.substr(pos, eol - pos), ++line_no);
    pos = eol + 1;
  }
  return p.finish(line_no);
}

IrModel parse_ir_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read IR file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_ir(buf.str(), path.filename().string());
}

}  // namespace phaseopt
