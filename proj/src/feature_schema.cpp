// SPDX-License-Identifier: Apache-2.0
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "phaseopt/error.hpp"
#include "phaseopt/features.hpp"

namespace phaseopt {

std::string_view to_string(FeatureScope s) {
  switch (s) {
    case FeatureScope::Module: return "module";
    case FeatureScope::Function: return "function";
    case FeatureScope::CalleeCaller: return "callee-caller";
    case FeatureScope::Loop: return "loop";
  }
  return "unknown";
}

FeatureSchema::FeatureSchema(std::string id, std::vector<FeatureColumn> columns)
    : id_(std::move(id)), columns_(std::move(columns)) {
  std::unordered_set<std::string> seen;
  for (const auto& c : columns_) {
    if (c.name.empty()) throw ConfigError("feature schema has an empty column name");
    if (c.name.find_first_of(",|\r\n \t") != std::string::npos) {
      throw ConfigError("feature column name \"" + c.name +
                        "\" contains a separator character");
    }
    if (!seen.insert(c.name).second) {
      throw ConfigError("duplicate feature column \"" + c.name + "\"");
    }
  }
}

namespace {

constexpr auto M = FeatureScope::Module;
constexpr auto C = FeatureScope::CalleeCaller;
constexpr auto L = FeatureScope::Loop;
constexpr auto I = ValueKind::Integer;
constexpr auto R = ValueKind::Ratio;

struct ColumnSpec {
  const char* name;
  FeatureScope scope;
  ValueKind kind;
};

// Header order of the reference dump.
constexpr ColumnSpec kDefaultColumns[] = {
    {"average-store-instructions-per-function", M, R},
    {"average-load-instructions-per-function", M, R},
    {"average-instructions-per-function", M, R},
    {"global-variable-count", M, I},
    {"critical-edge-count", M, I},
    {"total-edge-count", M, I},
    {"loop-count", M, I},
    {"median-calls-per-function", M, I},
    {"average-calls-per-function", M, R},
    {"total-function-calls", M, I},
    {"total-instruction-count", M, I},
    {"average-bb-per-function", M, R},
    {"total-bb-count", M, I},
    {"function-count", M, I},
    {"node-count", M, I},
    {"edge-count", M, I},
    {"is-tail", C, I},
    {"is-must-tail", C, I},
    {"is-in-inner-loop", C, I},
    {"is-indirect", C, I},
    {"opt-code", C, I},
    {"mandatory-only", C, I},
    {"mandatory-kind", C, I},
    {"loop-level", C, I},
    {"cost-estimate", C, I},
    {"nr-ctant-params", C, I},
    {"callsite-height", C, I},
    {"block-freq", C, I},
    {"callee-BlockWithMultipleSuccessorsPerLoop", C, R},
    {"caller-BlockWithMultipleSuccessorsPerLoop", C, R},
    {"callee-InstrPerLoop", C, R},
    {"caller-InstrPerLoop", C, R},
    {"callee-AvgNestedLoopLevel", C, R},
    {"caller-AvgNestedLoopLevel", C, R},
    {"callee-AvgVecInstr", C, R},
    {"caller-AvgVecInstr", C, R},
    {"callee-SuccessorPerBlock", C, R},
    {"caller-SuccessorPerBlock", C, R},
    {"callee-InstructionPerBlock", C, R},
    {"caller-InstructionPerBlock", C, R},
    {"callee-MaxCallsiteBlockFreq", C, I},
    {"caller-MaxCallsiteBlockFreq", C, I},
    {"callee-EntryBlockFreq", C, I},
    {"caller-EntryBlockFreq", C, I},
    {"callee-NumOfCallUsesInLoop", C, I},
    {"caller-NumOfCallUsesInLoop", C, I},
    {"callee-NumCallsiteInLoop", C, I},
    {"caller-NumCallsiteInLoop", C, I},
    {"callee-IsRecursive", C, I},
    {"caller-IsRecursive", C, I},
    {"callee-CallUsage", C, I},
    {"caller-CallUsage", C, I},
    {"callee-CallerHeight", C, I},
    {"caller-CallerHeight", C, I},
    {"callee-CBwithArg", C, I},
    {"caller-CBwithArg", C, I},
    {"callee-ConditionalBranch", C, I},
    {"caller-ConditionalBranch", C, I},
    {"callee-CallReturnPtr", C, I},
    {"caller-CallReturnPtr", C, I},
    {"callee-PtrCallee", C, I},
    {"caller-PtrCallee", C, I},
    {"callee-PtrArgs", C, I},
    {"caller-PtrArgs", C, I},
    {"callee-MaxDomTreeLevel", C, I},
    {"caller-MaxDomTreeLevel", C, I},
    {"callee-MaxLoopDepth", C, I},
    {"caller-MaxLoopDepth", C, I},
    {"callee-Loops", C, I},
    {"caller-Loops", C, I},
    {"callee-IsLinkOnce", C, I},
    {"caller-IsLinkOnce", C, I},
    {"callee-IsLinkOnceODR", C, I},
    {"caller-IsLinkOnceODR", C, I},
    {"callee-IsLocal", C, I},
    {"caller-IsLocal", C, I},
    {"callee-Calls", C, I},
    {"caller-Calls", C, I},
    {"callee-Blocks", C, I},
    {"caller-Blocks", C, I},
    {"callee-InitialSize", C, I},
    {"caller-InitialSize", C, I},
    {"hot-callsite", C, I},
    {"cold-callsite", C, I},
    {"callee-users", C, I},
    {"caller-users", C, I},
    {"callee-conditionally-executed-blocks", C, I},
    {"caller-conditionally-executed-blocks", C, I},
    {"callee-basic-block-count", C, I},
    {"caller-basic-block-count", C, I},
    {"nested-inline-cost-estimate", C, I},
    {"nested-inlines", C, I},
    {"is-multiple-blocks", C, I},
    {"last-call-to-static-bonus", C, I},
    {"cold-cc-penalty", C, I},
    {"callsite-cost", C, I},
    {"constant-offset-ptr-args", C, I},
    {"constant-args", C, I},
    {"simplified-instructions", C, I},
    {"dead-blocks", C, I},
    {"num-loops", C, I},
    {"unsimplified-common-instructions", C, I},
    {"switch-default-dest-penalty", C, I},
    {"switch-penalty", C, I},
    {"case-cluster-penalty", C, I},
    {"jump-table-penalty", C, I},
    {"indirect-call-penalty", C, I},
    {"lowered-call-arg-setup", C, I},
    {"load-relative-intrinsic", C, I},
    {"call-argument-setup", C, I},
    {"call-penalty", C, I},
    {"load-elimination", C, I},
    {"callee-average-component-size", C, R},
    {"caller-average-component-size", C, R},
    {"sroa-losses", C, I},
    {"callee-scc-size", C, I},
    {"caller-scc-size", C, I},
    {"sroa-savings", C, I},
    {"IsFixedTripCount", L, I},
    {"MaxLoopHeight", L, I},
    {"IsOuterMostLoop", L, I},
    {"IsInnerMostLoop", L, I},
    {"TotBlocksPerLoop", L, I},
    {"AvgNumLoadInstPerLoop", L, R},
    {"TotLoopInstCount", L, I},
    {"NumStoreInstPerLoop", L, I},
    {"NumLoadInstPerLoop", L, I},
    {"AvgNumLoadInstPerLoopNest", L, R},
    {"TotLoopNestInstCount", L, I},
    {"NumStoreInstPerLoopNest", L, I},
    {"NumLoadInstPerLoopNest", L, I},
    {"AvgNumInsts", L, R},
    {"AvgStoreSetSize", L, R},
    {"IndVarSetSize", L, I},
    {"NumPartitions", L, I},
    {"StepValueInt", L, I},
    {"FinalIVValueInt", L, I},
    {"InitialIVValueInt", L, I},
    {"Size", L, I},
    {"MaxTripCount", L, I},
    {"TripCount", L, I},
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = s.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
}

std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    pos = eol + 1;
  }
  return out;
}

constexpr std::string_view kKeyHeader = "Module|Function|Callee|Caller|Loop";

}  // namespace

const FeatureSchema& FeatureSchema::default_schema() {
  static const FeatureSchema schema = [] {
    std::vector<FeatureColumn> cols;
    for (const auto& c : kDefaultColumns) cols.push_back({c.name, c.scope, c.kind});
    return FeatureSchema("pfs-141", std::move(cols));
  }();
  return schema;
}

FeatureSchema FeatureSchema::parse(std::string_view text, std::string id) {
  std::vector<FeatureColumn> cols;
  std::size_t line_no = 0;
  for (std::string_view raw : lines_of(text)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    std::istringstream in{std::string(trim(raw))};
    std::string name, scope, kind, extra;
    if (!(in >> name)) continue;
    auto fail = [&](const std::string& msg) {
      throw ConfigError(id + ":" + std::to_string(line_no) + ": " + msg);
    };
    if (!(in >> scope)) fail("expected `name scope [int|ratio]`");
    FeatureColumn col;
    col.name = name;
    if (scope == "module") col.scope = FeatureScope::Module;
    else if (scope == "function") col.scope = FeatureScope::Function;
    else if (scope == "callee-caller") col.scope = FeatureScope::CalleeCaller;
    else if (scope == "loop") col.scope = FeatureScope::Loop;
    else fail("unknown scope \"" + scope + "\" (module, function, callee-caller, loop)");
    if (in >> kind) {
      if (kind == "int") col.kind = ValueKind::Integer;
      else if (kind == "ratio") col.kind = ValueKind::Ratio;
      else fail("unknown value kind \"" + kind + "\" (int, ratio)");
    }
    if (in >> extra) fail("unexpected token \"" + extra + "\"");
    cols.push_back(std::move(col));
    try {
      FeatureSchema probe(id, cols);
    } catch (const ConfigError& e) {
      fail(e.what());
    }
  }
  if (cols.empty()) throw ConfigError(id + ": feature schema has no columns");
  return FeatureSchema(std::move(id), std::move(cols));
}

FeatureSchema FeatureSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read feature schema " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (columns_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t FeatureSchema::count(FeatureScope scope) const {
  std::size_t n = 0;
  for (const auto& c : columns_) n += c.scope == scope;
  return n;
}

namespace {

void append_value(std::string& out, double v, bool computed, ValueKind kind) {
  if (!computed) {
    out += '0';
    return;
  }
  char buf[64];
  if (kind == ValueKind::Ratio) {
    std::snprintf(buf, sizeof buf, "%.6f", v);
    out += buf;
  } else {
    const auto r = std::to_chars(buf, buf + sizeof buf, std::llround(v));
    out.append(buf, r.ptr);
  }
}

}  // namespace

std::string dump_features_csv(const std::vector<FeatureRow>& rows,
                              const FeatureSchema& schema) {
  std::string out(kKeyHeader);
  for (const auto& c : schema.columns()) {
    out += ',';
    out += c.name;
  }
  out += '\n';
  for (const auto& row : rows) {
    const auto& k = row.key;
    out += k.module + '|' + k.function + '|' + k.callee + '|' + k.caller + '|' + k.loop;
    for (std::size_t i = 0; i < schema.size(); ++i) {
      out += ',';
      const bool computed = i < row.computed.size() && row.computed[i];
      const double v = i < row.values.size() ? row.values.values[i] : 0.0;
      append_value(out, v, computed, schema.columns()[i].kind);
    }
    out += '\n';
  }
  return out;
}

std::vector<FeatureRow> parse_features_csv(std::string_view text,
                                           const FeatureSchema& schema) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw ConfigError("feature CSV is empty");
  const auto header = split(lines[0], ',');
  if (header.size() != schema.size() + 1 || header[0] != kKeyHeader) {
    throw ConfigError("feature CSV header does not match schema " + schema.id());
  }
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (header[i + 1] != schema.columns()[i].name) {
      throw ConfigError("feature CSV column " + std::to_string(i + 1) + " is \"" +
                        std::string(header[i + 1]) + "\", expected \"" +
                        schema.columns()[i].name + "\"");
    }
  }

  std::vector<FeatureRow> rows;
  for (std::size_t ln = 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    const auto fail = [&](const std::string& msg) {
      throw ConfigError("feature CSV line " + std::to_string(ln + 1) + ": " + msg);
    };
    const auto fields = split(lines[ln], ',');
    if (fields.size() != schema.size() + 1) {
      fail("expected " + std::to_string(schema.size() + 1) + " fields, got " +
           std::to_string(fields.size()));
    }
    const auto key = split(fields[0], '|');
    if (key.size() != 5) fail("scope key must have 5 components");

    FeatureRow row;
    row.key = {std::string(key[0]), std::string(key[1]), std::string(key[2]),
               std::string(key[3]), std::string(key[4])};
    if (!row.key.loop.empty()) row.scope = FeatureScope::Loop;
    else if (!row.key.callee.empty()) row.scope = FeatureScope::CalleeCaller;
    else if (!row.key.function.empty()) row.scope = FeatureScope::Function;
    else row.scope = FeatureScope::Module;

    row.values.schema_id = schema.id();
    row.values.values.resize(schema.size());
    row.computed.resize(schema.size());
    for (std::size_t i = 0; i < schema.size(); ++i) {
      const std::string_view f = fields[i + 1];
      double v = 0;
      const auto r = std::from_chars(f.data(), f.data() + f.size(), v);
      if (r.ec != std::errc() || r.ptr != f.data() + f.size() || !std::isfinite(v)) {
        fail("bad value \"" + std::string(f) + "\" in column " +
             schema.columns()[i].name);
      }
      row.values.values[i] = v;
      // A bare 0 is indistinguishable from an uncomputed column; both dump
      // the same way.
      row.computed[i] = f != "0";
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::uint64_t ir_fingerprint(std::string_view text) {
  constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;
  constexpr std::uint64_t kPrime = 0x100000001b3ULL;
  std::uint64_t h = kOffset;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\r' && i + 1 < text.size() && text[i + 1] == '\n') continue;
    h ^= static_cast<unsigned char>(text[i]);
    h *= kPrime;
  }
  return h;
}

std::string fingerprint_hex(std::uint64_t digest) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(digest));
  return buf;
}

}  // namespace phaseopt
