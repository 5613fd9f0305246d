// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace phaseopt {

// ---------------------------------------------------------------------------
// Structural model of a textual IR module
// ---------------------------------------------------------------------------
//
// The parser understands the subset of LLVM textual IR needed for static
// features:
//   * `define ... @name(...) ... {` ... `}` function bodies
//   * block labels `name:` or `%name:` at the start of a line
//   * one instruction per line with an optional `%x =` result; multi-line
//     `switch` tables are joined to their instruction
//   * `@name = ... global|constant ...` global variables
// Anything else at top level (declarations, types, metadata, attributes) is
// skipped. Unknown instructions inside a body are counted as generic
// instructions.

struct InstructionRecord {
  std::string opcode;
  std::string result;  // without the leading '%'; empty when unnamed
  std::string text;    // the instruction with comments stripped
  bool is_load = false;
  bool is_store = false;
  bool is_call = false;
  bool is_branch = false;
  bool is_vector = false;
  bool is_terminator = false;
  std::size_t operands = 0;
};

struct BasicBlock {
  std::string label;
  std::vector<InstructionRecord> instructions;
};

struct CallSite {
  std::string callee;  // without '@'; empty for indirect calls
  std::size_t block = 0;
  bool in_loop = false;
  std::size_t loop_depth = 0;
  bool in_innermost_loop = false;
  bool indirect = false;
  bool tail = false;
  bool must_tail = false;
  bool returns_pointer = false;
  bool result_used = false;
  std::size_t args = 0;
  std::size_t constant_args = 0;
};

struct FunctionModel {
  std::string name;
  std::string linkage;  // empty means external
  std::size_t pointer_params = 0;
  std::vector<BasicBlock> blocks;  // blocks.front() is the entry
  std::vector<std::pair<std::string, std::string>> edges;
  std::vector<CallSite> calls;

  /// Index of the block with `label`, if any.
  std::optional<std::size_t> block_index(std::string_view label) const;
  std::size_t instruction_count() const;
};

struct GlobalVariable {
  std::string name;
  bool is_constant = false;
};

struct IrModel {
  std::string module_name;
  std::vector<GlobalVariable> globals;
  std::vector<FunctionModel> functions;
  std::vector<std::string> declarations;

  const FunctionModel* find_function(std::string_view name) const;
};

/// Throws ParseError (with a line number) on unbalanced function braces,
/// duplicate block labels, duplicate function names, or branches to labels
/// that do not exist.
IrModel parse_ir(std::string_view text, std::string module_name = "");
IrModel parse_ir_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Loops
// ---------------------------------------------------------------------------

/// Constant-bound integer induction variable: `phi [C0, outside], [next,
/// inside]`, `next = add iv, STEP`, and a loop exit controlled by
/// `icmp PRED (iv|next), BOUND`.
struct InductionBounds {
  std::int64_t initial = 0;
  std::int64_t step = 0;
  std::int64_t final = 0;  // the compare bound
  std::uint64_t trip_count = 0;
};

struct LoopModel {
  std::string header;
  std::vector<std::size_t> blocks;  // block indices, ascending
  std::size_t depth = 1;
  std::optional<std::size_t> parent;  // index into the loop list
  std::vector<std::size_t> children;
  std::size_t induction_phis = 0;
  std::optional<InductionBounds> bounds;

  bool contains(std::size_t block) const;
};

/// Immediate dominators over the blocks reachable from the entry; unreachable
/// blocks have no entry. Also records the depth of each block in the tree.
struct DominatorTree {
  std::vector<std::optional<std::size_t>> idom;
  std::vector<std::size_t> depth;

  bool dominates(std::size_t a, std::size_t b) const;
  std::size_t max_depth() const;
};

DominatorTree compute_dominators(const FunctionModel& f);

struct LoopAnalysis {
  /// Ordered by the position of the header block in the function.
  std::vector<LoopModel> loops;
  /// Retreating edges whose target does not dominate the source.
  std::size_t irreducible_edges = 0;
};

/// Natural loops from back edges (edges whose target dominates the source);
/// back edges sharing a header form one loop. `instruction_visits`, when
/// given, is incremented for every instruction inspected while matching
/// induction variables.
LoopAnalysis detect_loops(const FunctionModel& f,
                          std::size_t* instruction_visits = nullptr);

// ---------------------------------------------------------------------------
// Feature schema and collection
// ---------------------------------------------------------------------------

enum class FeatureScope { Module, Function, CalleeCaller, Loop };
enum class ValueKind { Integer, Ratio };

std::string_view to_string(FeatureScope s);

struct FeatureColumn {
  std::string name;
  FeatureScope scope = FeatureScope::Module;
  ValueKind kind = ValueKind::Integer;
};

/// Ordered, uniquely named feature columns.
///
/// Schema file format: one column per line, `name scope [int|ratio]`, scope
/// one of module, function, callee-caller, loop; `#` comments.
class FeatureSchema {
 public:
  FeatureSchema(std::string id, std::vector<FeatureColumn> columns);

  /// The 141-column default feature set.
  static const FeatureSchema& default_schema();
  static FeatureSchema parse(std::string_view text, std::string id);
  static FeatureSchema load(const std::filesystem::path& path);

  const std::string& id() const noexcept { return id_; }
  const std::vector<FeatureColumn>& columns() const noexcept { return columns_; }
  std::size_t size() const noexcept { return columns_.size(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  std::size_t count(FeatureScope scope) const;

 private:
  std::string id_;
  std::vector<FeatureColumn> columns_;
};

struct FeatureVector {
  std::vector<double> values;
  std::string schema_id;

  std::size_t size() const noexcept { return values.size(); }
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct RowKey {
  std::string module;
  std::string function;
  std::string callee;
  std::string caller;
  std::string loop;

  friend bool operator==(const RowKey&, const RowKey&) = default;
};

/// One scope instance. Columns outside the row's scope, and columns the
/// parser subset cannot compute, hold 0 with computed[i] == false.
struct FeatureRow {
  RowKey key;
  FeatureScope scope = FeatureScope::Module;
  FeatureVector values;
  std::vector<bool> computed;
};

struct CollectStats {
  std::size_t instructions = 0;
  std::size_t instruction_visits = 0;
  std::size_t scope_groups = 4;
};

/// Rows in order: the module row; then per function either one row per loop
/// (`mod|fn|||header`) or, for loop-free functions, one function row
/// (`mod|fn|||`); then one callee/caller row per distinct call edge to a
/// function defined in the module (`mod|caller|callee|caller|`).
std::vector<FeatureRow> collect_features(const IrModel& model,
                                         const FeatureSchema& schema,
                                         CollectStats* stats = nullptr);

/// Feature CSV: a `Module|Function|Callee|Caller|Loop,<names...>` header and
/// one `key,values` line per row. Computed ratios print with 6 decimals,
/// computed integers bare, uncomputed columns as `0`.
std::string dump_features_csv(const std::vector<FeatureRow>& rows,
                              const FeatureSchema& schema);

/// Inverse of dump_features_csv. Throws ConfigError on malformed input.
std::vector<FeatureRow> parse_features_csv(std::string_view text,
                                           const FeatureSchema& schema);

/// The values of the module-scope row, i.e. the vector fed to cost models.
FeatureVector module_feature_vector(const IrModel& model,
                                    const FeatureSchema& schema);

/// 64-bit FNV-1a digest of the text with CRLF line endings normalized to LF.
std::uint64_t ir_fingerprint(std::string_view text);
std::string fingerprint_hex(std::uint64_t digest);

}  // namespace phaseopt
