// SPDX-License-Identifier: Apache-2.0
#include "phaseopt/cost.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "phaseopt/error.hpp"

namespace phaseopt {

std::string_view to_string(CostType t) {
  switch (t) {
    case CostType::IRAnalysis: return "ir-analysis";
    case CostType::MCA: return "mca";
    case CostType::InstCount: return "instcount";
    case CostType::FileSize: return "filesize";
  }
  return "unknown";
}

void HistoryBuffer::push(FeatureVector fv) {
  for (double v : fv.values) {
    if (!std::isfinite(v)) throw ConfigError("feature vector has a non-finite entry");
  }
  if (!window_.empty()) {
    const auto& ref = window_.front();
    if (ref.schema_id != fv.schema_id || ref.size() != fv.size()) {
      throw ConfigError("feature vector schema \"" + fv.schema_id + "\" (" +
                        std::to_string(fv.size()) + " values) does not match history schema \"" +
                        ref.schema_id + "\" (" + std::to_string(ref.size()) + " values)");
    }
  }
  window_.push_back(std::move(fv));
  if (window_.size() > kCapacity) window_.pop_front();
}

HistoryBuffer push_history(HistoryBuffer h, FeatureVector fv) {
  h.push(std::move(fv));
  return h;
}

FeatureVector aggregate_history(const HistoryBuffer& h) {
  if (h.empty()) throw Error("cannot aggregate an empty history");
  FeatureVector out;
  out.schema_id = h.window().front().schema_id;
  out.values.assign(h.window().front().size(), 0.0);
  for (const auto& fv : h.window()) {
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += fv.values[i];
  }
  const double n = static_cast<double>(h.size());
  for (double& v : out.values) v /= n;
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

void append_number(std::string& out, double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, r.ptr);
}

ScoreOutcome ratio_outcome(double baseline, double candidate, std::string_view what) {
  if (!(candidate > 0)) return ScoreOutcome::failed("candidate " + std::string(what) + " is zero");
  const double v = baseline / candidate;
  if (!std::isfinite(v) || !(v > 0)) return ScoreOutcome::failed("non-positive score");
  return ScoreOutcome::success(v);
}

std::optional<std::string> read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

ScoreOutcome score_external(const CommandTemplate& scorer, const HistoryBuffer& h,
                            const FeatureSchema& schema, std::chrono::milliseconds timeout,
                            const std::filesystem::path& candidate) {
  const FeatureVector agg = aggregate_history(h);
  if (agg.size() != schema.size()) {
    throw ConfigError("history has " + std::to_string(agg.size()) + " features, schema " +
                      schema.id() + " has " + std::to_string(schema.size()));
  }
  std::string input;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (i) input.push_back(',');
    input += schema.columns()[i].name;
  }
  input.push_back('\n');
  for (std::size_t i = 0; i < agg.size(); ++i) {
    if (i) input.push_back(',');
    append_number(input, agg.values[i]);
  }
  input.push_back('\n');

  const auto argv = scorer.render({{"input", candidate.string()}});
  const ProcessResult r = run_process(argv, input, timeout);
  if (r.timed_out) return ScoreOutcome::failed("timeout");
  if (!r.succeeded()) return ScoreOutcome::failed("scorer " + r.describe());
  const auto v = parse_double(r.out);
  if (!v || !std::isfinite(*v)) return ScoreOutcome::failed("unparseable");
  if (!(*v > 0)) return ScoreOutcome::failed("non-positive score");
  return ScoreOutcome::success(*v);
}

std::optional<std::size_t> count_instructions(const std::filesystem::path& ir) {
  const auto text = read_file(ir);
  if (!text) return std::nullopt;
  try {
    const IrModel m = parse_ir(*text, ir.filename().string());
    std::size_t n = 0;
    for (const auto& f : m.functions) n += f.instruction_count();
    return n;
  } catch (const ParseError&) {
    return std::nullopt;
  }
}

ScoreOutcome score_instcount(const std::filesystem::path& ir, std::size_t baseline_instcount) {
  if (baseline_instcount == 0) throw ConfigError("baseline instruction count must be positive");
  const auto n = count_instructions(ir);
  if (!n) return ScoreOutcome::failed("cannot parse " + ir.string());
  return ratio_outcome(static_cast<double>(baseline_instcount), static_cast<double>(*n),
                       "instruction count");
}

ScoreOutcome score_filesize(const std::filesystem::path& ir, std::uintmax_t baseline_bytes) {
  if (baseline_bytes == 0) throw ConfigError("baseline size must be positive");
  std::error_code ec;
  const auto size = std::filesystem::file_size(ir, ec);
  if (ec) return ScoreOutcome::failed("cannot stat " + ir.string());
  return ratio_outcome(static_cast<double>(baseline_bytes), static_cast<double>(size), "size");
}

std::optional<std::uint64_t> parse_cycle_count(std::string_view output, std::string_view prefix) {
  std::size_t pos = 0;
  while (pos < output.size()) {
    auto eol = output.find('\n', pos);
    if (eol == std::string_view::npos) eol = output.size();
    std::string_view line = trim(output.substr(pos, eol - pos));
    pos = eol + 1;
    if (!line.starts_with(prefix)) continue;
    const std::string_view rest = trim(line.substr(prefix.size()));
    std::uint64_t v = 0;
    const auto r = std::from_chars(rest.data(), rest.data() + rest.size(), v);
    if (r.ec != std::errc() || r.ptr == rest.data()) return std::nullopt;
    return v;
  }
  return std::nullopt;
}

namespace {

struct CycleRun {
  std::optional<std::uint64_t> cycles;
  std::string failure;
};

CycleRun run_mca(const CommandTemplate& mca, const std::filesystem::path& ir,
                 std::chrono::milliseconds timeout, std::string_view prefix) {
  const ProcessResult r = run_process(mca.render({{"input", ir.string()}}), {}, timeout);
  if (r.timed_out) return {std::nullopt, "timeout"};
  if (!r.succeeded()) return {std::nullopt, "cycle counter " + r.describe()};
  auto c = parse_cycle_count(r.out, prefix);
  if (!c) return {std::nullopt, "cycle count pattern \"" + std::string(prefix) + "\" not found"};
  return {c, {}};
}

}  // namespace

ScoreOutcome score_mca(const CommandTemplate& mca, const std::filesystem::path& ir,
                       std::uint64_t baseline_cycles, std::chrono::milliseconds timeout,
                       std::string_view prefix) {
  if (baseline_cycles == 0) throw ConfigError("baseline cycle count must be positive");
  const CycleRun run = run_mca(mca, ir, timeout, prefix);
  if (!run.cycles) return ScoreOutcome::failed(run.failure);
  return ratio_outcome(static_cast<double>(baseline_cycles), static_cast<double>(*run.cycles),
                       "cycle count");
}

LinearModel LinearModel::parse(std::string_view text, std::size_t features) {
  std::vector<double> numbers;
  std::size_t pos = 0, line_no = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    const auto v = parse_double(line);
    if (!v || !std::isfinite(*v)) {
      throw ConfigError("model line " + std::to_string(line_no) + ": not a finite number");
    }
    numbers.push_back(*v);
  }
  if (numbers.size() != features + 1) {
    throw ConfigError("model has " + std::to_string(numbers.size()) + " values, expected " +
                      std::to_string(features + 1) + " (bias + " + std::to_string(features) +
                      " weights)");
  }
  LinearModel m;
  m.bias = numbers.front();
  m.weights.assign(numbers.begin() + 1, numbers.end());
  return m;
}

LinearModel LinearModel::load(const std::filesystem::path& path, std::size_t features) {
  const auto text = read_file(path);
  if (!text) throw ConfigError("cannot read model file " + path.string());
  return parse(*text, features);
}

ScoreOutcome score_linear_model(const LinearModel& model, const HistoryBuffer& h, double floor) {
  const FeatureVector agg = aggregate_history(h);
  if (agg.size() != model.weights.size()) {
    throw ConfigError("model has " + std::to_string(model.weights.size()) +
                      " weights but the feature vector has " + std::to_string(agg.size()));
  }
  double v = model.bias;
  for (std::size_t i = 0; i < agg.size(); ++i) v += model.weights[i] * agg.values[i];
  if (!std::isfinite(v)) return ScoreOutcome::failed("non-finite model output");
  return ScoreOutcome::success(std::max(v, floor));
}

namespace {

void require_command(const CommandTemplate& cmd, std::string_view what) {
  if (cmd.empty()) throw ConfigError(std::string(what) + " command is empty");
  if (!command_exists(cmd.argv().front())) {
    throw InfraError(std::string(what) + " command \"" + cmd.argv().front() + "\" not found");
  }
}

class InstCountModel final : public CostModel {
 public:
  CostType type() const noexcept override { return CostType::InstCount; }
  ScoreOutcome score(const ScoringContext& ctx) const override {
    return score_instcount(ctx.candidate, ctx.baseline.instcount);
  }
};

class FileSizeModel final : public CostModel {
 public:
  CostType type() const noexcept override { return CostType::FileSize; }
  ScoreOutcome score(const ScoringContext& ctx) const override {
    return score_filesize(ctx.candidate, ctx.baseline.bytes);
  }
};

class McaModel final : public CostModel {
 public:
  McaModel(CommandTemplate cmd, std::string pattern, std::chrono::milliseconds timeout)
      : cmd_(std::move(cmd)), pattern_(std::move(pattern)), timeout_(timeout) {}
  CostType type() const noexcept override { return CostType::MCA; }
  bool needs_cycles() const noexcept override { return true; }
  ScoreOutcome score(const ScoringContext& ctx) const override {
    if (!ctx.baseline.cycles || *ctx.baseline.cycles == 0) {
      return ScoreOutcome::failed("no baseline cycle count");
    }
    return score_mca(cmd_, ctx.candidate, *ctx.baseline.cycles, timeout_, pattern_);
  }
  std::optional<std::uint64_t> measure_cycles(const std::filesystem::path& ir) const override {
    return run_mca(cmd_, ir, timeout_, pattern_).cycles;
  }

 private:
  CommandTemplate cmd_;
  std::string pattern_;
  std::chrono::milliseconds timeout_;
};

class ExternalScorerModel final : public CostModel {
 public:
  ExternalScorerModel(CommandTemplate cmd, const FeatureSchema& schema,
                      std::chrono::milliseconds timeout)
      : cmd_(std::move(cmd)), schema_(schema), timeout_(timeout) {}
  CostType type() const noexcept override { return CostType::IRAnalysis; }
  bool needs_features() const noexcept override { return true; }
  ScoreOutcome score(const ScoringContext& ctx) const override {
    return score_external(cmd_, *ctx.history, schema_, timeout_, ctx.candidate);
  }

 private:
  CommandTemplate cmd_;
  FeatureSchema schema_;
  std::chrono::milliseconds timeout_;
};

class LinearScorerModel final : public CostModel {
 public:
  LinearScorerModel(LinearModel model, double floor) : model_(std::move(model)), floor_(floor) {}
  CostType type() const noexcept override { return CostType::IRAnalysis; }
  bool needs_features() const noexcept override { return true; }
  ScoreOutcome score(const ScoringContext& ctx) const override {
    return score_linear_model(model_, *ctx.history, floor_);
  }

 private:
  LinearModel model_;
  double floor_;
};

}  // namespace

std::unique_ptr<CostModel> make_cost_model(const CostConfig& cfg, const FeatureSchema& schema) {
  if (!(cfg.score_floor > 0) || !std::isfinite(cfg.score_floor)) {
    throw ConfigError("score floor must be a positive number");
  }
  switch (cfg.type) {
    case CostType::InstCount: return std::make_unique<InstCountModel>();
    case CostType::FileSize: return std::make_unique<FileSizeModel>();
    case CostType::MCA: {
      if (cfg.mca_cmd.empty()) throw ConfigError("cost type mca needs --mca-cmd");
      auto cmd = CommandTemplate::parse(cfg.mca_cmd);
      if (cmd.count("input") == 0) throw ConfigError("--mca-cmd must contain {input}");
      if (cfg.mca_pattern.empty()) throw ConfigError("cycle count pattern is empty");
      require_command(cmd, "cycle count");
      return std::make_unique<McaModel>(std::move(cmd), cfg.mca_pattern, cfg.timeout);
    }
    case CostType::IRAnalysis: {
      if (!cfg.model_file.empty()) {
        return std::make_unique<LinearScorerModel>(LinearModel::load(cfg.model_file, schema.size()),
                                                   cfg.score_floor);
      }
      if (cfg.scorer_cmd.empty()) {
        throw ConfigError("cost type ir-analysis needs --scorer-cmd or --model-file");
      }
      auto cmd = CommandTemplate::parse(cfg.scorer_cmd);
      require_command(cmd, "scorer");
      return std::make_unique<ExternalScorerModel>(std::move(cmd), schema, cfg.timeout);
    }
  }
  throw ConfigError("unknown cost type");
}

}  // namespace phaseopt
