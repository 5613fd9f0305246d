// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <variant>

namespace phaseopt {

/// Predicted speedup relative to the baseline artifact; 1.0 is parity and
/// higher is better.
struct Score {
  double value = 0.0;
};

/// Result of scoring one candidate: a score, or a rejection with a reason.
/// A rejection removes the recipe from consideration; it is not an error.
class ScoreOutcome {
 public:
  static ScoreOutcome success(double value) { return ScoreOutcome(Score{value}); }
  static ScoreOutcome failed(std::string reason) {
    if (reason.empty()) reason = "failed";
    return ScoreOutcome(Failure{std::move(reason)});
  }

  bool ok() const noexcept { return std::holds_alternative<Score>(v_); }
  double value() const { return std::get<Score>(v_).value; }
  const std::string& reason() const { return std::get<Failure>(v_).reason; }

 private:
  struct Failure {
    std::string reason;
  };
  explicit ScoreOutcome(Score s) : v_(s) {}
  explicit ScoreOutcome(Failure f) : v_(std::move(f)) {}

  std::variant<Score, Failure> v_;
};

}  // namespace phaseopt
