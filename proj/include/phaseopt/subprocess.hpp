// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace phaseopt {

/// An argument vector with `{name}` placeholders, executed without a shell.
///
/// Parsed from one line of text: whitespace separates arguments, single or
/// double quotes group (quotes are removed, nothing else is interpreted).
/// Placeholders may sit inside a larger argument, e.g. `-passes={pipeline}`.
class CommandTemplate {
 public:
  CommandTemplate() = default;
  explicit CommandTemplate(std::vector<std::string> argv);
  static CommandTemplate parse(std::string_view text);

  const std::vector<std::string>& argv() const noexcept { return argv_; }
  bool empty() const noexcept { return argv_.empty(); }
  /// Occurrences of `{name}` over all arguments.
  std::size_t count(std::string_view name) const;
  /// Substitutes every `{key}`; unknown placeholders are left untouched.
  std::vector<std::string> render(const std::map<std::string, std::string>& values) const;
  std::string display() const;

 private:
  std::vector<std::string> argv_;
};

struct ProcessResult {
  int exit_code = -1;  // valid when signal == 0 and !timed_out
  int signal = 0;
  bool timed_out = false;
  std::string out;
  std::string err;

  bool succeeded() const noexcept { return !timed_out && signal == 0 && exit_code == 0; }
  std::string describe() const;
};

/// Runs argv[0] (looked up on PATH) in its own process group, feeds
/// `input` to its stdin, and captures stdout/stderr. On timeout the whole
/// group is killed with SIGKILL. Throws InfraError when the process cannot be
/// spawned at all.
ProcessResult run_process(const std::vector<std::string>& argv, std::string_view input,
                          std::chrono::milliseconds timeout);

/// True when `name` is an existing executable path or is found on PATH.
bool command_exists(std::string_view name);

/// Number of processes spawned by run_process in this process so far.
std::uint64_t spawn_count() noexcept;

}  // namespace phaseopt
