// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "phaseopt/rng.hpp"

namespace phaseopt {

/// A named optimization subsequence: one uppercase letter mapped to the pass
/// pipeline text handed verbatim to the external optimizer.
struct Subsequence {
  char id;
  std::string pipeline;
};

/// Ordered set of subsequences a recipe draws its genes from.
///
/// File format: one record per line, `ID<TAB>pipeline`. Lines starting with
/// `#` and blank lines are ignored. IDs are single characters A-Z and must be
/// unique; pipelines must be non-empty.
class SubsequenceLibrary {
 public:
  SubsequenceLibrary() = default;
  SubsequenceLibrary(std::string name, std::vector<Subsequence> entries);

  static SubsequenceLibrary parse(std::string_view text, std::string name);
  static SubsequenceLibrary load(const std::filesystem::path& path);

  const std::string& name() const noexcept { return name_; }
  const std::vector<Subsequence>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  /// Pipeline text for `id`, or nullptr when the id is not in the library.
  const std::string* find(char id) const noexcept;

  /// The ids in library order, e.g. "ABCDE".
  std::string ids() const;

 private:
  std::string name_;
  std::vector<Subsequence> entries_;
};

/// An ordered sequence of subsequence ids; repetition is allowed.
class Recipe {
 public:
  Recipe() = default;
  explicit Recipe(std::string genes) : genes_(std::move(genes)) {}

  const std::string& genes() const noexcept { return genes_; }
  std::string& genes() noexcept { return genes_; }
  std::size_t size() const noexcept { return genes_.size(); }
  bool empty() const noexcept { return genes_.empty(); }
  char operator[](std::size_t i) const { return genes_[i]; }

  friend bool operator==(const Recipe&, const Recipe&) = default;
  friend auto operator<=>(const Recipe&, const Recipe&) = default;

 private:
  std::string genes_;
};

/// Search-space shape: the gene alphabet (n = alphabet.size()) and the
/// maximum recipe length m.
struct SpaceConfig {
  std::string alphabet;
  std::size_t max_length = 5;

  /// Alphabet "A", "AB", ... of n letters.
  static SpaceConfig letters(std::size_t n, std::size_t max_length);
  static SpaceConfig of(const SubsequenceLibrary& lib, std::size_t max_length);

  std::size_t num_subsequences() const noexcept { return alphabet.size(); }
  void validate() const;
};

/// Number of recipes of length 0..m over n genes: sum of n^i. Throws
/// std::overflow_error when the sum does not fit in 64 bits.
std::uint64_t space_size(std::uint64_t n, std::uint64_t m);
std::uint64_t space_size(const SpaceConfig& cfg);

/// Comma-joined pipeline text of every gene. Throws ConfigError naming the
/// first gene that is not in the library and its position.
std::string expand_recipe(const Recipe& r, const SubsequenceLibrary& lib);

/// Throws ConfigError unless every gene resolves and the length is <= max.
void validate_recipe(const Recipe& r, const SpaceConfig& cfg);

/// Each library id once, in library order, truncated to max_length.
Recipe canonical_recipe(const SubsequenceLibrary& lib, std::size_t max_length);
Recipe canonical_recipe(const SpaceConfig& cfg);

Recipe random_recipe(const SpaceConfig& cfg, Rng& rng);

/// One local edit. With n genes there are n + 2 equally likely moves: write
/// one of the n genes at a random position, append a random gene, or delete a
/// random position. Appending at max length degrades to an overwrite;
/// deleting from an empty recipe degrades to an append.
Recipe mutate_flip_one(const Recipe& r, const SpaceConfig& cfg, Rng& rng);

/// Exchanges two distinct random positions. Recipes shorter than 2 are
/// returned unchanged.
Recipe mutate_swap_two(const Recipe& r, Rng& rng);

/// Applies mutate_flip_one k = max(1, round(m * temperature / t_max)) times.
Recipe neighbor(const Recipe& r, const SpaceConfig& cfg, double temperature,
                double t_max, Rng& rng);

/// Number of flips neighbor() applies.
std::size_t neighbor_flip_count(std::size_t max_length, double temperature,
                                double t_max);

inline constexpr std::uint64_t kDefaultEnumerationCap = 100000;

/// Streams every recipe of the space once, shortest first and
/// lexicographically (by alphabet order) within a length.
class SpaceEnumerator {
 public:
  explicit SpaceEnumerator(SpaceConfig cfg,
                           std::uint64_t cap = kDefaultEnumerationCap);

  std::optional<Recipe> next();

 private:
  SpaceConfig cfg_;
  std::vector<std::size_t> digits_;
  bool started_ = false;
  bool done_ = false;
};

std::vector<Recipe> enumerate_space(const SpaceConfig& cfg,
                                    std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace phaseopt

template <>
struct std::hash<phaseopt::Recipe> {
  std::size_t operator()(const phaseopt::Recipe& r) const noexcept {
    return std::hash<std::string>{}(r.genes());
  }
};
