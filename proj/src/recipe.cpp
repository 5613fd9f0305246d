// SPDX-License-Identifier: Apache-2.0
#include "phaseopt/recipe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "phaseopt/error.hpp"

namespace phaseopt {

SubsequenceLibrary::SubsequenceLibrary(std::string name,
                                       std::vector<Subsequence> entries)
    : name_(std::move(name)), entries_(std::move(entries)) {
  std::unordered_set<char> seen;
  for (const auto& e : entries_) {
    if (e.id < 'A' || e.id > 'Z') {
      throw ConfigError("subsequence id must be a letter A-Z, got '" +
                        std::string(1, e.id) + "'");
    }
    if (!seen.insert(e.id).second) {
      throw ConfigError("duplicate subsequence id '" + std::string(1, e.id) +
                        "'");
    }
    if (e.pipeline.empty()) {
      throw ConfigError("empty pipeline for subsequence '" +
                        std::string(1, e.id) + "'");
    }
    if (e.pipeline.find_first_of("\r\n") != std::string::npos) {
      throw ConfigError("pipeline for subsequence '" + std::string(1, e.id) +
                        "' contains a newline");
    }
  }
}

SubsequenceLibrary SubsequenceLibrary::parse(std::string_view text,
                                             std::string name) {
  std::vector<Subsequence> entries;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw ConfigError(name + ":" + std::to_string(line_no) +
                        ": expected ID<TAB>pipeline");
    }
    if (tab != 1) {
      throw ConfigError(name + ":" + std::to_string(line_no) +
                        ": subsequence id must be a single character");
    }
    try {
      entries.push_back({line[0], std::string(line.substr(tab + 1))});
      // Validate incrementally so the error carries the line number.
      SubsequenceLibrary probe(name, entries);
    } catch (const ConfigError& e) {
      throw ConfigError(name + ":" + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  return SubsequenceLibrary(std::move(name), std::move(entries));
}

SubsequenceLibrary SubsequenceLibrary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read subsequence library " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path.string());
}

const std::string* SubsequenceLibrary::find(char id) const noexcept {
  for (const auto& e : entries_) {
    if (e.id == id) return &e.pipeline;
  }
  return nullptr;
}

std::string SubsequenceLibrary::ids() const {
  std::string out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.id);
  return out;
}

SpaceConfig SpaceConfig::letters(std::size_t n, std::size_t max_length) {
  if (n > 26) throw ConfigError("at most 26 subsequences are supported");
  SpaceConfig cfg;
  for (std::size_t i = 0; i < n; ++i) cfg.alphabet.push_back(char('A' + i));
  cfg.max_length = max_length;
  return cfg;
}

SpaceConfig SpaceConfig::of(const SubsequenceLibrary& lib,
                            std::size_t max_length) {
  return SpaceConfig{lib.ids(), max_length};
}

void SpaceConfig::validate() const {
  if (alphabet.empty()) throw ConfigError("search space needs at least one subsequence");
}

std::uint64_t space_size(std::uint64_t n, std::uint64_t m) {
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t total = 1;
  std::uint64_t term = 1;
  for (std::uint64_t i = 1; i <= m; ++i) {
    if (n != 0 && term > kMax / n) {
      throw std::overflow_error("search space size overflows 64 bits");
    }
    term *= n;
    if (total > kMax - term) {
      throw std::overflow_error("search space size overflows 64 bits");
    }
    total += term;
  }
  return total;
}

std::uint64_t space_size(const SpaceConfig& cfg) {
  return space_size(cfg.num_subsequences(), cfg.max_length);
}

std::string expand_recipe(const Recipe& r, const SubsequenceLibrary& lib) {
  std::string out;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const std::string* text = lib.find(r[i]);
    if (text == nullptr) {
      throw ConfigError("unknown subsequence '" + std::string(1, r[i]) +
                        "' at position " + std::to_string(i) + " of recipe \"" +
                        r.genes() + "\"");
    }
    if (i != 0) out.push_back(',');
    out += *text;
  }
  return out;
}

void validate_recipe(const Recipe& r, const SpaceConfig& cfg) {
  if (r.size() > cfg.max_length) {
    throw ConfigError("recipe \"" + r.genes() + "\" exceeds max length " +
                      std::to_string(cfg.max_length));
  }
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (cfg.alphabet.find(r[i]) == std::string::npos) {
      throw ConfigError("unknown subsequence '" + std::string(1, r[i]) +
                        "' at position " + std::to_string(i));
    }
  }
}

Recipe canonical_recipe(const SubsequenceLibrary& lib, std::size_t max_length) {
  std::string ids = lib.ids();
  if (ids.size() > max_length) ids.resize(max_length);
  return Recipe(std::move(ids));
}

Recipe canonical_recipe(const SpaceConfig& cfg) {
  return Recipe(cfg.alphabet.substr(0, cfg.max_length));
}

Recipe random_recipe(const SpaceConfig& cfg, Rng& rng) {
  const std::size_t len = rng.index(cfg.max_length + 1);
  std::string genes(len, ' ');
  for (auto& g : genes) g = cfg.alphabet[rng.index(cfg.alphabet.size())];
  return Recipe(std::move(genes));
}

Recipe mutate_flip_one(const Recipe& r, const SpaceConfig& cfg, Rng& rng) {
  const std::size_t n = cfg.alphabet.size();
  if (cfg.max_length == 0) return Recipe();

  std::string genes = r.genes();
  auto random_gene = [&] { return cfg.alphabet[rng.index(n)]; };

  if (genes.empty()) {
    genes.push_back(random_gene());
    return Recipe(std::move(genes));
  }

  const std::size_t move = rng.index(n + 2);
  if (move < n) {
    genes[rng.index(genes.size())] = cfg.alphabet[move];
  } else if (move == n) {
    if (genes.size() < cfg.max_length) {
      genes.push_back(random_gene());
    } else {
      genes[rng.index(genes.size())] = random_gene();
    }
  } else {
    genes.erase(rng.index(genes.size()), 1);
  }
  return Recipe(std::move(genes));
}

Recipe mutate_swap_two(const Recipe& r, Rng& rng) {
  if (r.size() < 2) return r;
  std::string genes = r.genes();
  const std::size_t i = rng.index(genes.size());
  std::size_t j = rng.index(genes.size() - 1);
  if (j >= i) ++j;
  std::swap(genes[i], genes[j]);
  return Recipe(std::move(genes));
}

std::size_t neighbor_flip_count(std::size_t max_length, double temperature,
                                double t_max) {
  const double scaled =
      t_max > 0 ? static_cast<double>(max_length) * temperature / t_max : 0.0;
  const auto k = static_cast<std::size_t>(std::llround(std::max(0.0, scaled)));
  return std::max<std::size_t>(1, k);
}

Recipe neighbor(const Recipe& r, const SpaceConfig& cfg, double temperature,
                double t_max, Rng& rng) {
  Recipe out = r;
  const std::size_t k = neighbor_flip_count(cfg.max_length, temperature, t_max);
  for (std::size_t i = 0; i < k; ++i) out = mutate_flip_one(out, cfg, rng);
  return out;
}

SpaceEnumerator::SpaceEnumerator(SpaceConfig cfg, std::uint64_t cap)
    : cfg_(std::move(cfg)) {
  cfg_.validate();
  std::uint64_t size = 0;
  try {
    size = space_size(cfg_);
  } catch (const std::overflow_error&) {
    size = std::numeric_limits<std::uint64_t>::max();
  }
  if (size > cap) {
    throw ConfigError("search space of " + std::to_string(size) +
                      " recipes exceeds the enumeration cap of " +
                      std::to_string(cap));
  }
}

std::optional<Recipe> SpaceEnumerator::next() {
  if (done_) return std::nullopt;
  if (!started_) {
    started_ = true;
    return Recipe();
  }
  // Odometer increment over the current length; roll over to the next length.
  const std::size_t n = cfg_.alphabet.size();
  std::size_t i = digits_.size();
  while (i > 0) {
    --i;
    if (++digits_[i] < n) break;
    digits_[i] = 0;
    if (i == 0) {
      digits_.push_back(0);
      std::fill(digits_.begin(), digits_.end(), 0);
      break;
    }
  }
  if (digits_.empty()) digits_.push_back(0);
  if (digits_.size() > cfg_.max_length) {
    done_ = true;
    return std::nullopt;
  }
  std::string genes;
  genes.reserve(digits_.size());
  for (auto d : digits_) genes.push_back(cfg_.alphabet[d]);
  return Recipe(std::move(genes));
}

std::vector<Recipe> enumerate_space(const SpaceConfig& cfg, std::uint64_t cap) {
  SpaceEnumerator it(cfg, cap);
  std::vector<Recipe> out;
  while (auto r = it.next()) out.push_back(std::move(*r));
  return out;
}

}  // namespace phaseopt
