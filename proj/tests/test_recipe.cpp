// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "phaseopt/error.hpp"
#include "phaseopt/recipe.hpp"

using namespace phaseopt;

namespace {

SubsequenceLibrary small_lib() {
  return SubsequenceLibrary::parse("# comment\nA\tinline\n\nB\tgvn,sccp\nC\tloop(licm)\n", "small");
}

std::uint64_t brute_force_size(std::uint64_t n, std::uint64_t m) {
  std::uint64_t total = 0;
  for (std::uint64_t len = 0; len <= m; ++len) {
    std::uint64_t p = 1;
    for (std::uint64_t i = 0; i < len; ++i) p *= n;
    total += p;
  }
  return total;
}

}  // namespace

TEST(SubsequenceLibrary, ParsesTabSeparatedRecords) {
  const auto lib = small_lib();
  EXPECT_EQ(lib.size(), 3u);
  EXPECT_EQ(lib.ids(), "ABC");
  ASSERT_NE(lib.find('B'), nullptr);
  EXPECT_EQ(*lib.find('B'), "gvn,sccp");
  EXPECT_EQ(lib.find('Z'), nullptr);
}

TEST(SubsequenceLibrary, RejectsDuplicatesAndEmptyPipelines) {
  EXPECT_THROW(SubsequenceLibrary::parse("A\tx\nA\ty\n", "dup"), ConfigError);
  EXPECT_THROW(SubsequenceLibrary::parse("A\t\n", "empty"), ConfigError);
  EXPECT_THROW(SubsequenceLibrary::parse("a\tx\n", "lower"), ConfigError);
  EXPECT_THROW(SubsequenceLibrary::parse("A x\n", "no-tab"), ConfigError);
}

TEST(SubsequenceLibrary, ShippedLibrariesHaveFiveEntries) {
  for (const char* name : {"subsequences_default.tsv", "subsequences_portable.tsv"}) {
    const auto lib = SubsequenceLibrary::load(std::filesystem::path(PHASEOPT_DATA_DIR) / name);
    EXPECT_EQ(lib.ids(), "ABCDE") << name;
  }
}

TEST(SubsequenceLibrary, PortableLibraryDropsVendorPasses) {
  const auto lib =
      SubsequenceLibrary::load(std::filesystem::path(PHASEOPT_DATA_DIR) / "subsequences_portable.tsv");
  for (const auto& e : lib.entries()) {
    for (const char* vendor : {"crypto", "hash-data-prefetch", "ir-library-injection"}) {
      EXPECT_EQ(e.pipeline.find(vendor), std::string::npos) << e.id << " contains " << vendor;
    }
    int depth = 0;
    for (char c : e.pipeline) {
      if (c == '(') ++depth;
      if (c == ')') --depth;
      ASSERT_GE(depth, 0) << e.id;
    }
    EXPECT_EQ(depth, 0) << e.id;
  }
}

TEST(SpaceSize, MatchesBruteForceSum) {
  for (std::uint64_t n = 1; n <= 6; ++n) {
    for (std::uint64_t m = 0; m <= 7; ++m) {
      EXPECT_EQ(space_size(n, m), brute_force_size(n, m)) << n << "," << m;
    }
  }
}

TEST(SpaceSize, TableValues) {
  EXPECT_EQ(space_size(5, 3), 156u);
  EXPECT_EQ(space_size(5, 4), 781u);
  EXPECT_EQ(space_size(5, 5), 3906u);
  EXPECT_EQ(space_size(5, 6), 19531u);
  EXPECT_EQ(space_size(5, 7), 97656u);
}

TEST(SpaceSize, DegenerateAndOverflow) {
  EXPECT_EQ(space_size(0, 4), 1u);
  EXPECT_EQ(space_size(1, 4), 5u);
  EXPECT_EQ(space_size(5, 0), 1u);
  EXPECT_THROW(space_size(26, 40), std::overflow_error);
}

TEST(Recipe, ExpandJoinsPipelines) {
  const auto lib = small_lib();
  EXPECT_EQ(expand_recipe(Recipe("BA"), lib), "gvn,sccp,inline");
  EXPECT_EQ(expand_recipe(Recipe("CC"), lib), "loop(licm),loop(licm)");
  EXPECT_EQ(expand_recipe(Recipe(""), lib), "");
}

TEST(Recipe, ExpandNamesUnknownGene) {
  try {
    expand_recipe(Recipe("AQ"), small_lib());
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find('Q'), std::string::npos);
  }
}

TEST(Recipe, ValidateChecksLengthAndGenes) {
  const auto space = SpaceConfig::of(small_lib(), 3);
  EXPECT_NO_THROW(validate_recipe(Recipe("ABC"), space));
  EXPECT_THROW(validate_recipe(Recipe("ABCA"), space), ConfigError);
  EXPECT_THROW(validate_recipe(Recipe("AX"), space), ConfigError);
}

TEST(Recipe, CanonicalIsLibraryOrderTruncated) {
  const auto lib = small_lib();
  EXPECT_EQ(canonical_recipe(lib, 5).genes(), "ABC");
  EXPECT_EQ(canonical_recipe(lib, 2).genes(), "AB");
}

TEST(Recipe, RandomRecipesStayInSpace) {
  const auto space = SpaceConfig::letters(5, 4);
  Rng rng(7);
  std::set<std::size_t> lengths;
  for (int i = 0; i < 2000; ++i) {
    const auto r = random_recipe(space, rng);
    EXPECT_NO_THROW(validate_recipe(r, space));
    lengths.insert(r.size());
  }
  EXPECT_EQ(lengths.size(), 5u);
}

TEST(Recipe, FlipOneIsOneEdit) {
  const auto space = SpaceConfig::letters(5, 5);
  Rng rng(11);
  Recipe r("ABCD");
  for (int i = 0; i < 500; ++i) {
    const auto n = mutate_flip_one(r, space, rng);
    EXPECT_NO_THROW(validate_recipe(n, space));
    const auto diff = static_cast<long>(n.size()) - static_cast<long>(r.size());
    EXPECT_LE(std::abs(diff), 1);
    r = n;
  }
}

TEST(Recipe, FlipOneDegeneratesAtBounds) {
  const auto space = SpaceConfig::letters(3, 2);
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    EXPECT_LE(mutate_flip_one(Recipe("AB"), space, rng).size(), 2u);
    EXPECT_EQ(mutate_flip_one(Recipe(""), space, rng).size(), 1u);
  }
}

TEST(Recipe, SwapTwoPermutes) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    auto s = mutate_swap_two(Recipe("ABCDE"), rng).genes();
    std::sort(s.begin(), s.end());
    EXPECT_EQ(s, "ABCDE");
  }
  EXPECT_EQ(mutate_swap_two(Recipe("A"), rng).genes(), "A");
}

TEST(Recipe, NeighborFlipCountScalesWithTemperature) {
  EXPECT_EQ(neighbor_flip_count(5, 100, 100), 5u);
  EXPECT_EQ(neighbor_flip_count(5, 50, 100), 3u);
  EXPECT_EQ(neighbor_flip_count(5, 1, 100), 1u);
  EXPECT_EQ(neighbor_flip_count(5, 0, 100), 1u);
}

TEST(Enumerator, ShortestFirstLexicographic) {
  const auto all = enumerate_space(SpaceConfig::letters(2, 2));
  std::vector<std::string> genes;
  for (const auto& r : all) genes.push_back(r.genes());
  EXPECT_EQ(genes, (std::vector<std::string>{"", "A", "B", "AA", "AB", "BA", "BB"}));
}

TEST(Enumerator, CoversFullSpaceOnce) {
  const auto space = SpaceConfig::letters(5, 3);
  const auto all = enumerate_space(space);
  EXPECT_EQ(all.size(), space_size(space));
  EXPECT_EQ(std::set<Recipe>(all.begin(), all.end()).size(), all.size());
}

TEST(Enumerator, RefusesSpacesAboveCap) {
  EXPECT_THROW(enumerate_space(SpaceConfig::letters(5, 7), 1000), ConfigError);
}
