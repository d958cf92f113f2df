#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <doctest.h>

#include "coalcount/kingman_sampler.hpp"
#include "coalcount/oracle.hpp"
#include "coalcount/rng.hpp"

#include "support.hpp"

using namespace coalcount;
using testsupport::example6_csv;
using testsupport::kingman_of;

namespace {

// One haplotype, n individuals: a single-node phylogeny (no constraints).
KingmanPhylogeny single_node(int n) {
  std::string csv = ",s1\n";
  for (int i = 0; i < n; ++i) csv += "i" + std::to_string(i + 1) + ",0\n";
  return kingman_of(csv);
}

MergeSequence sequence_of(std::vector<std::string> leaves,
                          std::vector<std::pair<int, int>> merges) {
  MergeSequence g;
  g.leaf_labels = std::move(leaves);
  g.merges = std::move(merges);
  return g;
}

}  // namespace

TEST_SUITE("kingman") {

TEST_CASE("leaf particle ids follow node order") {
  const KingmanPhylogeny tree = kingman_of(example6_csv());
  const auto labels = leaf_labels_of(tree);
  CHECK(labels == std::vector<std::string>{"a", "b", "c", "d", "e", "f"});
}

TEST_CASE("replaying the worked 6-sample choice sequence gives q = 1/90") {
  const KingmanPhylogeny tree = kingman_of(example6_csv());
  // Particles: a..f are 0..5; merge r creates particle 5+r. The two root
  // singletons are promoted before the first step, so the root is active.
  const std::vector<KingmanChoice> choices = {
      {3, 3, 5},  // d+f inside the 4-particle leaf
      {3, 2, 4},  // c+e
      {0, 0, 1},  // a+b at the root
      {3, 6, 7},  // the two internal particles finish the leaf node
      {0, 8, 9},  // root merge
  };
  const SampleDraw draw = replay_kingman(tree, choices);
  CHECK(std::fabs(draw.log_q + std::log(90.0)) < 1e-12);
  CHECK(draw.node_sequence == std::vector<int>{3, 3, 0, 3, 0});
  CHECK(draw.topology.merges ==
        std::vector<std::pair<int, int>>{{3, 5}, {2, 4}, {0, 1}, {6, 7}, {8, 9}});
  CHECK(draw.topology.encode() == "3+5;2+4;0+1;6+7;8+9");
  CHECK(is_compatible(draw.topology, tree));
}

TEST_CASE("replay rejects choices the chain cannot make") {
  const KingmanPhylogeny tree = kingman_of(example6_csv());
  // Node 1 handed its only particle to the root before the first step.
  CHECK_THROWS_AS(replay_kingman(tree, std::vector<KingmanChoice>{{1, 0, 0}}),
                  std::invalid_argument);
  // Particle 0 lives at the root, not in node 3.
  CHECK_THROWS_AS(replay_kingman(tree, std::vector<KingmanChoice>{{3, 0, 2}}),
                  std::invalid_argument);
  // Too few steps.
  CHECK_THROWS_AS(replay_kingman(tree, std::vector<KingmanChoice>{{3, 3, 5}}),
                  std::invalid_argument);
}

TEST_CASE("unconstrained draws all have probability 2^(n-1)/(n! (n-1)!)") {
  for (int n : {3, 5}) {
    const KingmanPhylogeny tree = single_node(n);
    const double expected =
        (n - 1) * std::log(2.0) - std::lgamma(n + 1.0) - std::lgamma(double(n));
    SplitMix64 rng(17);
    for (int i = 0; i < 300; ++i) {
      const SampleDraw draw = sample_kingman(tree, rng);
      REQUIRE(std::fabs(draw.log_q - expected) < 1e-12);
      REQUIRE(int(draw.topology.merges.size()) == n - 1);
      REQUIRE(is_compatible(draw.topology, tree));
    }
  }
}

TEST_CASE("draws are deterministic per stream") {
  const KingmanPhylogeny tree = kingman_of(example6_csv());
  StreamFamily family(5, stream_domain::kingman);
  SplitMix64 r1 = family.stream(3);
  SplitMix64 r2 = family.stream(3);
  const SampleDraw a = sample_kingman(tree, r1);
  const SampleDraw b = sample_kingman(tree, r2);
  CHECK(a.topology.encode() == b.topology.encode());
  CHECK(a.log_q == b.log_q);
  bool any_differ = false;
  for (std::uint64_t i = 4; i < 10; ++i) {
    SplitMix64 r3 = family.stream(i);
    if (sample_kingman(tree, r3).topology.encode() != a.topology.encode()) any_differ = true;
  }
  CHECK(any_differ);
}

TEST_CASE("every draw lands in the enumerated support and covers it") {
  const KingmanPhylogeny tree = kingman_of(example6_csv());
  const ExactCounts counts = enumerate_compatible(tree, 10'000'000, true);
  REQUIRE(counts.enumerated.has_value());
  REQUIRE(counts.kingman == 108);
  std::set<std::string> support(counts.enumerated->begin(), counts.enumerated->end());
  REQUIRE(support.size() == 108);

  std::set<std::string> seen;
  SplitMix64 rng(271828);
  for (int i = 0; i < 20000; ++i) {
    const SampleDraw draw = sample_kingman(tree, rng);
    REQUIRE(draw.log_q <= 0.0);
    REQUIRE(is_compatible(draw.topology, tree));
    const std::string enc = draw.topology.encode();
    REQUIRE(support.count(enc) == 1);
    seen.insert(enc);
  }
  CHECK(seen.size() == support.size());
}

TEST_CASE("compatibility sees clade violations") {
  const KingmanPhylogeny tree = kingman_of(example6_csv());
  // c,d then e,f then both, then a,b, then root: respects the 4-leaf clade.
  const auto good = sequence_of({"a", "b", "c", "d", "e", "f"},
                                {{2, 3}, {4, 5}, {6, 7}, {0, 1}, {8, 9}});
  CHECK(is_compatible(good, tree));
  // Merging a with c first breaks the {c,d,e,f} clade.
  const auto bad = sequence_of({"a", "b", "c", "d", "e", "f"},
                               {{0, 2}, {1, 3}, {4, 5}, {6, 7}, {8, 9}});
  CHECK_FALSE(is_compatible(bad, tree));
  // Everything is compatible with a single-node phylogeny.
  CHECK(is_compatible(bad, single_node(6)));
}

TEST_CASE("labeled projection of a caterpillar has a single ranking") {
  const auto cat = sequence_of({"a", "b", "c", "d", "e"},
                               {{0, 1}, {2, 5}, {3, 6}, {4, 7}});
  const LabeledProjection p = project_to_labeled(cat);
  CHECK(p.encoding == "((((a,b),c),d),e)");
  CHECK(p.exact);
  CHECK(p.rankings == 1);
  CHECK(p.log_rankings == 0.0);
}

TEST_CASE("labeled projection of a balanced four-leaf tree has two rankings") {
  const auto bal = sequence_of({"a", "b", "c", "d"}, {{0, 1}, {2, 3}, {4, 5}});
  const LabeledProjection p = project_to_labeled(bal);
  CHECK(p.encoding == "((a,b),(c,d))");
  CHECK(p.exact);
  CHECK(p.rankings == 2);
  CHECK(std::fabs(p.log_rankings - std::log(2.0)) < 1e-12);

  // The same labeled tree re-ranked (cherries swapped) projects identically.
  const auto swapped = sequence_of({"a", "b", "c", "d"}, {{2, 3}, {0, 1}, {4, 5}});
  const LabeledProjection q = project_to_labeled(swapped);
  CHECK(q.encoding == p.encoding);
  CHECK(q.rankings == 2);
}

TEST_CASE("labeled encodings sort children by smallest leaf") {
  const auto g = sequence_of({"d", "a", "c", "b"}, {{0, 2}, {1, 3}, {4, 5}});
  // Merge 1 joins d,c; merge 2 joins a,b; the root puts (a,b) first.
  CHECK(project_to_labeled(g).encoding == "((a,b),(c,d))");
}

TEST_CASE("ranking counts are consistent across draws of one labeled tree") {
  const KingmanPhylogeny tree = single_node(5);
  SplitMix64 rng(8);
  std::map<std::string, unsigned long long> rankings_by_tree;
  for (int i = 0; i < 2000; ++i) {
    const SampleDraw draw = sample_kingman(tree, rng);
    const LabeledProjection p = project_to_labeled(draw.topology);
    REQUIRE(p.exact);
    const auto value = static_cast<unsigned long long>(p.rankings);
    auto [it, fresh] = rankings_by_tree.emplace(p.encoding, value);
    REQUIRE(it->second == value);
  }
  // 5 leaves: ranking multiplicities over all labeled trees sum to 180.
  unsigned long long total = 0;
  for (const auto& [enc, r] : rankings_by_tree) total += r;
  CHECK(rankings_by_tree.size() == 105);
  CHECK(total == 180);
}

TEST_CASE("u128 values print in full") {
  CHECK(u128_to_string(0) == "0");
  CHECK(u128_to_string(123) == "123");
  unsigned __int128 big = 1;
  for (int i = 0; i < 64; ++i) big *= 2;
  CHECK(u128_to_string(big) == "18446744073709551616");
  CHECK(u128_to_string(~static_cast<unsigned __int128>(0)) ==
        "340282366920938463463374607431768211455");
}

}  // TEST_SUITE
