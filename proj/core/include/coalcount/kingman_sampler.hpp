#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coalcount/phylogeny.hpp"
#include "coalcount/rng.hpp"

namespace coalcount {

/// A ranked labeled topology as its merge sequence. Particle ids: leaves are
/// 0..n-1 in leaf_labels order; the merge of rank r (1-based) creates particle
/// n-1+r, so the last merge creates 2n-2.
struct MergeSequence {
  std::vector<std::string> leaf_labels;
  std::vector<std::pair<int, int>> merges;  // (smaller id, larger id) per rank

  int n() const { return static_cast<int>(leaf_labels.size()); }
  std::string encode() const;
};

struct SampleDraw {
  MergeSequence topology;
  std::vector<int> node_sequence;  // phylogeny node chosen at each rank
  double log_q = 0.0;              // proposal probability of this topology
};

/// Leaf particle ids follow node id order, then within-node particle order.
std::vector<std::string> leaf_labels_of(const KingmanPhylogeny& tree);

/// One pass of the constrained merge chain: at each rank pick a node with
/// probability proportional to its particle count, then a uniform pair inside
/// it. Particles whose node is done bubble up to the parent.
SampleDraw sample_kingman(const KingmanPhylogeny& tree, SplitMix64& rng);

struct KingmanChoice {
  int node;        // phylogeny node id
  int particle_a;  // particle ids as defined by MergeSequence
  int particle_b;
};

/// Re-runs the chain with every choice forced, computing the same q. Throws
/// std::invalid_argument if a choice is not available at its step.
SampleDraw replay_kingman(const KingmanPhylogeny& tree, std::span<const KingmanChoice> choices);

/// True iff every phylogeny constraint holds in the topology: each node's
/// particle set (with its descendants') forms a clade.
bool is_compatible(const MergeSequence& topology, const KingmanPhylogeny& tree);

/// Unranked labeled tree behind a merge sequence, with the number of merge
/// sequences sharing it. The count is exact while it fits 128 bits; the log
/// form is always valid.
struct LabeledProjection {
  std::string encoding;
  bool exact = true;
  unsigned __int128 rankings = 1;
  double log_rankings = 0.0;
};

LabeledProjection project_to_labeled(const MergeSequence& topology);

std::string u128_to_string(unsigned __int128 value);

}  // namespace coalcount
