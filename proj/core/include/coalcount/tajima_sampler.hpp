#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "coalcount/kingman_sampler.hpp"
#include "coalcount/phylogeny.hpp"
#include "coalcount/rng.hpp"

namespace coalcount {

/// One step of the vintaged merge chain. The event of rank r (1-based) retires
/// its operands and creates vintage r. Operands are either anonymous
/// singletons or earlier vintages named by rank.
struct TajimaEvent {
  enum class Kind { cherry, singleton_vintage, vintage_vintage };
  Kind kind = Kind::cherry;
  int low = 0;   // vintage_vintage: smaller rank
  int high = 0;  // singleton_vintage and vintage_vintage: the (larger) rank

  bool operator==(const TajimaEvent&) const = default;
};

/// A ranked tree shape as its event list.
struct TajimaChain {
  int n = 0;
  std::vector<TajimaEvent> events;  // n-1

  std::string encode() const;
  bool operator==(const TajimaChain&) const = default;
};

struct TajimaDraw {
  TajimaChain chain;
  std::vector<int> node_sequence;  // phylogeny node chosen at each rank
  double log_q_path = 0.0;         // probability of (chain, node_sequence)
  double log_q = 0.0;              // probability of the chain itself; see backtrack_q
};

/// One pass of the constrained vintaged chain: node by particle count, then a
/// uniform particle pair inside it. Fills log_q_path only; the chain's full
/// proposal probability needs backtrack_q.
TajimaDraw sample_tajima(const TajimaPhylogeny& tree, SplitMix64& rng);

struct TajimaChoice {
  int node;
  TajimaEvent event;
};

/// Re-runs the chain with every choice forced. Throws std::invalid_argument if
/// a choice is infeasible at its step.
TajimaDraw replay_tajima(const TajimaPhylogeny& tree, std::span<const TajimaChoice> choices);

struct BacktrackResult {
  double log_q = 0.0;            // sum of path probabilities over all orderings
  std::uint64_t orderings = 0;   // node sequences that can emit the chain
  std::uint64_t explored = 0;    // partial sequences expanded (memoized search)
};

/// Sums the chain's probability over every node sequence that can produce it,
/// by depth-first search with memoization on the chain state. Throws
/// BudgetExceeded once more than `budget` partial sequences are expanded.
BacktrackResult backtrack_q(const TajimaPhylogeny& tree, const TajimaChain& chain,
                            std::uint64_t budget = 100'000'000);

/// Unranked shape behind a chain, with the number of chains sharing it (exact
/// while it fits 128 bits; the log form is always valid).
struct ShapeProjection {
  std::string encoding;
  bool exact = true;
  unsigned __int128 rankings = 1;
  double log_rankings = 0.0;
};

ShapeProjection project_to_shape(const TajimaChain& chain);

/// The chain a merge sequence induces when labels are forgotten.
TajimaChain chain_of(const MergeSequence& topology);

}  // namespace coalcount
