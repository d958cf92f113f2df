#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "coalcount/kingman_sampler.hpp"
#include "coalcount/phylogeny.hpp"
#include "coalcount/tajima_sampler.hpp"

namespace coalcount {

using BigInt = boost::multiprecision::cpp_int;

/// Topology counts at the four resolutions.
struct ExactCounts {
  BigInt kingman = 0;
  BigInt tajima = 0;
  BigInt labeled = 0;
  BigInt shape = 0;
  /// Canonical encodings of the enumerated merge sequences, when asked for.
  std::optional<std::vector<std::string>> enumerated;
};

/// Counts with no data constraints: n!(n-1)!/2^(n-1) ranked labeled trees,
/// zigzag(n-1) ranked shapes, (2n-3)!! labeled trees, and the Wedderburn-
/// Etherington number of shapes.
ExactCounts closed_form_unconstrained(int n);

/// "d.dde+XX" with 3 significant digits; exact for values below 1000.
std::string scientific_3sig(const BigInt& value);

using EnumerationCallback =
    std::function<void(const MergeSequence&, const std::vector<KingmanChoice>&)>;

/// Exhaustive depth-first enumeration of every merge sequence the phylogeny
/// allows, counting the distinct objects at all four resolutions. Throws
/// BudgetExceeded once more than `budget` sequences complete. The callback,
/// when given, sees each sequence with the forced choices that replay it.
ExactCounts enumerate_compatible(const KingmanPhylogeny& tree,
                                 std::uint64_t budget = 10'000'000, bool collect = false,
                                 const EnumerationCallback& callback = nullptr);

/// Exhaustive path enumeration of the vintaged chain: every (chain, node
/// sequence) pair with its probability, aggregated per chain.
struct TajimaSupport {
  struct Entry {
    TajimaChain chain;
    double q = 0.0;
    std::uint64_t orderings = 0;
  };
  std::map<std::string, Entry> chains;  // by chain encoding
  double total_q = 0.0;                 // sums to 1 over the full support
  double identity_sum = 0.0;            // paths weighted by q(path)/q(chain); equals #chains
};

TajimaSupport exact_q_tajima(const TajimaPhylogeny& tree, std::uint64_t budget = 10'000'000);

}  // namespace coalcount
