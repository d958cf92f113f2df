#include "coalcount/simulator.hpp"

#include <algorithm>
#include <numeric>

#include "coalcount/errors.hpp"

namespace coalcount {

namespace {

// Lifetime of every particle: birth at its creating merge (0 for leaves),
// death at the merge that absorbs it. The final particle has no branch above.
std::vector<double> branch_lengths(const TimedGenealogy& genealogy) {
  const int n = genealogy.topology.n();
  std::vector<double> merge_depth(n);  // depth of merge rank r at index r-1
  double depth = 0.0;
  for (int r = 0; r < n - 1; ++r) {
    depth += genealogy.wait_times[r];
    merge_depth[r] = depth;
  }
  std::vector<double> lengths(2 * n - 2, 0.0);
  std::vector<double> birth(2 * n - 1, 0.0);
  for (int r = 0; r < n - 1; ++r) {
    const auto& [a, b] = genealogy.topology.merges[r];
    lengths[a] = merge_depth[r] - birth[a];
    lengths[b] = merge_depth[r] - birth[b];
    birth[n + r] = merge_depth[r];
  }
  return lengths;
}

}  // namespace

double TimedGenealogy::total_branch_length() const {
  // Each of the k live lineages ages through the whole k-lineage interval.
  double total = 0.0;
  const int n = topology.n();
  for (int r = 0; r < n - 1; ++r) total += (n - r) * wait_times[r];
  return total;
}

TimedGenealogy simulate_genealogy(int n, SplitMix64& rng) {
  if (n < 2) throw ConfigError("genealogy needs n >= 2");
  TimedGenealogy out;
  for (int i = 1; i <= n; ++i) out.topology.leaf_labels.push_back("i" + std::to_string(i));

  std::vector<int> live(n);
  std::iota(live.begin(), live.end(), 0);
  for (int rank = 1; rank < n; ++rank) {
    const int k = static_cast<int>(live.size());
    out.wait_times.push_back(rng.exponential(0.5 * k * (k - 1)));
    auto [i, j] = rng.pair_below(k);
    const int a = live[i], b = live[j];
    out.topology.merges.emplace_back(std::min(a, b), std::max(a, b));
    live[i] = n - 1 + rank;
    live.erase(live.begin() + j);
  }
  return out;
}

IncidenceMatrix place_mutations(const TimedGenealogy& genealogy, int m, SplitMix64& rng) {
  const int n = genealogy.topology.n();
  const auto lengths = branch_lengths(genealogy);

  std::vector<double> cumulative(lengths.size());
  std::partial_sum(lengths.begin(), lengths.end(), cumulative.begin());
  const double total = cumulative.back();

  // Leaves below each particle, as index lists.
  std::vector<std::vector<int>> below(2 * n - 1);
  for (int i = 0; i < n; ++i) below[i] = {i};
  for (int r = 0; r < n - 1; ++r) {
    const auto& [a, b] = genealogy.topology.merges[r];
    below[n + r] = below[a];
    below[n + r].insert(below[n + r].end(), below[b].begin(), below[b].end());
  }

  std::vector<std::vector<std::uint8_t>> rows(n, std::vector<std::uint8_t>(m, 0));
  for (int j = 0; j < m; ++j) {
    const double u = rng.uniform01() * total;
    const auto branch =
        std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin();
    for (int leaf : below[std::min<std::size_t>(branch, lengths.size() - 1)])
      rows[leaf][j] = 1;
  }

  std::vector<std::string> sites;
  for (int j = 1; j <= m; ++j) sites.push_back("s" + std::to_string(j));
  return IncidenceMatrix(std::move(rows), genealogy.topology.leaf_labels, std::move(sites));
}

SimulatedData simulate_matrix(int n, double mu, std::uint64_t seed) {
  if (mu < 0) throw ConfigError("mutation rate must be nonnegative");
  SplitMix64 tree_rng = StreamFamily(seed, stream_domain::genealogy).stream(0);
  SplitMix64 mutation_rng = StreamFamily(seed, stream_domain::mutation).stream(0);

  const TimedGenealogy genealogy = simulate_genealogy(n, tree_rng);
  const double length = genealogy.total_branch_length();
  const int m = static_cast<int>(mutation_rng.poisson(mu * length));

  return {place_mutations(genealogy, m, mutation_rng), length, m};
}

}  // namespace coalcount
