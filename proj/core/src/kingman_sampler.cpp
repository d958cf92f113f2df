#include "coalcount/kingman_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "coalcount/numeric.hpp"

namespace coalcount {

namespace {

// Mutable chain state over a fixed phylogeny. A node is "open" while its
// subtree still owes particles; once a node holds its last particle and no
// child is open, that particle belongs to the parent's pool.
struct ChainState {
  const KingmanPhylogeny* tree;
  std::vector<std::vector<int>> particles;  // particle ids per node
  std::vector<int> open_children;
  int n = 0;

  explicit ChainState(const KingmanPhylogeny& t)
      : tree(&t), particles(t.n_nodes()), open_children(t.n_nodes(), 0) {
    for (int v = 0; v < t.n_nodes(); ++v) {
      for (std::size_t i = 0; i < t.nodes[v].particles.size(); ++i)
        particles[v].push_back(n++);
      open_children[v] = static_cast<int>(t.nodes[v].children.size());
    }
    // Children carry larger ids than parents, so reverse order is bottom-up.
    for (int v = t.n_nodes() - 1; v >= 0; --v) bubble_up(v);
  }

  void bubble_up(int v) {
    while (v != tree->root && particles[v].size() == 1 && open_children[v] == 0) {
      const int parent = tree->nodes[v].parent;
      particles[parent].push_back(particles[v].front());
      particles[v].clear();
      --open_children[parent];
      v = parent;
    }
  }

  int count(int v) const { return static_cast<int>(particles[v].size()); }

  std::vector<int> active_nodes() const {
    std::vector<int> active;
    for (int v = 0; v < tree->n_nodes(); ++v)
      if (count(v) >= 2) active.push_back(v);
    return active;
  }

  // Replaces the pair by the new particle and lets the node's pool bubble up.
  void merge(int v, int index_a, int index_b, int new_particle) {
    particles[v][index_a] = new_particle;
    particles[v].erase(particles[v].begin() + index_b);
    bubble_up(v);
  }
};

template <typename ChooseNode, typename ChoosePair>
SampleDraw run_chain(const KingmanPhylogeny& tree, ChooseNode&& choose_node,
                     ChoosePair&& choose_pair) {
  ChainState state(tree);
  SampleDraw draw;
  draw.topology.leaf_labels = leaf_labels_of(tree);
  const int n = state.n;

  for (int rank = 1; rank < n; ++rank) {
    const auto active = state.active_nodes();
    int total = 0;
    for (int v : active) total += state.count(v);

    const int v = choose_node(state, active, total);
    draw.log_q += std::log(double(state.count(v))) - std::log(double(total));

    auto [index_a, index_b] = choose_pair(state, v);
    draw.log_q -= log_choose2(state.count(v));

    const int a = state.particles[v][index_a];
    const int b = state.particles[v][index_b];
    draw.topology.merges.emplace_back(std::min(a, b), std::max(a, b));
    draw.node_sequence.push_back(v);
    state.merge(v, index_a, index_b, n - 1 + rank);
  }
  return draw;
}

// Subtree clade masks of the phylogeny, as bitmasks over leaf-label indices.
std::vector<std::vector<std::uint64_t>> phylogeny_clades(const KingmanPhylogeny& tree,
                                                         int words) {
  std::vector<std::vector<std::uint64_t>> clades(tree.n_nodes(),
                                                 std::vector<std::uint64_t>(words, 0));
  int particle = 0;
  for (int v = 0; v < tree.n_nodes(); ++v)
    for (std::size_t i = 0; i < tree.nodes[v].particles.size(); ++i, ++particle)
      clades[v][particle / 64] |= 1ull << (particle % 64);
  for (int v = tree.n_nodes() - 1; v >= 0; --v) {
    const int parent = tree.nodes[v].parent;
    if (parent < 0) continue;
    for (int w = 0; w < words; ++w) clades[parent][w] |= clades[v][w];
  }
  return clades;
}

struct MaskHash {
  std::size_t operator()(const std::vector<std::uint64_t>& mask) const {
    std::size_t h = 0xcbf29ce484222325ull;
    for (auto w : mask) h = (h ^ w) * 0x100000001b3ull;
    return h;
  }
};

}  // namespace

std::string MergeSequence::encode() const {
  std::string out;
  for (const auto& [a, b] : merges) {
    if (!out.empty()) out += ';';
    out += std::to_string(a);
    out += '+';
    out += std::to_string(b);
  }
  return out;
}

std::vector<std::string> leaf_labels_of(const KingmanPhylogeny& tree) {
  std::vector<std::string> labels;
  for (const auto& node : tree.nodes)
    labels.insert(labels.end(), node.particles.begin(), node.particles.end());
  return labels;
}

SampleDraw sample_kingman(const KingmanPhylogeny& tree, SplitMix64& rng) {
  return run_chain(
      tree,
      [&rng](const ChainState& state, const std::vector<int>& active, int total) {
        std::uint64_t r = rng.below(total);
        for (int v : active) {
          const auto c = static_cast<std::uint64_t>(state.count(v));
          if (r < c) return v;
          r -= c;
        }
        return active.back();
      },
      [&rng](const ChainState& state, int v) { return rng.pair_below(state.count(v)); });
}

SampleDraw replay_kingman(const KingmanPhylogeny& tree,
                          std::span<const KingmanChoice> choices) {
  std::size_t step = 0;
  auto next = [&step, choices]() -> const KingmanChoice& {
    if (step >= choices.size()) throw std::invalid_argument("replay ran out of choices");
    return choices[step];
  };
  return run_chain(
      tree,
      [&next](const ChainState& state, const std::vector<int>&, int) {
        const auto& choice = next();
        if (state.count(choice.node) < 2)
          throw std::invalid_argument("forced node is not active");
        return choice.node;
      },
      [&next, &step](const ChainState& state, int v) {
        const auto& choice = next();
        ++step;
        const auto& pool = state.particles[v];
        const auto pa = std::find(pool.begin(), pool.end(), choice.particle_a);
        const auto pb = std::find(pool.begin(), pool.end(), choice.particle_b);
        if (pa == pool.end() || pb == pool.end() || pa == pb)
          throw std::invalid_argument("forced pair is not in the chosen node");
        auto ia = static_cast<int>(pa - pool.begin());
        auto ib = static_cast<int>(pb - pool.begin());
        if (ia > ib) std::swap(ia, ib);
        return std::pair<int, int>{ia, ib};
      });
}

bool is_compatible(const MergeSequence& topology, const KingmanPhylogeny& tree) {
  const int n = topology.n();
  const int words = (n + 63) / 64;

  std::unordered_set<std::vector<std::uint64_t>, MaskHash> clades;
  std::vector<std::vector<std::uint64_t>> subtree(2 * n - 1,
                                                  std::vector<std::uint64_t>(words, 0));
  for (int i = 0; i < n; ++i) {
    subtree[i][i / 64] |= 1ull << (i % 64);
    clades.insert(subtree[i]);
  }
  for (std::size_t r = 0; r < topology.merges.size(); ++r) {
    const auto& [a, b] = topology.merges[r];
    auto& mask = subtree[n + r];
    for (int w = 0; w < words; ++w) mask[w] = subtree[a][w] | subtree[b][w];
    clades.insert(mask);
  }

  for (const auto& clade : phylogeny_clades(tree, words))
    if (!clades.contains(clade)) return false;
  return true;
}

LabeledProjection project_to_labeled(const MergeSequence& topology) {
  const int n = topology.n();
  LabeledProjection out;

  std::vector<int> size(2 * n - 1, 1);
  for (int r = 0; r < n - 1; ++r) {
    const auto& [a, b] = topology.merges[r];
    size[n + r] = size[a] + size[b];
    // Rankings of a labeled tree factor over merges: interleave the two
    // subtrees' internal orders.
    const int total = size[a] + size[b] - 2;
    const int pick = size[a] - 1;
    out.log_rankings += log_binom(total, pick);
    if (out.exact) {
      unsigned __int128 binom = 1;
      for (int i = 1; i <= pick; ++i) {
        unsigned __int128 next = binom * (total - pick + i);
        if (next / (total - pick + i) != binom) {
          out.exact = false;
          break;
        }
        binom = next / i;
      }
      if (out.exact) {
        unsigned __int128 next = out.rankings * binom;
        if (binom != 0 && next / binom != out.rankings)
          out.exact = false;
        else
          out.rankings = next;
      }
    }
  }

  std::vector<std::string> encoding(2 * n - 1);
  std::vector<std::string> min_leaf(2 * n - 1);
  for (int i = 0; i < n; ++i) encoding[i] = min_leaf[i] = topology.leaf_labels[i];
  for (int r = 0; r < n - 1; ++r) {
    auto [a, b] = topology.merges[r];
    if (min_leaf[b] < min_leaf[a]) std::swap(a, b);
    encoding[n + r] = "(" + encoding[a] + "," + encoding[b] + ")";
    min_leaf[n + r] = min_leaf[a];
  }
  out.encoding = encoding[2 * n - 2];
  if (!out.exact) out.rankings = 0;
  return out;
}

std::string u128_to_string(unsigned __int128 value) {
  if (value == 0) return "0";
  std::string out;
  while (value > 0) {
    out += char('0' + int(value % 10));
    value /= 10;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace coalcount
