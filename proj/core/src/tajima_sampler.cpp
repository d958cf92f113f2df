#include "coalcount/tajima_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "coalcount/errors.hpp"
#include "coalcount/numeric.hpp"

namespace coalcount {

namespace {

// Mutable chain state: per node a count of anonymous singletons and the sorted
// ranks of resident vintages. Keeps the owner node of every live vintage.
struct TajimaState {
  const TajimaPhylogeny* tree;
  std::vector<int> singles;
  std::vector<std::vector<int>> vintages;
  std::vector<int> open_children;
  std::vector<int> vintage_node;  // by rank (1-based); -1 once retired
  int n = 0;

  explicit TajimaState(const TajimaPhylogeny& t)
      : tree(&t),
        singles(t.n_nodes(), 0),
        vintages(t.n_nodes()),
        open_children(t.n_nodes(), 0) {
    for (int v = 0; v < t.n_nodes(); ++v) {
      singles[v] = t.nodes[v].count;
      n += t.nodes[v].count;
      open_children[v] = static_cast<int>(t.nodes[v].children.size());
    }
    vintage_node.assign(n, -1);
    for (int v = t.n_nodes() - 1; v >= 0; --v) bubble_up(v);
  }

  int count(int v) const { return singles[v] + static_cast<int>(vintages[v].size()); }

  void bubble_up(int v) {
    while (v != tree->root && count(v) == 1 && open_children[v] == 0) {
      const int parent = tree->nodes[v].parent;
      if (singles[v] == 1) {
        --singles[v];
        ++singles[parent];
      } else {
        const int rank = vintages[v].front();
        vintages[v].clear();
        vintages[parent].insert(
            std::lower_bound(vintages[parent].begin(), vintages[parent].end(), rank), rank);
        vintage_node[rank] = parent;
      }
      --open_children[parent];
      v = parent;
    }
  }

  void retire(int v, int rank) {
    auto& pool = vintages[v];
    pool.erase(std::lower_bound(pool.begin(), pool.end(), rank));
    vintage_node[rank] = -1;
  }

  /// Applies event with the given rank inside node v; no feasibility checks.
  void apply(int v, const TajimaEvent& event, int rank) {
    switch (event.kind) {
      case TajimaEvent::Kind::cherry:
        singles[v] -= 2;
        break;
      case TajimaEvent::Kind::singleton_vintage:
        --singles[v];
        retire(v, event.high);
        break;
      case TajimaEvent::Kind::vintage_vintage:
        retire(v, event.low);
        retire(v, event.high);
        break;
    }
    vintages[v].push_back(rank);  // rank exceeds all resident ranks
    vintage_node[rank] = v;
    bubble_up(v);
  }

  bool rank_in_range(int rank) const { return rank >= 1 && rank < n; }

  bool feasible(int v, const TajimaEvent& event) const {
    switch (event.kind) {
      case TajimaEvent::Kind::cherry:
        return singles[v] >= 2;
      case TajimaEvent::Kind::singleton_vintage:
        return rank_in_range(event.high) && singles[v] >= 1 && vintage_node[event.high] == v;
      case TajimaEvent::Kind::vintage_vintage:
        return rank_in_range(event.low) && rank_in_range(event.high) &&
               event.low != event.high && vintage_node[event.low] == v &&
               vintage_node[event.high] == v;
    }
    return false;
  }

  // Pair multiplicity of the event within v, over the binom(count,2) pairs.
  double log_event_prob(int v, const TajimaEvent& event) const {
    double log_ways = 0.0;
    if (event.kind == TajimaEvent::Kind::cherry)
      log_ways = log_choose2(singles[v]);
    else if (event.kind == TajimaEvent::Kind::singleton_vintage)
      log_ways = std::log(double(singles[v]));
    return log_ways - log_choose2(count(v));
  }

  int total_active() const {
    int total = 0;
    for (int v = 0; v < tree->n_nodes(); ++v)
      if (count(v) >= 2) total += count(v);
    return total;
  }

  std::string key(int step) const {
    std::string out = std::to_string(step);
    for (int v = 0; v < tree->n_nodes(); ++v) {
      out += '|';
      out += std::to_string(singles[v]);
      for (int rank : vintages[v]) {
        out += ',';
        out += std::to_string(rank);
      }
    }
    return out;
  }
};

template <typename ChooseNode, typename ChooseEvent>
TajimaDraw run_chain(const TajimaPhylogeny& tree, ChooseNode&& choose_node,
                     ChooseEvent&& choose_event) {
  TajimaState state(tree);
  TajimaDraw draw;
  draw.chain.n = state.n;

  for (int rank = 1; rank < state.n; ++rank) {
    const int total = state.total_active();
    const int v = choose_node(state, total);
    draw.log_q_path += std::log(double(state.count(v))) - std::log(double(total));

    const TajimaEvent event = choose_event(state, v);
    draw.log_q_path += state.log_event_prob(v, event);

    draw.chain.events.push_back(event);
    draw.node_sequence.push_back(v);
    state.apply(v, event, rank);
  }
  draw.log_q = std::numeric_limits<double>::quiet_NaN();
  return draw;
}

}  // namespace

std::string TajimaChain::encode() const {
  std::string out = std::to_string(n) + ":";
  bool first = true;
  for (const auto& event : events) {
    if (!first) out += ';';
    first = false;
    switch (event.kind) {
      case TajimaEvent::Kind::cherry:
        out += "C";
        break;
      case TajimaEvent::Kind::singleton_vintage:
        out += "S" + std::to_string(event.high);
        break;
      case TajimaEvent::Kind::vintage_vintage:
        out += "V" + std::to_string(event.low) + "," + std::to_string(event.high);
        break;
    }
  }
  return out;
}

TajimaDraw sample_tajima(const TajimaPhylogeny& tree, SplitMix64& rng) {
  return run_chain(
      tree,
      [&rng](const TajimaState& state, int total) {
        std::uint64_t r = rng.below(total);
        int last = 0;
        for (int v = 0; v < state.tree->n_nodes(); ++v) {
          if (state.count(v) < 2) continue;
          last = v;
          const auto c = static_cast<std::uint64_t>(state.count(v));
          if (r < c) return v;
          r -= c;
        }
        return last;
      },
      [&rng](const TajimaState& state, int v) {
        auto [a, b] = rng.pair_below(state.count(v));
        TajimaEvent event;
        if (b < state.singles[v]) {
          event.kind = TajimaEvent::Kind::cherry;
        } else if (a < state.singles[v]) {
          event.kind = TajimaEvent::Kind::singleton_vintage;
          event.high = state.vintages[v][b - state.singles[v]];
        } else {
          event.kind = TajimaEvent::Kind::vintage_vintage;
          event.low = state.vintages[v][a - state.singles[v]];
          event.high = state.vintages[v][b - state.singles[v]];
        }
        return event;
      });
}

TajimaDraw replay_tajima(const TajimaPhylogeny& tree, std::span<const TajimaChoice> choices) {
  std::size_t step = 0;
  return run_chain(
      tree,
      [&](const TajimaState& state, int) {
        if (step >= choices.size()) throw std::invalid_argument("replay ran out of choices");
        const int v = choices[step].node;
        if (state.count(v) < 2) throw std::invalid_argument("forced node is not active");
        return v;
      },
      [&](const TajimaState& state, int v) {
        const TajimaEvent event = choices[step].event;
        ++step;
        if (!state.feasible(v, event))
          throw std::invalid_argument("forced event is infeasible in the chosen node");
        return event;
      });
}

BacktrackResult backtrack_q(const TajimaPhylogeny& tree, const TajimaChain& chain,
                            std::uint64_t budget) {
  struct Partial {
    double log_q;
    std::uint64_t orderings;
  };
  std::unordered_map<std::string, Partial> memo;
  std::uint64_t explored = 0;

  // Leaf counts of every chain subtree and each rank's consuming rank.
  const int n = chain.n;
  std::vector<int> size(n, 0);
  std::vector<int> consumer(n, 0);
  for (int step = 0; step < static_cast<int>(chain.events.size()); ++step) {
    const int rank = step + 1;
    const TajimaEvent& event = chain.events[step];
    switch (event.kind) {
      case TajimaEvent::Kind::cherry:
        size[rank] = 2;
        break;
      case TajimaEvent::Kind::singleton_vintage:
        if (event.high >= 1 && event.high < n) {
          size[rank] = 1 + size[event.high];
          consumer[event.high] = rank;
        }
        break;
      case TajimaEvent::Kind::vintage_vintage:
        if (event.low >= 1 && event.low < n && event.high >= 1 && event.high < n) {
          size[rank] = size[event.low] + size[event.high];
          consumer[event.low] = rank;
          consumer[event.high] = rank;
        }
        break;
    }
  }

  // Particles under each phylogeny node; children carry larger indices.
  std::vector<int> subtree_particles(tree.n_nodes(), 0);
  for (int v = tree.n_nodes() - 1; v >= 0; --v) {
    subtree_particles[v] += tree.nodes[v].count;
    if (v != tree.root) subtree_particles[tree.nodes[v].parent] += subtree_particles[v];
  }

  // Particles only move rootward, and a node's contents must coalesce into a
  // single vintage before it can promote, so the vintage leaving node v is a
  // chain ancestor of everything created at v with exactly subtree_particles[v]
  // leaves. Ancestor sizes strictly increase, making the test a short walk;
  // failing it means the placement can never finish the chain.
  auto placeable = [&](int rank, int v) {
    const int target = subtree_particles[v];
    for (int a = rank; a != 0; a = consumer[a]) {
      if (size[a] == target) return true;
      if (size[a] > target) return false;
    }
    return false;
  };

  // The same argument pins down the future of every live vintage: the chain
  // ancestors of a vintage resident at w, up to the one sized like w's
  // subtree, must all be emitted by w itself. A vintage whose ancestor sizes
  // skip that mark can never leave w, and two vintages at different nodes
  // claiming the same future rank cannot both be satisfied. States failing
  // either test have no completions and are worth rejecting up front.
  std::vector<int> forced_node(n, -1);
  auto consistent = [&](const TajimaState& state) {
    std::fill(forced_node.begin(), forced_node.end(), -1);
    for (int w = 0; w < tree.n_nodes(); ++w) {
      const int target = subtree_particles[w];
      for (const int r : state.vintages[w]) {
        bool reached = false;
        for (int x = r; x != 0; x = consumer[x]) {
          if (size[x] > target) break;
          if (forced_node[x] >= 0 && forced_node[x] != w) return false;
          forced_node[x] = w;
          if (size[x] == target) {
            reached = true;
            break;
          }
        }
        if (!reached) return false;
      }
    }
    return true;
  };

  auto recurse = [&](auto&& self, TajimaState& state, int step) -> Partial {
    if (step == static_cast<int>(chain.events.size())) return {0.0, 1};
    const std::string key = state.key(step);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    if (!consistent(state)) {
      memo.emplace(key, Partial{-std::numeric_limits<double>::infinity(), 0});
      return {-std::numeric_limits<double>::infinity(), 0};
    }

    const TajimaEvent& event = chain.events[step];
    const int total = state.total_active();

    std::vector<int> candidates;
    if (event.kind == TajimaEvent::Kind::cherry) {
      for (int v = 0; v < tree.n_nodes(); ++v)
        if (state.feasible(v, event) && placeable(step + 1, v)) candidates.push_back(v);
    } else if (state.rank_in_range(event.high)) {
      const int v = state.vintage_node[event.high];
      if (v >= 0 && state.feasible(v, event) && placeable(step + 1, v)) candidates.push_back(v);
    }

    Partial result{-std::numeric_limits<double>::infinity(), 0};
    for (int v : candidates) {
      if (++explored > budget)
        throw BudgetExceeded("ordering search exceeded " + std::to_string(budget) +
                                 " expansions",
                             budget);
      const double log_step = std::log(double(state.count(v))) - std::log(double(total)) +
                              state.log_event_prob(v, event);
      TajimaState next = state;
      next.apply(v, event, step + 1);
      const Partial sub = self(self, next, step + 1);
      result.log_q = log_add_exp(result.log_q, log_step + sub.log_q);
      result.orderings += sub.orderings;
    }
    memo.emplace(std::move(key), result);
    return result;
  };

  TajimaState state(tree);
  if (state.n != chain.n) throw std::invalid_argument("chain size does not match phylogeny");
  const Partial top = recurse(recurse, state, 0);
  if (top.orderings == 0)
    throw std::invalid_argument("chain is not reachable on this phylogeny");
  return {top.log_q, top.orderings, explored};
}

ShapeProjection project_to_shape(const TajimaChain& chain) {
  ShapeProjection out;
  std::vector<std::string> shape(chain.n, "");  // by vintage rank; [0] unused
  std::vector<int> leaves(chain.n, 0);

  int next_rank = 1;
  for (const auto& event : chain.events) {
    std::string sa, sb;
    int la = 1, lb = 1;
    switch (event.kind) {
      case TajimaEvent::Kind::cherry:
        sa = sb = "*";
        la = lb = 1;
        break;
      case TajimaEvent::Kind::singleton_vintage:
        sa = "*";
        la = 1;
        sb = shape[event.high];
        lb = leaves[event.high];
        break;
      case TajimaEvent::Kind::vintage_vintage:
        sa = shape[event.low];
        la = leaves[event.low];
        sb = shape[event.high];
        lb = leaves[event.high];
        break;
    }
    // Rankings of a shape factor over merges, halved whenever the two merging
    // subtrees are the same shape with internal structure: swapping their rank
    // blocks reproduces the same ranked shape.
    out.log_rankings += log_binom(la + lb - 2, la - 1);
    const bool halve = la >= 2 && sa == sb;
    if (halve) out.log_rankings -= std::log(2.0);
    if (out.exact) {
      unsigned __int128 binom = 1;
      bool ok = true;
      const int total = la + lb - 2, pick = la - 1;
      for (int i = 1; i <= pick && ok; ++i) {
        unsigned __int128 nxt = binom * (total - pick + i);
        if (nxt / (total - pick + i) != binom)
          ok = false;
        else
          binom = nxt / i;
      }
      if (ok) {
        unsigned __int128 nxt = out.rankings * binom;
        if (binom != 0 && nxt / binom != out.rankings)
          ok = false;
        else
          out.rankings = halve ? nxt / 2 : nxt;
        // Halving is exact: the unhalved product stays even until divided.
        if (ok && halve && nxt % 2 != 0) ok = false;
      }
      out.exact = ok;
    }
    if (sb < sa) std::swap(sa, sb);
    shape[next_rank] = "(" + sa + sb + ")";
    leaves[next_rank] = la + lb;
    ++next_rank;
  }
  out.encoding = shape[chain.n - 1];
  if (!out.exact) out.rankings = 0;
  return out;
}

TajimaChain chain_of(const MergeSequence& topology) {
  const int n = topology.n();
  TajimaChain chain;
  chain.n = n;
  std::vector<int> size(2 * n - 1, 1);
  for (int r = 0; r < n - 1; ++r) {
    const auto& [a, b] = topology.merges[r];
    size[n + r] = size[a] + size[b];
    TajimaEvent event;
    const int rank_a = a >= n ? a - n + 1 : 0;
    const int rank_b = b >= n ? b - n + 1 : 0;
    if (rank_a == 0 && rank_b == 0) {
      event.kind = TajimaEvent::Kind::cherry;
    } else if (rank_a == 0 || rank_b == 0) {
      event.kind = TajimaEvent::Kind::singleton_vintage;
      event.high = std::max(rank_a, rank_b);
    } else {
      event.kind = TajimaEvent::Kind::vintage_vintage;
      event.low = std::min(rank_a, rank_b);
      event.high = std::max(rank_a, rank_b);
    }
    chain.events.push_back(event);
  }
  return chain;
}

}  // namespace coalcount
