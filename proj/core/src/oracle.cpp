#include "coalcount/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "coalcount/errors.hpp"
#include "coalcount/numeric.hpp"

namespace coalcount {

namespace {

BigInt factorial(int n) {
  BigInt out = 1;
  for (int i = 2; i <= n; ++i) out *= i;
  return out;
}

BigInt double_factorial_odd(int n) {
  BigInt out = 1;
  for (int i = 3; i <= n; i += 2) out *= i;
  return out;
}

// Alternating-permutation counts by the boustrophedon recurrence.
BigInt zigzag(int n) {
  std::vector<BigInt> row = {1};
  for (int i = 1; i <= n; ++i) {
    std::vector<BigInt> next(i + 1, 0);
    for (int j = 1; j <= i; ++j) next[j] = next[j - 1] + row[i - j];
    row = std::move(next);
  }
  return row.back();
}

BigInt wedderburn_etherington(int n) {
  std::vector<BigInt> a(std::max(n + 1, 3), 0);
  a[1] = 1;
  if (n >= 2) a[2] = 1;
  for (int k = 3; k <= n; ++k) {
    if (k % 2 == 1) {
      const int m = (k - 1) / 2;
      for (int i = 1; i <= m; ++i) a[k] += a[i] * a[k - i];
    } else {
      const int m = k / 2;
      for (int i = 1; i < m; ++i) a[k] += a[i] * a[k - i];
      a[k] += a[m] * (a[m] + 1) / 2;
    }
  }
  return a[n];
}

// Independent chain state for enumeration: particles live on phylogeny nodes;
// a node whose subtree is finished hands its last particle to its parent.
struct EnumState {
  std::vector<std::vector<int>> particles;  // particle ids per node
  std::vector<int> open_children;

  static EnumState initial(const KingmanPhylogeny& tree) {
    EnumState state;
    state.particles.resize(tree.n_nodes());
    state.open_children.resize(tree.n_nodes());
    int id = 0;
    for (int v = 0; v < tree.n_nodes(); ++v) {
      for (std::size_t i = 0; i < tree.nodes[v].particles.size(); ++i)
        state.particles[v].push_back(id++);
      state.open_children[v] = static_cast<int>(tree.nodes[v].children.size());
    }
    for (int v = tree.n_nodes() - 1; v >= 0; --v) state.settle(tree, v);
    return state;
  }

  void settle(const KingmanPhylogeny& tree, int v) {
    while (v != tree.root && particles[v].size() == 1 && open_children[v] == 0) {
      const int parent = tree.nodes[v].parent;
      particles[parent].push_back(particles[v].front());
      particles[v].clear();
      --open_children[parent];
      v = parent;
    }
  }
};

struct Enumerator {
  const KingmanPhylogeny& tree;
  std::uint64_t budget;
  bool collect;
  const EnumerationCallback& callback;

  int n = 0;
  std::uint64_t completions = 0;
  std::unordered_set<std::string> chains, labeled, shapes;
  MergeSequence partial;
  std::vector<KingmanChoice> choices;
  ExactCounts counts;

  void run() {
    partial.leaf_labels = leaf_labels_of(tree);
    n = partial.n();
    if (collect) counts.enumerated.emplace();
    recurse(EnumState::initial(tree), 1);
    counts.kingman = completions;
    counts.tajima = chains.size();
    counts.labeled = labeled.size();
    counts.shape = shapes.size();
  }

  void recurse(const EnumState& state, int rank) {
    if (rank == n) {
      if (++completions > budget)
        throw BudgetExceeded(
            "enumeration exceeded " + std::to_string(budget) + " sequences", budget);
      chains.insert(chain_of(partial).encode());
      labeled.insert(project_to_labeled(partial).encoding);
      shapes.insert(project_to_shape(chain_of(partial)).encoding);
      if (collect) counts.enumerated->push_back(partial.encode());
      if (callback) callback(partial, choices);
      return;
    }
    for (int v = 0; v < tree.n_nodes(); ++v) {
      const auto& pool = state.particles[v];
      const int c = static_cast<int>(pool.size());
      if (c < 2) continue;
      for (int i = 0; i < c; ++i)
        for (int j = i + 1; j < c; ++j) {
          EnumState next = state;
          next.particles[v][i] = n - 1 + rank;
          next.particles[v].erase(next.particles[v].begin() + j);
          next.settle(tree, v);
          partial.merges.emplace_back(std::min(pool[i], pool[j]), std::max(pool[i], pool[j]));
          choices.push_back({v, pool[i], pool[j]});
          recurse(next, rank + 1);
          partial.merges.pop_back();
          choices.pop_back();
        }
    }
  }
};

struct TajimaEnumerator {
  const TajimaPhylogeny& tree;
  std::uint64_t budget;

  int n = 0;
  std::uint64_t paths = 0;
  TajimaSupport support;
  std::vector<TajimaEvent> events;
  std::vector<std::pair<std::string, double>> path_log;  // chain encoding, path q

  struct State {
    std::vector<int> singles;
    std::vector<std::vector<int>> vintages;
    std::vector<int> open_children;
  };

  void run() {
    State state;
    state.singles.resize(tree.n_nodes());
    state.vintages.resize(tree.n_nodes());
    state.open_children.resize(tree.n_nodes());
    for (int v = 0; v < tree.n_nodes(); ++v) {
      state.singles[v] = tree.nodes[v].count;
      n += tree.nodes[v].count;
      state.open_children[v] = static_cast<int>(tree.nodes[v].children.size());
    }
    for (int v = tree.n_nodes() - 1; v >= 0; --v) settle(state, v);
    recurse(state, 1, 1.0);

    for (auto& [encoding, entry] : support.chains) support.total_q += entry.q;
    for (const auto& [encoding, q] : path_log)
      support.identity_sum += q / support.chains.at(encoding).q;
  }

  void settle(State& state, int v) {
    while (v != tree.root &&
           state.singles[v] + static_cast<int>(state.vintages[v].size()) == 1 &&
           state.open_children[v] == 0) {
      const int parent = tree.nodes[v].parent;
      if (state.singles[v] == 1) {
        --state.singles[v];
        ++state.singles[parent];
      } else {
        state.vintages[parent].push_back(state.vintages[v].front());
        std::sort(state.vintages[parent].begin(), state.vintages[parent].end());
        state.vintages[v].clear();
      }
      --state.open_children[parent];
      v = parent;
    }
  }

  int count(const State& state, int v) const {
    return state.singles[v] + static_cast<int>(state.vintages[v].size());
  }

  void recurse(const State& state, int rank, double q) {
    if (rank == n) {
      if (++paths > budget)
        throw BudgetExceeded("path enumeration exceeded " + std::to_string(budget) +
                                 " paths",
                             budget);
      TajimaChain chain{n, events};
      const std::string encoding = chain.encode();
      auto [it, inserted] = support.chains.try_emplace(encoding);
      if (inserted) it->second.chain = chain;
      it->second.q += q;
      ++it->second.orderings;
      path_log.emplace_back(encoding, q);
      return;
    }
    int total = 0;
    for (int v = 0; v < tree.n_nodes(); ++v)
      if (count(state, v) >= 2) total += count(state, v);

    for (int v = 0; v < tree.n_nodes(); ++v) {
      const int c = count(state, v);
      if (c < 2) continue;
      const double q_node = q * double(c) / double(total);
      const double pairs = 0.5 * c * (c - 1);
      const int alpha = state.singles[v];

      if (alpha >= 2)
        descend(state, v, rank, {TajimaEvent::Kind::cherry, 0, 0},
                q_node * (0.5 * alpha * (alpha - 1)) / pairs);
      if (alpha >= 1)
        for (int r : state.vintages[v])
          descend(state, v, rank, {TajimaEvent::Kind::singleton_vintage, 0, r},
                  q_node * double(alpha) / pairs);
      const auto& pool = state.vintages[v];
      for (std::size_t i = 0; i < pool.size(); ++i)
        for (std::size_t j = i + 1; j < pool.size(); ++j)
          descend(state, v, rank, {TajimaEvent::Kind::vintage_vintage, pool[i], pool[j]},
                  q_node / pairs);
    }
  }

  void descend(const State& state, int v, int rank, TajimaEvent event, double q) {
    State next = state;
    switch (event.kind) {
      case TajimaEvent::Kind::cherry:
        next.singles[v] -= 2;
        break;
      case TajimaEvent::Kind::singleton_vintage:
        --next.singles[v];
        std::erase(next.vintages[v], event.high);
        break;
      case TajimaEvent::Kind::vintage_vintage:
        std::erase(next.vintages[v], event.low);
        std::erase(next.vintages[v], event.high);
        break;
    }
    next.vintages[v].push_back(rank);
    settle(next, v);
    events.push_back(event);
    recurse(next, rank + 1, q);
    events.pop_back();
  }
};

}  // namespace

ExactCounts closed_form_unconstrained(int n) {
  if (n < 1) throw ConfigError("counts need n >= 1");
  ExactCounts out;
  out.kingman = factorial(n) * factorial(n - 1);
  out.kingman >>= (n - 1);
  out.tajima = zigzag(n - 1);
  out.labeled = double_factorial_odd(2 * n - 3);
  out.shape = wedderburn_etherington(n);
  return out;
}

std::string scientific_3sig(const BigInt& value) {
  const std::string digits = value.str();
  const int exponent = static_cast<int>(digits.size()) - 1;
  if (exponent < 3) return digits;

  int lead = (digits[0] - '0') * 100 + (digits[1] - '0') * 10 + (digits[2] - '0');
  if (digits[3] >= '5') ++lead;
  int exp_out = exponent;
  if (lead == 1000) {
    lead = 100;
    ++exp_out;
  }
  std::string mantissa = std::to_string(lead);
  return mantissa.substr(0, 1) + "." + mantissa.substr(1) + "e+" + std::to_string(exp_out);
}

ExactCounts enumerate_compatible(const KingmanPhylogeny& tree, std::uint64_t budget,
                                 bool collect, const EnumerationCallback& callback) {
  Enumerator enumerator{tree, budget, collect, callback, 0, 0, {}, {}, {}, {}, {}, {}};
  enumerator.run();
  return std::move(enumerator.counts);
}

TajimaSupport exact_q_tajima(const TajimaPhylogeny& tree, std::uint64_t budget) {
  TajimaEnumerator enumerator{tree, budget, 0, 0, {}, {}, {}};
  enumerator.run();
  return std::move(enumerator.support);
}

}  // namespace coalcount
