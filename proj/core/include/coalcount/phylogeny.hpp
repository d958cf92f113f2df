#pragma once

#include <string>
#include <vector>

#include "coalcount/incidence.hpp"

namespace coalcount {

/// Rooted site-labeled tree: every site labels exactly one edge, every
/// haplotype labels exactly one leaf. Node 0 is the root; children were
/// attached in deterministic construction order.
struct PerfectPhylogeny {
  struct Node {
    int parent = -1;                      // -1 at the root
    std::vector<int> children;
    std::vector<std::string> edge_sites;  // sites on the edge above, input order
    int haplotype = -1;                   // leaf payload, -1 on internal nodes
  };
  std::vector<Node> nodes;
  int root = 0;

  int n_nodes() const { return static_cast<int>(nodes.size()); }
};

/// Throws IsmViolation (naming a witness site pair) if the data admit no
/// perfect phylogeny. Zero columns are dropped; sites with identical carrier
/// sets share one edge.
PerfectPhylogeny build_perfect_phylogeny(const HaplotypeData& data);

/// Constraint tree whose leaves hold individual labels ("particles"). Pendant
/// leaves reached by an empty edge are collapsed into their parent, so every
/// leaf is separated from its parent by at least one site.
struct KingmanPhylogeny {
  struct Node {
    int parent = -1;
    std::vector<int> children;
    std::vector<std::string> particles;
  };
  std::vector<Node> nodes;
  int root = 0;

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_particles() const;
};

/// Same reduction at sample-size resolution: nodes carry multiplicities only.
struct TajimaPhylogeny {
  struct Node {
    int parent = -1;
    std::vector<int> children;
    int count = 0;
  };
  std::vector<Node> nodes;
  int root = 0;

  int n_nodes() const { return static_cast<int>(nodes.size()); }
  int n_particles() const;
};

KingmanPhylogeny to_kingman(const PerfectPhylogeny& tree, const HaplotypeData& data);
TajimaPhylogeny to_tajima(const PerfectPhylogeny& tree, const HaplotypeData& data);

enum class TreeFormat { json, dot };

std::string export_phylogeny(const PerfectPhylogeny& tree, TreeFormat format);
std::string export_phylogeny(const KingmanPhylogeny& tree, TreeFormat format);
std::string export_phylogeny(const TajimaPhylogeny& tree, TreeFormat format);

KingmanPhylogeny parse_kingman_json(const std::string& text);
TajimaPhylogeny parse_tajima_json(const std::string& text);

/// Order-insensitive serializations: equal strings == isomorphic trees with
/// equal annotations.
std::string canonical_form(const KingmanPhylogeny& tree);
std::string canonical_form(const TajimaPhylogeny& tree);

}  // namespace coalcount
