#include "coalcount/phylogeny.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "coalcount/errors.hpp"

namespace coalcount {

namespace {

using json = nlohmann::ordered_json;

// One edge of the phylogeny under construction: the sites sharing a carrier
// set, plus that set as a bitmask over haplotypes (haplotype 0 = highest bit,
// so numeric order on masks refines the subset partial order).
struct SiteGroup {
  std::vector<std::uint64_t> mask;
  std::vector<int> site_columns;
};

bool mask_subset(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  for (std::size_t w = 0; w < a.size(); ++w)
    if ((a[w] & b[w]) != a[w]) return false;
  return true;
}

bool mask_disjoint(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  for (std::size_t w = 0; w < a.size(); ++w)
    if (a[w] & b[w]) return false;
  return true;
}

bool mask_greater(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  return std::lexicographical_compare(b.rbegin(), b.rend(), a.rbegin(), a.rend());
}

template <typename Tree>
void rebuild_children(Tree& tree) {
  for (auto& node : tree.nodes) node.children.clear();
  for (int v = 0; v < tree.n_nodes(); ++v)
    if (tree.nodes[v].parent >= 0) tree.nodes[tree.nodes[v].parent].children.push_back(v);
}

// Drops pendant leaves whose edge carries no site, attaching their payload to
// the parent; renumbers survivors in original order.
template <typename Out, typename Payload>
Out collapse_empty_pendants(const PerfectPhylogeny& tree, const std::vector<Payload>& payload,
                            void (*attach)(typename Out::Node&, const Payload&)) {
  const int v_count = tree.n_nodes();
  std::vector<bool> drop(v_count, false);
  for (int v = 0; v < v_count; ++v) {
    const auto& node = tree.nodes[v];
    if (node.haplotype >= 0 && node.parent >= 0 && node.edge_sites.empty() &&
        node.children.empty())
      drop[v] = true;
  }

  std::vector<int> new_id(v_count, -1);
  Out out;
  for (int v = 0; v < v_count; ++v) {
    if (drop[v]) continue;
    new_id[v] = out.n_nodes();
    out.nodes.emplace_back();
  }
  for (int v = 0; v < v_count; ++v) {
    if (new_id[v] < 0) continue;
    const auto& node = tree.nodes[v];
    auto& copy = out.nodes[new_id[v]];
    copy.parent = node.parent < 0 ? -1 : new_id[node.parent];
    if (node.haplotype >= 0) attach(copy, payload[node.haplotype]);
  }
  for (int v = 0; v < v_count; ++v) {
    if (!drop[v]) continue;
    const auto& node = tree.nodes[v];
    attach(out.nodes[new_id[node.parent]], payload[node.haplotype]);
  }
  out.root = new_id[tree.root];
  rebuild_children(out);
  return out;
}

json sites_json(const std::vector<std::string>& sites) {
  return json(sites);
}

template <typename Tree>
std::string dot_of(const Tree& tree, const std::vector<std::string>& node_labels,
                   const std::vector<std::vector<std::string>>& edge_sites) {
  std::ostringstream out;
  out << "digraph phylogeny {\n  node [shape=box];\n";
  for (int v = 0; v < tree.n_nodes(); ++v)
    out << "  n" << v << " [label=\"" << node_labels[v] << "\"];\n";
  for (int v = 0; v < tree.n_nodes(); ++v) {
    if (tree.nodes[v].parent < 0) continue;
    out << "  n" << tree.nodes[v].parent << " -> n" << v;
    if (!edge_sites[v].empty()) {
      out << " [label=\"";
      for (std::size_t i = 0; i < edge_sites[v].size(); ++i)
        out << (i ? "," : "") << edge_sites[v][i];
      out << "\"]";
    }
    out << ";\n";
  }
  out << "}\n";
  return out.str();
}

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

template <typename Tree>
std::string canonical_subtree(const Tree& tree, int v, const std::string& annotation) {
  std::vector<std::string> parts;
  for (int child : tree.nodes[v].children) {
    std::string child_annotation;
    if constexpr (std::is_same_v<Tree, KingmanPhylogeny>) {
      auto labels = tree.nodes[child].particles;
      std::sort(labels.begin(), labels.end());
      child_annotation = join(labels, ',');
    } else {
      child_annotation = std::to_string(tree.nodes[child].count);
    }
    parts.push_back(canonical_subtree(tree, child, child_annotation));
  }
  std::sort(parts.begin(), parts.end());
  return "[" + annotation + "](" + join(parts, ' ') + ")";
}

}  // namespace

int KingmanPhylogeny::n_particles() const {
  int total = 0;
  for (const auto& node : nodes) total += static_cast<int>(node.particles.size());
  return total;
}

int TajimaPhylogeny::n_particles() const {
  int total = 0;
  for (const auto& node : nodes) total += node.count;
  return total;
}

PerfectPhylogeny build_perfect_phylogeny(const HaplotypeData& data) {
  const int k = data.k();
  const int words = (k + 63) / 64;

  // Group sites by carrier set, dropping zero columns.
  std::vector<SiteGroup> groups;
  std::map<std::vector<std::uint64_t>, int> group_of;
  for (int j = 0; j < data.m(); ++j) {
    std::vector<std::uint64_t> mask(words, 0);
    bool any = false;
    for (int h = 0; h < k; ++h)
      if (data.haplotypes[h][j]) {
        mask[(k - 1 - h) / 64] |= 1ull << ((k - 1 - h) % 64);
        any = true;
      }
    if (!any) continue;
    auto [it, inserted] = group_of.try_emplace(mask, static_cast<int>(groups.size()));
    if (inserted) groups.push_back({std::move(mask), {}});
    groups[it->second].site_columns.push_back(j);
  }

  for (std::size_t a = 0; a < groups.size(); ++a)
    for (std::size_t b = a + 1; b < groups.size(); ++b) {
      const auto& ma = groups[a].mask;
      const auto& mb = groups[b].mask;
      if (!mask_disjoint(ma, mb) && !mask_subset(ma, mb) && !mask_subset(mb, ma)) {
        const auto& sa = data.site_labels[groups[a].site_columns.front()];
        const auto& sb = data.site_labels[groups[b].site_columns.front()];
        throw IsmViolation("sites '" + sa + "' and '" + sb + "' overlap without nesting",
                           sa, sb);
      }
    }

  // Thread each haplotype root-to-tip through its groups, largest carrier set
  // first; supersets sort strictly greater, so the order follows the nesting.
  std::vector<int> order(groups.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return mask_greater(groups[a].mask, groups[b].mask); });

  PerfectPhylogeny tree;
  tree.nodes.emplace_back();
  std::vector<std::map<int, int>> child_by_group(1);
  std::vector<int> end_node(k, tree.root);

  for (int h = 0; h < k; ++h) {
    int at = tree.root;
    for (int g : order) {
      const int word = (k - 1 - h) / 64;
      if (!(groups[g].mask[word] >> ((k - 1 - h) % 64) & 1)) continue;
      auto [it, inserted] = child_by_group[at].try_emplace(g, tree.n_nodes());
      if (inserted) {
        PerfectPhylogeny::Node node;
        node.parent = at;
        for (int j : groups[g].site_columns) node.edge_sites.push_back(data.site_labels[j]);
        tree.nodes.push_back(std::move(node));
        child_by_group.emplace_back();
      }
      at = it->second;
    }
    end_node[h] = at;
  }

  for (int h = 0; h < k; ++h) {
    const int at = end_node[h];
    if (child_by_group[at].empty() && tree.nodes[at].haplotype < 0 &&
        (at != tree.root || k == 1)) {
      tree.nodes[at].haplotype = h;
    } else {
      PerfectPhylogeny::Node leaf;
      leaf.parent = at;
      leaf.haplotype = h;
      tree.nodes.push_back(std::move(leaf));
      child_by_group.emplace_back();
    }
  }

  rebuild_children(tree);
  return tree;
}

KingmanPhylogeny to_kingman(const PerfectPhylogeny& tree, const HaplotypeData& data) {
  return collapse_empty_pendants<KingmanPhylogeny, std::vector<std::string>>(
      tree, data.groups, [](KingmanPhylogeny::Node& node, const std::vector<std::string>& g) {
        node.particles.insert(node.particles.end(), g.begin(), g.end());
      });
}

TajimaPhylogeny to_tajima(const PerfectPhylogeny& tree, const HaplotypeData& data) {
  return collapse_empty_pendants<TajimaPhylogeny, int>(
      tree, data.frequencies,
      [](TajimaPhylogeny::Node& node, const int& f) { node.count += f; });
}

std::string export_phylogeny(const PerfectPhylogeny& tree, TreeFormat format) {
  if (format == TreeFormat::json) {
    json doc;
    doc["root"] = tree.root;
    doc["nodes"] = json::array();
    for (int v = 0; v < tree.n_nodes(); ++v) {
      const auto& node = tree.nodes[v];
      json entry;
      entry["id"] = v;
      entry["parent"] = node.parent < 0 ? json(nullptr) : json(node.parent);
      entry["sites"] = sites_json(node.edge_sites);
      if (node.haplotype >= 0) entry["haplotype"] = node.haplotype;
      doc["nodes"].push_back(std::move(entry));
    }
    return doc.dump(2) + "\n";
  }
  std::vector<std::string> labels;
  std::vector<std::vector<std::string>> edges;
  for (const auto& node : tree.nodes) {
    labels.push_back(node.haplotype >= 0 ? "h" + std::to_string(node.haplotype + 1) : "*");
    edges.push_back(node.edge_sites);
  }
  return dot_of(tree, labels, edges);
}

std::string export_phylogeny(const KingmanPhylogeny& tree, TreeFormat format) {
  if (format == TreeFormat::json) {
    json doc;
    doc["root"] = tree.root;
    doc["nodes"] = json::array();
    for (int v = 0; v < tree.n_nodes(); ++v) {
      const auto& node = tree.nodes[v];
      json entry;
      entry["id"] = v;
      entry["parent"] = node.parent < 0 ? json(nullptr) : json(node.parent);
      entry["particles"] = json(node.particles);
      doc["nodes"].push_back(std::move(entry));
    }
    return doc.dump(2) + "\n";
  }
  std::vector<std::string> labels;
  std::vector<std::vector<std::string>> edges(tree.n_nodes());
  for (const auto& node : tree.nodes) labels.push_back("{" + join(node.particles, ',') + "}");
  return dot_of(tree, labels, edges);
}

std::string export_phylogeny(const TajimaPhylogeny& tree, TreeFormat format) {
  if (format == TreeFormat::json) {
    json doc;
    doc["root"] = tree.root;
    doc["nodes"] = json::array();
    for (int v = 0; v < tree.n_nodes(); ++v) {
      const auto& node = tree.nodes[v];
      json entry;
      entry["id"] = v;
      entry["parent"] = node.parent < 0 ? json(nullptr) : json(node.parent);
      entry["count"] = node.count;
      doc["nodes"].push_back(std::move(entry));
    }
    return doc.dump(2) + "\n";
  }
  std::vector<std::string> labels;
  std::vector<std::vector<std::string>> edges(tree.n_nodes());
  for (const auto& node : tree.nodes) labels.push_back(std::to_string(node.count));
  return dot_of(tree, labels, edges);
}

namespace {

template <typename Tree, typename FillNode>
Tree parse_tree_json(const std::string& text, FillNode&& fill) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.contains("nodes") || !doc["nodes"].is_array())
    throw ParseError("phylogeny JSON needs a 'nodes' array");
  Tree tree;
  tree.nodes.resize(doc["nodes"].size());
  std::vector<bool> seen(tree.nodes.size(), false);
  for (const auto& entry : doc["nodes"]) {
    const int id = entry.at("id").get<int>();
    if (id < 0 || id >= tree.n_nodes() || seen[id])
      throw ParseError("bad node id " + std::to_string(id));
    seen[id] = true;
    auto& node = tree.nodes[id];
    node.parent = entry.at("parent").is_null() ? -1 : entry.at("parent").get<int>();
    fill(node, entry);
  }
  tree.root = doc.value("root", 0);
  if (tree.root < 0 || tree.root >= tree.n_nodes() || tree.nodes[tree.root].parent != -1)
    throw ParseError("bad root");
  rebuild_children(tree);
  return tree;
}

}  // namespace

KingmanPhylogeny parse_kingman_json(const std::string& text) {
  return parse_tree_json<KingmanPhylogeny>(text, [](KingmanPhylogeny::Node& node,
                                                    const json& entry) {
    for (const auto& p : entry.at("particles")) node.particles.push_back(p.get<std::string>());
  });
}

TajimaPhylogeny parse_tajima_json(const std::string& text) {
  return parse_tree_json<TajimaPhylogeny>(
      text, [](TajimaPhylogeny::Node& node, const json& entry) {
        node.count = entry.at("count").get<int>();
      });
}

std::string canonical_form(const KingmanPhylogeny& tree) {
  auto labels = tree.nodes[tree.root].particles;
  std::sort(labels.begin(), labels.end());
  return canonical_subtree(tree, tree.root, join(labels, ','));
}

std::string canonical_form(const TajimaPhylogeny& tree) {
  return canonical_subtree(tree, tree.root, std::to_string(tree.nodes[tree.root].count));
}

}  // namespace coalcount
