#include "coalcount/incidence.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "coalcount/errors.hpp"

namespace coalcount {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool is_binary_cell(const std::string& cell) { return cell == "0" || cell == "1"; }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

void check_labels_unique(const std::vector<std::string>& labels, const char* kind) {
  std::unordered_set<std::string> seen;
  for (const auto& label : labels) {
    if (!seen.insert(label).second)
      throw ParseError(std::string("duplicate ") + kind + " label '" + label + "'");
  }
}

std::vector<std::string> default_labels(const char* prefix, int count) {
  std::vector<std::string> labels;
  labels.reserve(count);
  for (int i = 1; i <= count; ++i) labels.push_back(prefix + std::to_string(i));
  return labels;
}

IncidenceMatrix parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;
  {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      rows.push_back(split_csv_line(line));
      line_numbers.push_back(line_no);
    }
  }
  if (rows.empty()) throw ParseError("empty matrix");

  auto row_is_labeled_data = [](const std::vector<std::string>& cells) {
    if (is_binary_cell(cells[0])) return false;
    return std::all_of(cells.begin() + 1, cells.end(), is_binary_cell);
  };

  // Header row: any non-binary cell past the first, or a non-binary first cell
  // when the rows below do not follow the label-column pattern.
  bool has_header = false;
  if (std::any_of(rows[0].begin() + 1, rows[0].end(),
                  [](const std::string& c) { return !is_binary_cell(c); })) {
    has_header = true;
  } else if (!is_binary_cell(rows[0][0])) {
    const bool label_column_throughout =
        rows.size() >= 2 && std::all_of(rows.begin(), rows.end(), row_is_labeled_data);
    const bool label_only = rows.size() >= 2 && rows[0].size() == 1 &&
                            std::all_of(rows.begin(), rows.end(),
                                        [](const std::vector<std::string>& r) {
                                          return r.size() == 1 && !is_binary_cell(r[0]);
                                        });
    has_header = !(label_column_throughout || label_only);
  }

  const std::size_t first_data = has_header ? 1 : 0;
  if (first_data >= rows.size()) throw ParseError("matrix has a header but no rows");

  const bool has_labels = !is_binary_cell(rows[first_data][0]);
  const int m = static_cast<int>(rows[first_data].size()) - (has_labels ? 1 : 0);

  std::vector<std::string> site_labels;
  if (has_header) {
    const auto& header = rows[0];
    const int extra = static_cast<int>(header.size()) - m;
    if (extra != 0 && !(extra == 1 && has_labels))
      throw ParseError("header has " + std::to_string(header.size()) + " cells for " +
                           std::to_string(m) + " sites",
                       line_numbers[0]);
    site_labels.assign(header.end() - m, header.end());
  } else {
    site_labels = default_labels("s", m);
  }

  std::vector<std::vector<std::uint8_t>> entries;
  std::vector<std::string> individual_labels;
  for (std::size_t r = first_data; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    const int expected = m + (has_labels ? 1 : 0);
    if (static_cast<int>(cells.size()) != expected)
      throw ParseError("row has " + std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(expected),
                       line_numbers[r]);
    if (has_labels != !is_binary_cell(cells[0]))
      throw ParseError("inconsistent label column", line_numbers[r], 1);
    individual_labels.push_back(has_labels ? cells[0]
                                           : "i" + std::to_string(r - first_data + 1));
    std::vector<std::uint8_t> row(m);
    for (int c = 0; c < m; ++c) {
      const auto& cell = cells[c + (has_labels ? 1 : 0)];
      if (!is_binary_cell(cell))
        throw ParseError("entry '" + cell + "' is not 0 or 1", line_numbers[r],
                         c + (has_labels ? 2 : 1));
      row[c] = cell == "1" ? 1 : 0;
    }
    entries.push_back(std::move(row));
  }

  return IncidenceMatrix(std::move(entries), std::move(individual_labels),
                         std::move(site_labels));
}

IncidenceMatrix parse_plain01(const std::string& text) {
  std::vector<std::vector<std::uint8_t>> entries;
  std::vector<std::string> individual_labels;
  bool any_label = false;

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    std::string label;
    std::string bits = line;
    if (auto tab = line.find('\t'); tab != std::string::npos) {
      label = trim(line.substr(0, tab));
      bits = trim(line.substr(tab + 1));
      any_label = true;
    }
    std::vector<std::uint8_t> row;
    row.reserve(bits.size());
    for (std::size_t c = 0; c < bits.size(); ++c) {
      if (bits[c] != '0' && bits[c] != '1')
        throw ParseError(std::string("character '") + bits[c] + "' is not 0 or 1", line_no,
                         static_cast<int>(c) + 1);
      row.push_back(bits[c] == '1' ? 1 : 0);
    }
    entries.push_back(std::move(row));
    individual_labels.push_back(label);
  }
  if (entries.empty()) throw ParseError("empty matrix");

  for (std::size_t r = 0; r < entries.size(); ++r) {
    if (entries[r].size() != entries[0].size())
      throw ParseError("row has " + std::to_string(entries[r].size()) +
                       " sites, expected " + std::to_string(entries[0].size()));
    if (any_label && individual_labels[r].empty())
      throw ParseError("row is missing its label", static_cast<int>(r) + 1);
    if (!any_label) individual_labels[r] = "i" + std::to_string(r + 1);
  }

  return IncidenceMatrix(std::move(entries), std::move(individual_labels),
                         default_labels("s", static_cast<int>(entries[0].size())));
}

// Carrier sets as bitmasks over rows, one word per 64 individuals.
std::vector<std::vector<std::uint64_t>> carrier_masks(const IncidenceMatrix& m) {
  const int words = (m.n_individuals() + 63) / 64;
  std::vector<std::vector<std::uint64_t>> masks(m.n_sites(),
                                                std::vector<std::uint64_t>(words, 0));
  for (int i = 0; i < m.n_individuals(); ++i)
    for (int j = 0; j < m.n_sites(); ++j)
      if (m.at(i, j)) masks[j][i / 64] |= 1ull << (i % 64);
  return masks;
}

bool masks_conflict(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  bool inter_empty = true, inter_is_a = true, inter_is_b = true;
  for (std::size_t w = 0; w < a.size(); ++w) {
    const std::uint64_t inter = a[w] & b[w];
    if (inter != 0) inter_empty = false;
    if (inter != a[w]) inter_is_a = false;
    if (inter != b[w]) inter_is_b = false;
  }
  return !inter_empty && !inter_is_a && !inter_is_b;
}

}  // namespace

IncidenceMatrix::IncidenceMatrix(std::vector<std::vector<std::uint8_t>> rows,
                                 std::vector<std::string> individual_labels,
                                 std::vector<std::string> site_labels)
    : rows_(std::move(rows)),
      individual_labels_(std::move(individual_labels)),
      site_labels_(std::move(site_labels)),
      n_sites_(static_cast<int>(site_labels_.size())) {
  if (rows_.size() < 2) throw ParseError("matrix needs at least 2 individuals");
  if (rows_.size() != individual_labels_.size())
    throw ParseError("row/label count mismatch");
  for (const auto& row : rows_)
    if (static_cast<int>(row.size()) != n_sites_) throw ParseError("ragged matrix");
  check_labels_unique(individual_labels_, "individual");
  check_labels_unique(site_labels_, "site");
}

IncidenceMatrix IncidenceMatrix::select_sites(const std::vector<int>& site_indices) const {
  std::vector<std::vector<std::uint8_t>> rows(rows_.size());
  std::vector<std::string> sites;
  sites.reserve(site_indices.size());
  for (int j : site_indices) sites.push_back(site_labels_[j]);
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    rows[i].reserve(site_indices.size());
    for (int j : site_indices) rows[i].push_back(rows_[i][j]);
  }
  return IncidenceMatrix(std::move(rows), individual_labels_, std::move(sites));
}

IncidenceMatrix parse_matrix(const std::string& text, MatrixFormat format) {
  return format == MatrixFormat::csv ? parse_csv(text) : parse_plain01(text);
}

IncidenceMatrix parse_matrix(std::istream& in, MatrixFormat format) {
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_matrix(buffer.str(), format);
}

std::string write_csv(const IncidenceMatrix& matrix) {
  std::ostringstream out;
  if (matrix.n_sites() > 0) {
    for (const auto& s : matrix.site_labels()) out << ',' << s;
    out << '\n';
  }
  for (int i = 0; i < matrix.n_individuals(); ++i) {
    out << matrix.individual_labels()[i];
    for (int j = 0; j < matrix.n_sites(); ++j) out << ',' << int(matrix.at(i, j));
    out << '\n';
  }
  return out.str();
}

int HaplotypeData::n() const {
  return std::accumulate(frequencies.begin(), frequencies.end(), 0);
}

HaplotypeData deduplicate(const IncidenceMatrix& matrix) {
  HaplotypeData data;
  data.site_labels = matrix.site_labels();
  std::map<std::vector<std::uint8_t>, int> index_of;
  for (int i = 0; i < matrix.n_individuals(); ++i) {
    const auto& row = matrix.row(i);
    auto [it, inserted] = index_of.try_emplace(row, data.k());
    if (inserted) {
      data.haplotypes.push_back(row);
      data.frequencies.push_back(0);
      data.groups.emplace_back();
    }
    ++data.frequencies[it->second];
    data.groups[it->second].push_back(matrix.individual_labels()[i]);
  }
  return data;
}

std::vector<std::pair<std::string, std::string>> ism_conflicts(const IncidenceMatrix& matrix) {
  const auto masks = carrier_masks(matrix);
  std::vector<std::pair<std::string, std::string>> conflicts;
  for (int a = 0; a < matrix.n_sites(); ++a)
    for (int b = a + 1; b < matrix.n_sites(); ++b)
      if (masks_conflict(masks[a], masks[b]))
        conflicts.emplace_back(matrix.site_labels()[a], matrix.site_labels()[b]);
  return conflicts;
}

FilterResult filter_to_ism(const IncidenceMatrix& matrix) {
  auto masks = carrier_masks(matrix);
  std::vector<int> kept(matrix.n_sites());
  std::iota(kept.begin(), kept.end(), 0);
  std::vector<std::string> removed;

  for (;;) {
    std::vector<int> conflict_count(kept.size(), 0);
    for (std::size_t a = 0; a < kept.size(); ++a)
      for (std::size_t b = a + 1; b < kept.size(); ++b)
        if (masks_conflict(masks[kept[a]], masks[kept[b]])) {
          ++conflict_count[a];
          ++conflict_count[b];
        }
    const auto worst = std::max_element(conflict_count.begin(), conflict_count.end());
    if (worst == conflict_count.end() || *worst == 0) break;
    const auto pos = worst - conflict_count.begin();
    removed.push_back(matrix.site_labels()[kept[pos]]);
    kept.erase(kept.begin() + pos);
  }

  return {matrix.select_sites(kept), std::move(removed)};
}

}  // namespace coalcount
