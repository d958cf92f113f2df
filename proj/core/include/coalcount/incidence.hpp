#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace coalcount {

enum class MatrixFormat { csv, plain01 };

/// n individuals x m sites, entries 0/1. Individual and site labels are unique;
/// defaults i1..in and s1..sm are assigned when the input carries none.
class IncidenceMatrix {
 public:
  IncidenceMatrix(std::vector<std::vector<std::uint8_t>> rows,
                  std::vector<std::string> individual_labels,
                  std::vector<std::string> site_labels);

  int n_individuals() const { return static_cast<int>(rows_.size()); }
  int n_sites() const { return n_sites_; }
  std::uint8_t at(int individual, int site) const { return rows_[individual][site]; }
  const std::vector<std::uint8_t>& row(int individual) const { return rows_[individual]; }
  const std::vector<std::string>& individual_labels() const { return individual_labels_; }
  const std::vector<std::string>& site_labels() const { return site_labels_; }

  /// New matrix keeping the given site columns, in the given order.
  IncidenceMatrix select_sites(const std::vector<int>& site_indices) const;

 private:
  std::vector<std::vector<std::uint8_t>> rows_;
  std::vector<std::string> individual_labels_;
  std::vector<std::string> site_labels_;
  int n_sites_;
};

IncidenceMatrix parse_matrix(const std::string& text, MatrixFormat format);
IncidenceMatrix parse_matrix(std::istream& in, MatrixFormat format);

/// CSV with a site-label header row and an individual-label column; inverse of
/// parse_matrix(., csv).
std::string write_csv(const IncidenceMatrix& matrix);

/// Distinct rows of an incidence matrix in first-occurrence order, with the
/// individuals carrying each row.
struct HaplotypeData {
  std::vector<std::vector<std::uint8_t>> haplotypes;   // k x m
  std::vector<int> frequencies;                        // group sizes, sum = n
  std::vector<std::vector<std::string>> groups;        // individual labels per haplotype
  std::vector<std::string> site_labels;

  int k() const { return static_cast<int>(haplotypes.size()); }
  int n() const;
  int m() const { return static_cast<int>(site_labels.size()); }
};

HaplotypeData deduplicate(const IncidenceMatrix& matrix);

/// All site pairs whose carrier sets overlap without nesting, i.e. the pairs
/// that rule out a perfect phylogeny. Empty result == compatible data.
std::vector<std::pair<std::string, std::string>> ism_conflicts(const IncidenceMatrix& matrix);

struct FilterResult {
  IncidenceMatrix matrix;
  std::vector<std::string> removed_sites;  // in removal order
};

/// Greedily removes the site with the most conflicts (ties: lowest column
/// index) until no conflicts remain.
FilterResult filter_to_ism(const IncidenceMatrix& matrix);

}  // namespace coalcount
