#include <cmath>
#include <string>
#include <vector>

#include <doctest.h>

#include "coalcount/incidence.hpp"
#include "coalcount/phylogeny.hpp"
#include "coalcount/rng.hpp"
#include "coalcount/simulator.hpp"

#include "support.hpp"

using namespace coalcount;

TEST_SUITE("simulator") {

TEST_CASE("genealogies have the advertised structure") {
  SplitMix64 rng(101);
  const int n = 10;
  const TimedGenealogy g = simulate_genealogy(n, rng);
  REQUIRE(g.topology.n() == n);
  REQUIRE(int(g.topology.merges.size()) == n - 1);
  REQUIRE(int(g.wait_times.size()) == n - 1);
  CHECK(g.topology.leaf_labels.front() == "i1");
  CHECK(g.topology.leaf_labels.back() == "i10");

  double length = 0.0;
  for (int r = 1; r <= n - 1; ++r) {
    REQUIRE(g.wait_times[r - 1] > 0.0);
    length += double(n - r + 1) * g.wait_times[r - 1];
  }
  CHECK(g.total_branch_length() == doctest::Approx(length).epsilon(1e-12));
}

TEST_CASE("genealogies and matrices are reproducible by seed") {
  SplitMix64 a(42), b(42);
  const TimedGenealogy ga = simulate_genealogy(9, a);
  const TimedGenealogy gb = simulate_genealogy(9, b);
  CHECK(ga.topology.encode() == gb.topology.encode());
  CHECK(ga.wait_times == gb.wait_times);

  const SimulatedData first = simulate_matrix(8, 5.0, 1234);
  const SimulatedData second = simulate_matrix(8, 5.0, 1234);
  CHECK(write_csv(first.matrix) == write_csv(second.matrix));
  CHECK(first.tree_length == second.tree_length);
  CHECK(first.n_mutations == second.n_mutations);

  const SimulatedData other = simulate_matrix(8, 5.0, 1235);
  const bool same = write_csv(first.matrix) == write_csv(other.matrix);
  CHECK_FALSE(same);
}

TEST_CASE("total length matches the coalescent expectation") {
  const int n = 10;
  const int reps = 2000;
  SplitMix64 rng(555);
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < reps; ++i) {
    const double length = simulate_genealogy(n, rng).total_branch_length();
    sum += length;
    sum2 += length * length;
  }
  const double mean = sum / reps;
  const double sd = std::sqrt(sum2 / reps - mean * mean);
  double harmonic = 0.0;
  for (int k = 1; k <= n - 1; ++k) harmonic += 1.0 / k;
  CHECK(std::fabs(mean - 2.0 * harmonic) < 5.0 * sd / std::sqrt(double(reps)));
}

TEST_CASE("the first merge is uniform over pairs") {
  const int n = 5;
  const int pairs = n * (n - 1) / 2;
  std::vector<int> counts(pairs, 0);
  SplitMix64 rng(13579);
  const int reps = 20000;
  for (int i = 0; i < reps; ++i) {
    const auto [a, b] = simulate_genealogy(n, rng).topology.merges[0];
    REQUIRE(a >= 0);
    REQUIRE(a < b);
    REQUIRE(b < n);
    ++counts[b * (b - 1) / 2 + a];
  }
  double chi2 = 0.0;
  const double expect = double(reps) / pairs;
  for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
  CHECK(testsupport::chi_square_pvalue(chi2, pairs - 1) > 0.001);
}

TEST_CASE("mutations land on branches below the root") {
  SplitMix64 grng(31);
  const int n = 8;
  const TimedGenealogy g = simulate_genealogy(n, grng);
  SplitMix64 mrng(32);
  const IncidenceMatrix matrix = place_mutations(g, 25, mrng);
  REQUIRE(matrix.n_individuals() == n);
  REQUIRE(matrix.n_sites() == 25);
  CHECK(matrix.site_labels().front() == "s1");
  CHECK(matrix.site_labels().back() == "s25");
  CHECK(matrix.individual_labels() == g.topology.leaf_labels);
  for (int s = 0; s < 25; ++s) {
    int carriers = 0;
    for (int i = 0; i < n; ++i) carriers += matrix.at(i, s);
    // Every branch has at least one descendant and the root has no branch.
    REQUIRE(carriers >= 1);
    REQUIRE(carriers <= n - 1);
  }
}

TEST_CASE("simulated matrices always admit a perfect phylogeny") {
  std::uint64_t seed = 9000;
  for (int n : {5, 9, 12}) {
    for (double mu : {1.0, 5.0, 20.0}) {
      const SimulatedData sim = simulate_matrix(n, mu, seed++);
      REQUIRE(sim.matrix.n_individuals() == n);
      REQUIRE(sim.n_mutations == sim.matrix.n_sites());
      REQUIRE(sim.tree_length > 0.0);
      CHECK(ism_conflicts(sim.matrix).empty());
      const HaplotypeData data = deduplicate(sim.matrix);
      const TajimaPhylogeny tree = to_tajima(build_perfect_phylogeny(data), data);
      CHECK(tree.n_particles() == n);
    }
  }
}

TEST_CASE("adding mutations never merges haplotypes") {
  SplitMix64 grng(88);
  const TimedGenealogy g = simulate_genealogy(10, grng);
  int previous = 0;
  for (int m = 0; m <= 30; ++m) {
    // The same stream replayed: the first m placements are shared, so each
    // step only refines the partition.
    SplitMix64 mrng(777);
    const int k = deduplicate(place_mutations(g, m, mrng)).k();
    REQUIRE(k >= previous);
    previous = k;
  }
  CHECK(previous > 1);
}

TEST_CASE("zero mutation rate gives a single haplotype") {
  SplitMix64 grng(5);
  const TimedGenealogy g = simulate_genealogy(6, grng);
  SplitMix64 mrng(6);
  const IncidenceMatrix bare = place_mutations(g, 0, mrng);
  CHECK(bare.n_sites() == 0);
  CHECK(deduplicate(bare).k() == 1);

  const SimulatedData sim = simulate_matrix(6, 0.0, 77);
  CHECK(sim.n_mutations == 0);
  CHECK(sim.matrix.n_sites() == 0);
}

TEST_CASE("simulated output round-trips through the matrix format") {
  const SimulatedData sim = simulate_matrix(7, 8.0, 4242);
  const std::string csv = write_csv(sim.matrix);
  const IncidenceMatrix back = parse_matrix(csv, MatrixFormat::csv);
  CHECK(write_csv(back) == csv);
  CHECK(back.n_individuals() == 7);
  CHECK(back.n_sites() == sim.matrix.n_sites());
}

}  // TEST_SUITE
