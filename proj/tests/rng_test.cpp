#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include <doctest.h>

#include "coalcount/rng.hpp"

#include "support.hpp"

using coalcount::SplitMix64;
using coalcount::StreamFamily;

TEST_SUITE("rng") {

TEST_CASE("same seed gives the same sequence") {
  SplitMix64 a(12345), b(12345);
  for (int i = 0; i < 100; ++i) CHECK(a() == b());
  SplitMix64 c(12346);
  bool all_equal = true;
  SplitMix64 a2(12345);
  for (int i = 0; i < 100; ++i) all_equal = all_equal && (a2() == c());
  CHECK_FALSE(all_equal);
}

TEST_CASE("stream families separate domains and indices") {
  StreamFamily fam(7, coalcount::stream_domain::kingman);
  StreamFamily fam_same(7, coalcount::stream_domain::kingman);
  StreamFamily fam_other(7, coalcount::stream_domain::tajima);

  SplitMix64 s0 = fam.stream(0);
  SplitMix64 s0_again = fam_same.stream(0);
  CHECK(s0() == s0_again());

  // Distinct indices and distinct domains must not replay each other.
  std::set<std::uint64_t> first_values;
  for (std::uint64_t i = 0; i < 50; ++i) {
    SplitMix64 s = fam.stream(i);
    first_values.insert(s());
  }
  CHECK(first_values.size() == 50);
  SplitMix64 other = fam_other.stream(0);
  SplitMix64 mine = fam.stream(0);
  CHECK(mine() != other());
}

TEST_CASE("below stays in range and is unbiased enough") {
  SplitMix64 rng(99);
  for (std::uint64_t bound : {1ull, 2ull, 7ull, 1000ull, 1ull << 40}) {
    for (int i = 0; i < 2000; ++i) {
      const std::uint64_t x = rng.below(bound);
      REQUIRE(x < bound);
    }
  }

  // Frequency of each residue for a small bound.
  const int cells = 8;
  std::vector<int> counts(cells, 0);
  const int n = 80000;
  for (int i = 0; i < n; ++i) ++counts[rng.below(cells)];
  double chi2 = 0.0;
  const double expect = double(n) / cells;
  for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
  CHECK(testsupport::chi_square_pvalue(chi2, cells - 1) > 0.001);
}

TEST_CASE("uniform01 lands in [0,1) with the right moments") {
  SplitMix64 rng(4);
  const int n = 100000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sum2 += u * u;
  }
  const double mean = sum / n;
  const double var = sum2 / n - mean * mean;
  // SE of the mean is about 0.0009; allow 5 of them.
  CHECK(std::fabs(mean - 0.5) < 0.005);
  CHECK(std::fabs(var - 1.0 / 12.0) < 0.005);
}

TEST_CASE("pair_below covers every unordered pair uniformly") {
  SplitMix64 rng(11);
  const int k = 5;
  const int pairs = k * (k - 1) / 2;
  std::vector<int> counts(pairs, 0);
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const auto [a, b] = rng.pair_below(k);
    REQUIRE(a >= 0);
    REQUIRE(a < b);
    REQUIRE(b < k);
    ++counts[b * (b - 1) / 2 + a];
  }
  double chi2 = 0.0;
  const double expect = double(n) / pairs;
  for (int c : counts) {
    CHECK(c > 0);
    chi2 += (c - expect) * (c - expect) / expect;
  }
  CHECK(testsupport::chi_square_pvalue(chi2, pairs - 1) > 0.001);
}

TEST_CASE("pair_below handles the smallest and larger sizes") {
  SplitMix64 rng(13);
  for (int i = 0; i < 50; ++i) {
    const auto [a, b] = rng.pair_below(2);
    CHECK(a == 0);
    CHECK(b == 1);
  }
  std::set<std::pair<int, int>> seen;
  for (int i = 0; i < 20000; ++i) {
    const auto p = rng.pair_below(30);
    REQUIRE(p.first < p.second);
    REQUIRE(p.second < 30);
    seen.insert(p);
  }
  CHECK(seen.size() == 30 * 29 / 2);
}

TEST_CASE("exponential has the requested mean") {
  SplitMix64 rng(21);
  for (double rate : {1.0, 0.25, 10.0}) {
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = rng.exponential(rate);
      REQUIRE(x > 0.0);
      sum += x;
    }
    const double mean = sum / n;
    // SE of the mean is (1/rate)/sqrt(n); allow 5 of them.
    CHECK(std::fabs(mean - 1.0 / rate) < 5.0 / (rate * std::sqrt(double(n))));
  }
}

TEST_CASE("poisson matches mean and variance, small and split regimes") {
  SplitMix64 rng(31);
  for (double mean : {0.5, 3.2, 77.5}) {
    const int n = 60000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = double(rng.poisson(mean));
      sum += x;
      sum2 += x * x;
    }
    const double m = sum / n;
    const double v = sum2 / n - m * m;
    const double se = std::sqrt(mean / n);
    CHECK(std::fabs(m - mean) < 5 * se);
    CHECK(std::fabs(v - mean) < 0.1 * mean + 0.05);
  }
  CHECK(rng.poisson(0.0) == 0);
}

}  // TEST_SUITE
