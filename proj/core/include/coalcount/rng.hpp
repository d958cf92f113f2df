#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

namespace coalcount {

// Counter-based splitmix64. Every distribution below is implemented by hand so
// that streams are bit-identical across platforms and standard libraries.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() { return ~0ull; }

  std::uint64_t operator()() {
    state_ += 0x9E3779B97F4A7C15ull;
    return finalize(state_);
  }

  /// Unbiased integer in [0, bound) via rejection; bound must be > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = -bound % bound;  // 2^64 mod bound
    for (;;) {
      const std::uint64_t x = (*this)();
      if (x >= threshold) return x % bound;
    }
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Unordered index pair {i, j}, 0 <= i < j < k, uniform over the binom(k,2) pairs.
  std::pair<int, int> pair_below(int k) {
    const std::uint64_t m = static_cast<std::uint64_t>(k) * (k - 1) / 2;
    std::uint64_t r = below(m);
    // r = j*(j-1)/2 + i enumerates pairs with i < j.
    int j = 1;
    while (static_cast<std::uint64_t>(j) * (j + 1) / 2 <= r) ++j;
    const int i = static_cast<int>(r - static_cast<std::uint64_t>(j) * (j - 1) / 2);
    return {i, j};
  }

  double exponential(double rate) {
    double u;
    do {
      u = uniform01();
    } while (u == 0.0);
    return -std::log(u) / rate;
  }

  /// Knuth's product method, splitting large means so the product never underflows.
  std::uint64_t poisson(double mean) {
    std::uint64_t total = 0;
    while (mean > 30.0) {
      total += poisson_small(30.0);
      mean -= 30.0;
    }
    return total + poisson_small(mean);
  }

  static std::uint64_t mix(std::uint64_t x) { return finalize(x); }

 private:
  std::uint64_t poisson_small(double mean) {
    const double limit = std::exp(-mean);
    std::uint64_t count = 0;
    double product = uniform01();
    while (product > limit) {
      ++count;
      product *= uniform01();
    }
    return count;
  }

  static std::uint64_t finalize(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
};

// Derives independent substreams from one user seed: substream i of domain d
// starts at mix(seed ^ mix(d)) + i * golden, which decorrelates draws across
// both the draw index and the consumer domain.
class StreamFamily {
 public:
  StreamFamily(std::uint64_t seed, std::uint64_t domain)
      : base_(SplitMix64::mix(seed ^ SplitMix64::mix(domain))) {}

  SplitMix64 stream(std::uint64_t index) const {
    return SplitMix64(SplitMix64::mix(base_ + 0x9E3779B97F4A7C15ull * (index + 1)));
  }

 private:
  std::uint64_t base_;
};

namespace stream_domain {
inline constexpr std::uint64_t kingman = 0x6b696e67ull;
inline constexpr std::uint64_t tajima = 0x74616a69ull;
inline constexpr std::uint64_t genealogy = 0x67656e65ull;
inline constexpr std::uint64_t mutation = 0x6d757461ull;
}  // namespace stream_domain

}  // namespace coalcount
