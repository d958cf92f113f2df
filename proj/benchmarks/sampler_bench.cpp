#include <string>

#include <benchmark/benchmark.h>

#include "coalcount/estimator.hpp"
#include "coalcount/incidence.hpp"
#include "coalcount/kingman_sampler.hpp"
#include "coalcount/oracle.hpp"
#include "coalcount/phylogeny.hpp"
#include "coalcount/rng.hpp"
#include "coalcount/simulator.hpp"
#include "coalcount/tajima_sampler.hpp"

namespace {

using namespace coalcount;

// Six samples, three haplotype groups; the small worked instance used
// throughout the tests.
const char* kSmallCsv =
    ",s1,s2,s3,s4\n"
    "a,0,1,0,0\n"
    "b,1,0,1,0\n"
    "c,0,0,0,1\n"
    "d,0,0,0,1\n"
    "e,0,0,0,1\n"
    "f,0,0,0,1\n";

HaplotypeData data_of(const std::string& csv) {
  return deduplicate(parse_matrix(csv, MatrixFormat::csv));
}

KingmanPhylogeny kingman_fixture(const std::string& csv) {
  const HaplotypeData data = data_of(csv);
  return to_kingman(build_perfect_phylogeny(data), data);
}

TajimaPhylogeny tajima_fixture(const std::string& csv) {
  const HaplotypeData data = data_of(csv);
  return to_tajima(build_perfect_phylogeny(data), data);
}

std::string simulated_csv(int n, double mu, std::uint64_t seed) {
  return write_csv(simulate_matrix(n, mu, seed).matrix);
}

void bm_sample_kingman_small(benchmark::State& state) {
  const KingmanPhylogeny tree = kingman_fixture(kSmallCsv);
  SplitMix64 rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(sample_kingman(tree, rng).log_q);
}
BENCHMARK(bm_sample_kingman_small);

void bm_sample_kingman_n30(benchmark::State& state) {
  const KingmanPhylogeny tree = kingman_fixture(simulated_csv(30, 50.0, 7));
  SplitMix64 rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(sample_kingman(tree, rng).log_q);
}
BENCHMARK(bm_sample_kingman_n30);

void bm_labeled_projection(benchmark::State& state) {
  const KingmanPhylogeny tree = kingman_fixture(simulated_csv(30, 50.0, 7));
  SplitMix64 rng(1);
  const SampleDraw draw = sample_kingman(tree, rng);
  for (auto _ : state) benchmark::DoNotOptimize(project_to_labeled(draw.topology).log_rankings);
}
BENCHMARK(bm_labeled_projection);

void bm_sample_tajima_small(benchmark::State& state) {
  const TajimaPhylogeny tree = tajima_fixture(kSmallCsv);
  SplitMix64 rng(1);
  for (auto _ : state) benchmark::DoNotOptimize(sample_tajima(tree, rng).log_q_path);
}
BENCHMARK(bm_sample_tajima_small);

void bm_backtrack_small(benchmark::State& state) {
  const TajimaPhylogeny tree = tajima_fixture(kSmallCsv);
  SplitMix64 rng(1);
  const TajimaDraw draw = sample_tajima(tree, rng);
  for (auto _ : state) benchmark::DoNotOptimize(backtrack_q(tree, draw.chain).log_q);
}
BENCHMARK(bm_backtrack_small);

// Draw plus ordering search, the per-draw cost of a tajima-side estimate.
void bm_tajima_draw_n20(benchmark::State& state) {
  const TajimaPhylogeny tree = tajima_fixture(simulated_csv(20, 20.0, 9));
  SplitMix64 rng(1);
  for (auto _ : state) {
    const TajimaDraw draw = sample_tajima(tree, rng);
    benchmark::DoNotOptimize(backtrack_q(tree, draw.chain).log_q);
  }
}
BENCHMARK(bm_tajima_draw_n20);

void bm_tajima_draw_n30(benchmark::State& state) {
  const TajimaPhylogeny tree = tajima_fixture(simulated_csv(30, 50.0, 7));
  SplitMix64 rng(1);
  for (auto _ : state) {
    const TajimaDraw draw = sample_tajima(tree, rng);
    benchmark::DoNotOptimize(backtrack_q(tree, draw.chain).log_q);
  }
}
BENCHMARK(bm_tajima_draw_n30);

void bm_shape_projection(benchmark::State& state) {
  const TajimaPhylogeny tree = tajima_fixture(simulated_csv(30, 50.0, 7));
  SplitMix64 rng(1);
  const TajimaDraw draw = sample_tajima(tree, rng);
  for (auto _ : state) benchmark::DoNotOptimize(project_to_shape(draw.chain).log_rankings);
}
BENCHMARK(bm_shape_projection);

void bm_accumulator_add(benchmark::State& state) {
  SplitMix64 rng(3);
  WeightAccumulator acc;
  for (auto _ : state) acc.add(rng.uniform01() * 100.0 - 50.0);
  benchmark::DoNotOptimize(acc.count());
}
BENCHMARK(bm_accumulator_add);

void bm_build_phylogeny_n30(benchmark::State& state) {
  const std::string csv = simulated_csv(30, 50.0, 7);
  for (auto _ : state) {
    const HaplotypeData data = data_of(csv);
    benchmark::DoNotOptimize(build_perfect_phylogeny(data).n_nodes());
  }
}
BENCHMARK(bm_build_phylogeny_n30);

void bm_enumerate_small(benchmark::State& state) {
  const KingmanPhylogeny tree = kingman_fixture(kSmallCsv);
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_compatible(tree).kingman);
}
BENCHMARK(bm_enumerate_small);

void bm_simulate_matrix_n30(benchmark::State& state) {
  std::uint64_t seed = 1;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_matrix(30, 50.0, seed++).n_mutations);
}
BENCHMARK(bm_simulate_matrix_n30);

}  // namespace

BENCHMARK_MAIN();
