#pragma once

#include "coalcount/incidence.hpp"
#include "coalcount/kingman_sampler.hpp"
#include "coalcount/rng.hpp"

namespace coalcount {

/// A uniformly ranked random topology with exponential waiting times: while k
/// lineages remain, the next merge waits Exp(k(k-1)/2) and joins a uniform
/// pair.
struct TimedGenealogy {
  MergeSequence topology;           // leaves labeled i1..in
  std::vector<double> wait_times;   // by merge rank: time spent with n..2 lineages

  double total_branch_length() const;  // sum over lineages of their lifetime
};

TimedGenealogy simulate_genealogy(int n, SplitMix64& rng);

/// Drops m mutations on the genealogy, each on a branch picked proportional to
/// branch length (root has no branch), and returns who carries what. Columns
/// are s1..sm in placement order; one uniform variate per mutation.
IncidenceMatrix place_mutations(const TimedGenealogy& genealogy, int m, SplitMix64& rng);

struct SimulatedData {
  IncidenceMatrix matrix;
  double tree_length = 0.0;
  int n_mutations = 0;
};

/// Genealogy, then Poisson(mu * length) mutations. Uses two derived substreams
/// of `seed` so the genealogy is reproducible independently of the mutations.
SimulatedData simulate_matrix(int n, double mu, std::uint64_t seed);

}  // namespace coalcount
