#pragma once
#include <cstdint>
#include <vector>

#include "pairlearn/sample.hpp"

namespace pairlearn {

// finitely supported observation distribution; the backend for everything
// that needs exact conditional expectations
struct DiscreteDistribution {
  std::vector<SamplePoint> atoms;
  std::vector<double> probs;
  int d = 0;
  double label_bound = 0.0;

  std::size_t size() const { return atoms.size(); }
  // throws on negative weights, mass not summing to 1, or malformed atoms
  void validate() const;
  // exact-match lookup, -1 when z is not an atom
  int find_atom(const SamplePoint& z) const;
  // n i.i.d. draws; deterministic in (seed)
  SampleSet sample(int n, uint64_t seed) const;
  // n categorical draws reduced to per-atom counts (for resampling loops)
  std::vector<int> sample_counts(int n, uint64_t seed, uint64_t stream) const;

  static DiscreteDistribution random(int d, int n_atoms, double label_bound, uint64_t seed);
};

}  // namespace pairlearn
