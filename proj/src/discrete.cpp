#include "pairlearn/discrete.hpp"

#include <cmath>
#include <stdexcept>

#include "pairlearn/rng.hpp"

namespace pairlearn {

void DiscreteDistribution::validate() const {
  if (atoms.size() != probs.size()) throw std::invalid_argument("atoms/probs size mismatch");
  if (atoms.empty()) throw std::invalid_argument("empty distribution");
  double mass = 0.0;
  for (double p : probs) {
    if (p < 0.0) throw std::invalid_argument("negative atom probability");
    mass += p;
  }
  if (std::fabs(mass - 1.0) > 1e-12) throw std::invalid_argument("atom mass must sum to 1");
  for (const auto& a : atoms) {
    if (static_cast<int>(a.x.size()) != d) throw std::invalid_argument("atom dimension mismatch");
    if (label_bound > 0.0 && std::fabs(a.y) > label_bound)
      throw std::invalid_argument("atom label exceeds bound");
  }
}

int DiscreteDistribution::find_atom(const SamplePoint& z) const {
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    if (atoms[k].y != z.y) continue;
    bool same = atoms[k].x.size() == z.x.size();
    for (std::size_t j = 0; same && j < z.x.size(); ++j) same = atoms[k].x[j] == z.x[j];
    if (same) return static_cast<int>(k);
  }
  return -1;
}

static int pick_atom(const std::vector<double>& probs, double u) {
  double c = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    c += probs[k];
    if (u < c) return static_cast<int>(k);
  }
  return static_cast<int>(probs.size()) - 1;
}

SampleSet DiscreteDistribution::sample(int n, uint64_t seed) const {
  validate();
  SampleSet s;
  s.d = d;
  s.label_bound = label_bound;
  s.seed = seed;
  s.origin = "discrete";
  CounterRng rng(seed, 11);
  s.points.reserve(n);
  for (int i = 0; i < n; ++i)
    s.points.push_back(atoms[pick_atom(probs, rng.uniform(static_cast<uint64_t>(i)))]);
  return s;
}

std::vector<int> DiscreteDistribution::sample_counts(int n, uint64_t seed, uint64_t stream) const {
  std::vector<int> counts(atoms.size(), 0);
  CounterRng rng(seed, 1000 + stream);
  for (int i = 0; i < n; ++i)
    ++counts[pick_atom(probs, rng.uniform(static_cast<uint64_t>(i)))];
  return counts;
}

DiscreteDistribution DiscreteDistribution::random(int d, int n_atoms, double label_bound,
                                                  uint64_t seed) {
  DiscreteDistribution dist;
  dist.d = d;
  dist.label_bound = label_bound;
  SeqRng rng(seed, 13);
  dist.atoms.resize(n_atoms);
  double mass = 0.0;
  dist.probs.resize(n_atoms);
  for (int k = 0; k < n_atoms; ++k) {
    dist.atoms[k].x.resize(d);
    for (int j = 0; j < d; ++j) dist.atoms[k].x[j] = rng.uniform();
    dist.atoms[k].y = rng.uniform(-label_bound, label_bound);
    dist.probs[k] = 0.1 + rng.uniform();  // keep every atom non-negligible
    mass += dist.probs[k];
  }
  for (int k = 0; k < n_atoms; ++k) dist.probs[k] /= mass;
  // make the weights sum to 1 exactly so validate() is happy bit-wise
  double s = 0.0;
  for (int k = 0; k + 1 < n_atoms; ++k) s += dist.probs[k];
  dist.probs[n_atoms - 1] = 1.0 - s;
  return dist;
}

}  // namespace pairlearn
