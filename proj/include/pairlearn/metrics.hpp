#pragma once
#include <cstdint>

#include "pairlearn/discrete.hpp"
#include "pairlearn/sample.hpp"

namespace pairlearn {

// the empirical norms the capacity machinery measures distances in
enum class MetricKind {
  MuNCrossRho,  // sqrt((1/n) sum_i E_X[ f(X, X_i)^2 ]), inner mean over the first argument
  NuN,          // sqrt((1/(n(n-1))) sum_{i != j} f(X_i, X_j)^2)
  Xi,           // as NuN but on full observations z = (x, y)
  RhoN          // sqrt((1/n) sum_i g(Z_i)^2)
};

struct EmpiricalMetric {
  MetricKind kind = MetricKind::NuN;
  const SampleSet* sample = nullptr;
  // inner-expectation backend for MuNCrossRho: exact atom sums when set,
  // otherwise midpoint quadrature on [0,1]^d (d <= 2) or Monte Carlo
  const DiscreteDistribution* atoms = nullptr;
  int quad_points_1d = 4096;
  int quad_points_2d = 128;
  int mc_budget = 100000;
  uint64_t seed = 0;
};

double metric_norm(const PairPredictor& f, const EmpiricalMetric& m);  // NuN or MuNCrossRho
double metric_norm_z(const ZPairFunction& f, const EmpiricalMetric& m);  // Xi
double metric_norm_point(const PointFunction& g, const EmpiricalMetric& m);  // RhoN

}  // namespace pairlearn
