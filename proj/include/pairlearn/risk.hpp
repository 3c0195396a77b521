#pragma once
#include <cstdint>

#include "pairlearn/discrete.hpp"
#include "pairlearn/loss.hpp"
#include "pairlearn/net.hpp"
#include "pairlearn/sample.hpp"
#include "pairlearn/target.hpp"

namespace pairlearn {

// (1/(n(n-1))) sum over ordered pairs i != j of l(f(X_i,X_j), Y_i, Y_j),
// enumerated row-major with the diagonal skipped
double empirical_risk(const PairPredictor& f, const SampleSet& s, const PairwiseLoss& loss,
                      bool parallel = true);
double empirical_risk(const AntisymNet& net, const SampleSet& s, const PairwiseLoss& loss,
                      bool parallel = true);
// serial reference for the OpenMP kernel tests
double empirical_risk_serial(const AntisymNet& net, const SampleSet& s, const PairwiseLoss& loss);

// E l(f(X,X'), Y, Y') by Monte Carlo over mc_n independent pairs
double population_risk_mc(const PairPredictor& f, const SmoothTarget& target,
                          const NoiseModel& noise, const PairwiseLoss& loss, int mc_n,
                          uint64_t seed);

// exact population risk when observations are finitely supported
double population_risk_exact(const PairPredictor& f, const DiscreteDistribution& dist,
                             const PairwiseLoss& loss);
double population_risk_exact(const AntisymNet& net, const DiscreteDistribution& dist,
                             const PairwiseLoss& loss);

// ||f - f_rho||^2 under the product design without the std::function hop;
// bit-identical to the generic overload at the same node count
double excess_risk_ls(const AntisymNet& net, const SmoothTarget& target, int quad_points);

}  // namespace pairlearn
