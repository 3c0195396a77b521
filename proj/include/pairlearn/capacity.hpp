#pragma once
#include <cstdint>
#include <vector>

#include "pairlearn/discrete.hpp"
#include "pairlearn/loss.hpp"
#include "pairlearn/metrics.hpp"
#include "pairlearn/net.hpp"
#include "pairlearn/sample.hpp"

namespace pairlearn {

// a finite function class evaluated on a weighted point set; all distances
// and moments are weighted L2 quantities on those points
struct FunctionClassSample {
  std::vector<std::vector<double>> values;  // [member][point]
  std::vector<double> weights;              // per point, nonnegative, sums to 1

  std::size_t size() const { return values.size(); }
  std::size_t npoints() const { return weights.size(); }
  double dist(std::size_t i, std::size_t j) const;
  double norm(std::size_t i) const;
  double mean(std::size_t i) const;     // E[g] under the weights
  double moment2(std::size_t i) const;  // E[g^2] under the weights
};
double cross_dist(const FunctionClassSample& a, std::size_t i, const FunctionClassSample& b,
                  std::size_t j);

// class builders ------------------------------------------------------------

// values on the ordered sample pairs (the nu_n geometry)
FunctionClassSample class_on_pairs(const std::vector<PairPredictor>& members,
                                   const SampleSet& s);
// values on (inner point x anchor) pairs, the mu_n x rho_x geometry; inner
// points are atoms when given, otherwise a midpoint grid on [0,1]^d (d <= 2)
FunctionClassSample class_on_cross(const std::vector<PairPredictor>& members, const SampleSet& s,
                                   const DiscreteDistribution* atoms, int quad_points);

// loss-difference envelope g_f(z) = E_atom[ l(f(x, X), y, Y) - l(f_ref(x, X), y, Y) ]
double shifted_value(const PairPredictor& f, const PairPredictor& f_ref, const SamplePoint& z,
                     const DiscreteDistribution& dist, const PairwiseLoss& loss);
// g_f evaluated on the atoms themselves (weights = atom masses)
FunctionClassSample shifted_class_atoms(const std::vector<PairPredictor>& members,
                                        const PairPredictor& f_ref,
                                        const DiscreteDistribution& dist,
                                        const PairwiseLoss& loss);
// g_f evaluated on an i.i.d. sample (uniform weights; the rho_n geometry)
FunctionClassSample shifted_class_sample(const std::vector<PairPredictor>& members,
                                         const PairPredictor& f_ref, const SampleSet& s,
                                         const DiscreteDistribution& dist,
                                         const PairwiseLoss& loss);

// {(i/alpha_steps) g : g in class, i = 0..alpha_steps} with exact duplicates
// merged (the zero function appears once)
FunctionClassSample star_hull_grid(const FunctionClassSample& cls, int alpha_steps);

// covering numbers -----------------------------------------------------------

// greedy farthest-point internal net; deterministic lowest-index tie-breaking.
// Every member ends within eps of a returned center.
std::vector<std::size_t> covering_net_greedy(const FunctionClassSample& cls, double eps);
inline std::size_t covering_number_greedy(const FunctionClassSample& cls, double eps) {
  return covering_net_greedy(cls, eps).size();
}

// exact minimum number of eps-balls centered at candidate members needed to
// cover every member of universe (branch-and-bound set cover); candidates must
// be evaluated on the same weighted points
std::size_t covering_number_exact(const FunctionClassSample& universe,
                                  const FunctionClassSample& candidates, double eps);
inline std::size_t covering_number_exact(const FunctionClassSample& cls, double eps) {
  return covering_number_exact(cls, cls, eps);
}

// local complexity ------------------------------------------------------------

enum class StarMode {
  None,       // restrict to members with E[g^2] <= r
  Continuous  // scale each member by min(1, sqrt(r / E[g^2])) (the full star hull)
};

struct LocalComplexityCurve {
  std::vector<double> r;
  std::vector<double> phi;  // mean over draws of the sup deviation
  std::vector<double> se;   // Monte Carlo standard error of that mean
};

// phi_hat(r) = E sup over the r-ball of |E[g] - (1/n) sum g(Z_i)|, resampling
// n-point multinomial counts from the class weights; one common draw set
// serves the whole r grid, so phi_hat is exactly nondecreasing in r
LocalComplexityCurve local_complexity_curve(const FunctionClassSample& cls, int n,
                                            const std::vector<double>& r_grid, int mc_draws,
                                            uint64_t seed, StarMode mode);
double local_complexity(const FunctionClassSample& cls, int n, double r, int mc_draws,
                        uint64_t seed, StarMode mode);

// fixed point of psi(r) = r given samples of a (sub-root) psi on a grid:
// bisection on the bracketing cell under log-log interpolation
double fixed_point(const std::vector<double>& r_grid, const std::vector<double>& psi);

// sizing ----------------------------------------------------------------------

struct NetSize {
  int depth_L = 0;
  long long weights_W = 0;
  long long units_U = 0;
};
// L = ceil((d / (2r + d)) ln n), W = U = ceil(exp(L))
NetSize size_network(long long n, int d, int r);
// pseudo-dimension style budget L * W * ceil(ln U)
long long pdim_budget(const NetComplexity& c);

struct CapacityFit {
  double log_s = 0.0;      // intercept: log covering prefactor
  double exponent_v = 0.0; // slope in log(1/eps)
  double rms_residual = 0.0;
};
// least squares fit of log N(eps) = log s + V log(1/eps)
CapacityFit fit_capacity_exponents(const std::vector<double>& eps_grid,
                                   const std::vector<std::size_t>& counts);

}  // namespace pairlearn
