#pragma once
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pairlearn/sample.hpp"

namespace pairlearn {

// trigonometric polynomial on [0,1]^d with a certified smoothness budget:
// f(x) = sum_k a_k cos(2 pi k.x) + b_k sin(2 pi k.x) over integer k >= 0,
// ||k||_inf <= k_max.  The certificate bounds every derivative up to order r by
// sum_k (|a_k| + |b_k|) (2 pi ||k||_1)^j <= sobolev_bound for all j <= r.
struct SmoothTarget {
  struct Term {
    std::vector<int> k;
    double a_cos = 0.0;
    double a_sin = 0.0;
  };
  int d = 1;
  int r = 1;
  int k_max = 1;
  uint64_t seed = 0;
  double sobolev_bound = 0.0;
  std::vector<Term> terms;

  double eval(std::span<const double> x) const;
  // exact partial derivative of multi-order alpha (sum alpha_i = derivative order)
  double eval_deriv(std::span<const double> x, std::span<const int> alpha) const;
  double sup_bound() const;   // sum of coefficient magnitudes, >= sup |f|
  double l2_squared() const;  // closed-form integral of f^2 over [0,1]^d
  double mean() const;        // closed-form integral of f
  // recomputes max_j sum (|a|+|b|)(2 pi ||k||_1)^j over j = 0..r
  double certificate() const;

  std::string to_json() const;
  static SmoothTarget from_json(const std::string& text);
  void save(const std::string& path) const;
  static SmoothTarget load_file(const std::string& path);
};

// draws coefficients with decay (1+||k||_1)^{-(r+d+1)} and rescales so the
// certificate is (just under) 1
SmoothTarget generate_target(int d, int r, int k_max, uint64_t seed);

struct NoiseModel {
  enum Kind { UniformBounded, TwoPoint } kind = UniformBounded;
  double sigma = 0.3;
  double draw(uint64_t seed, uint64_t counter) const;
};

// optimal pairwise predictor for the least-squares pair loss
struct BayesPredictor {
  const SmoothTarget* target;
  double operator()(std::span<const double> x, std::span<const double> xp) const {
    return target->eval(x) - target->eval(xp);
  }
};

// n observations: X uniform on [0,1]^d, Y = target(X) + noise
SampleSet sample_data(const SmoothTarget& target, const NoiseModel& noise, int n, uint64_t seed);

// ||f - f_rho||^2 under the product design, composite midpoint rule with
// quad_points nodes per axis (pair integral => (quad_points^d)^2 evaluations)
double excess_risk_ls(const PairPredictor& f, const SmoothTarget& target, int quad_points);

struct VarianceExpectationReport {
  int checked = 0;
  int violations = 0;
  int invalid = 0;       // candidates whose loss-difference mean was significantly negative
  double worst_margin = 0.0;  // max over candidates of mean(q^2 - 64 B^2 q) in SE units
};

// Monte Carlo check of E[q^2] <= 64 B^2 E[q] for q = l(f) - l(bayes), one draw
// set per candidate; a candidate violates when the mean exceeds 3 SE above 0
VarianceExpectationReport verify_variance_expectation(
    const std::vector<PairPredictor>& candidates, const SmoothTarget& target,
    const NoiseModel& noise, int mc_n, uint64_t seed,
    const PairPredictor* reference = nullptr);

}  // namespace pairlearn
