#pragma once
#include <cstdint>
#include <functional>
#include <vector>

#include "pairlearn/discrete.hpp"
#include "pairlearn/loss.hpp"
#include "pairlearn/sample.hpp"
#include "pairlearn/target.hpp"

namespace pairlearn {

// loss-difference kernel q_f(z, z') = l(f(x,x'), y, y') - l(f_ref(x,x'), y, y')
double q_kernel(const PairPredictor& f, const PairPredictor& f_ref, const SamplePoint& a,
                const SamplePoint& b, const PairwiseLoss& loss);

// n x n matrix of q over the sample, zero diagonal
std::vector<std::vector<double>> kernel_matrix(const PairPredictor& f, const PairPredictor& f_ref,
                                               const SampleSet& s, const PairwiseLoss& loss);

// projection decomposition of the pair average: with m = E[U], the pieces are
//   h(z)      = m - E[q(z, Z)]
//   hhat(z,z') = m - h(z) - h(z') - q(z, z')
//   U_n = pair average of q,  T_n = mean of h over the sample,
//   W_n = pair average of hhat
// and  m - U_n = 2 T_n + W_n  holds identically.
struct HoeffdingDecomposition {
  double u_n = 0.0;
  double expected_u = 0.0;
  double t_n = 0.0;
  double w_n = 0.0;
  std::vector<double> h_values;            // h at each sample point
  std::vector<std::vector<double>> hhat;   // n x n on the sample, zero diagonal
  double identity_residual() const { return expected_u - u_n - 2.0 * t_n - w_n; }
};

// exact conditional expectations on a finite-support distribution, atom level
struct DiscreteKernel {
  std::vector<std::vector<double>> q;  // atoms x atoms
  double expected_u = 0.0;
  std::vector<double> h;  // per atom
  double hhat(int k, int l) const { return expected_u - h[k] - h[l] - q[k][l]; }
  // per-atom degeneracy sum  sum_l p_l hhat(k, l); zero up to roundoff
  std::vector<double> degeneracy(const DiscreteDistribution& dist) const;
};

DiscreteKernel make_discrete_kernel(const PairPredictor& f, const PairPredictor& f_ref,
                                    const DiscreteDistribution& dist, const PairwiseLoss& loss);

// exact backend; every sample point must be an atom of dist
HoeffdingDecomposition hoeffding_decompose_exact(const PairPredictor& f,
                                                 const PairPredictor& f_ref, const SampleSet& s,
                                                 const DiscreteDistribution& dist,
                                                 const PairwiseLoss& loss);

// draws observations for Monte Carlo conditional expectations
struct ZSampler {
  int d = 0;
  std::function<SamplePoint(uint64_t counter)> draw;
};
ZSampler make_synthetic_sampler(const SmoothTarget& target, const NoiseModel& noise,
                                uint64_t seed);
ZSampler make_discrete_sampler(const DiscreteDistribution& dist, uint64_t seed);

// Monte Carlo backend.  The scalar pieces are estimated from independent draw
// sets (one for expected_u, one per h value, and a second pair for the hhat
// matrix), so identity_residual() reflects genuine Monte Carlo error instead
// of cancelling algebraically; it shrinks like 1/sqrt(mc_budget).
struct McHoeffdingDecomposition : HoeffdingDecomposition {
  double expected_u_se = 0.0;
  std::vector<double> h_se;
};
McHoeffdingDecomposition hoeffding_decompose_mc(const PairPredictor& f,
                                                const PairPredictor& f_ref, const SampleSet& s,
                                                const ZSampler& z, int mc_budget,
                                                const PairwiseLoss& loss);

// Rademacher chaos statistics of a family of degenerate kernels on the sample:
// per draw eps, over candidates c:  Z = max |eps' H_c eps| (zero diagonal),
// U = max ||H_c eps||_2, M = max ||H_c eps||_inf; F and D are the sup and
// empirical-L2 norms of the entries.
struct ChaosDiagnostics {
  double z_mean = 0.0, u_mean = 0.0, m_mean = 0.0;
  double f_sup = 0.0, d_sup = 0.0;
  int draws = 0;
  std::vector<double> z_per_draw, u_per_draw, m_per_draw;
};
ChaosDiagnostics chaos_diagnostics(const std::vector<std::vector<std::vector<double>>>& mats,
                                   int mc_draws, uint64_t seed);

// decomposition-level split of the estimation error between an empirical
// minimizer and the best-in-class reference
struct ErrorSplit {
  double s1 = 0.0;  // 2 T_n(fhat) - 2 T_n(f_H)
  double s2 = 0.0;  // W_n(fhat) - W_n(f_H)
};
inline ErrorSplit estimation_error_split(const HoeffdingDecomposition& fhat,
                                         const HoeffdingDecomposition& f_h) {
  return {2.0 * (fhat.t_n - f_h.t_n), fhat.w_n - f_h.w_n};
}

}  // namespace pairlearn
