#pragma once
#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pairlearn/loss.hpp"
#include "pairlearn/sample.hpp"

namespace pairlearn {

inline double relu(double z) { return z > 0.0 ? z : 0.0; }

// projection head: clamp to [-eta/2, eta/2].  Identical to the two-ReLU form
// relu(t + eta/2) - relu(t - eta/2) - eta/2 wherever that form rounds cleanly,
// and unlike it the clamp can never overshoot the band.
inline double project_eta(double t, double eta) {
  if (eta <= 0.0) throw std::invalid_argument("eta must be positive");
  return std::clamp(t, -eta / 2.0, eta / 2.0);
}
inline double project_eta_relu_form(double t, double eta) {
  return relu(t + eta / 2.0) - relu(t - eta / 2.0) - eta / 2.0;
}
// subgradient with the ReLU-at-0 := 0 convention applied to both kinks:
// 1 on (-eta/2, eta/2], 0 outside and at t = -eta/2
inline double project_eta_grad(double t, double eta) {
  return (t + eta / 2.0 > 0.0 ? 1.0 : 0.0) - (t - eta / 2.0 > 0.0 ? 1.0 : 0.0);
}

struct NetLayer {
  int rows = 0, cols = 0;
  std::vector<double> w;       // rows*cols, row-major
  std::vector<uint8_t> wmask;  // 1 = trainable, 0 = frozen at 0
  std::vector<double> b;       // rows
  std::vector<uint8_t> bmask;
};

struct NetComplexity {
  int depth = 0;
  long long nonzero_weights = 0;
  long long units = 0;
};

// scratch for forward/backward so the pair kernels do not allocate
struct NetWorkspace {
  std::vector<double> a1, a2;     // activations of both argument orderings, flat
  std::vector<double> d1, d2;     // backprop deltas, max-width scratch
  std::vector<double> xt;         // concatenated input buffer
  std::vector<std::size_t> aoff;  // activation offset of each layer input
  std::vector<std::size_t> goff;  // flat-parameter offset of each layer
};

// f(x, x') = pi_eta(h(x, x')) - pi_eta(h(x', x)) with one shared deep ReLU
// net h on R^{2d}.  The difference head is the exact simplification of
// relu(u - v) - relu(v - u); anti-symmetry holds bit-for-bit because both
// orderings run the same code path and are subtracted.
class AntisymNet {
 public:
  int d = 0;
  std::vector<int> widths;       // [2d, w_1, ..., w_{L-1}, 1]
  std::vector<NetLayer> layers;  // L affine maps, ReLU after all but the last
  double eta = 1.0;
  uint64_t seed = 0;

  // He-style init; each parameter is dropped (frozen at exact 0) with prob sparsity
  static AntisymNet init(int d, const std::vector<int>& widths, double eta, double sparsity,
                         uint64_t seed);
  // widest equal-width net whose dense parameter count fits the (L, W, U) budget
  static AntisymNet sized(int d, int L, long long weight_budget, long long unit_budget,
                          double eta, uint64_t seed);

  int depth() const { return static_cast<int>(layers.size()); }
  void prepare(NetWorkspace& ws) const;

  // h on the concatenated input (size 2d); pass = which activation buffer to fill
  double inner_forward(const double* xt, NetWorkspace& ws, int pass) const;
  double forward(std::span<const double> x, std::span<const double> xp) const;
  double forward_ws(const double* x, const double* xp, NetWorkspace& ws) const;

  // adds weight * d l(f(x,x'), y, y') / dparams into grad (flat layout) and
  // returns the loss value; masked parameters receive no gradient
  double pair_loss_grad(const double* x, const double* xp, double y, double yp,
                        const PairwiseLoss& loss, double weight, NetWorkspace& ws,
                        double* grad) const;

  std::size_t param_count() const;
  void flatten(double* out) const;
  void load(const double* params);
  void zero_masked(double* grad) const;  // applies the sparsity mask to a flat vector

  // recounts from the current tensors: nonzeros, not mask bits
  NetComplexity inner_complexity() const;
  NetComplexity complexity() const;  // composite: both h copies + projection + difference head

  // smallest distance of any hidden pre-activation from its ReLU kink and of
  // |h| from the clamp edges eta/2, over both argument orderings.  A point
  // with a large margin sits safely inside one linear piece, which is what a
  // finite-difference gradient check needs.
  double min_kink_margin(const double* x, const double* xp, NetWorkspace& ws) const;

  std::string to_json() const;
  static AntisymNet from_json(const std::string& text);
  void save(const std::string& path) const;
  static AntisymNet load_file(const std::string& path);

  PairPredictor as_predictor() const;

 private:
  void check_input(std::size_t nx, std::size_t nxp) const;
};

// fixed parameter-count overhead of the composite over 2x the inner net:
// two projection-head copies (7 weights, 2 units, depth 2) and one difference
// head (7 weights, 2 units, depth 2)
inline constexpr long long kHeadWeightOverhead = 21;
inline constexpr long long kHeadUnitOverhead = 6;
inline constexpr int kHeadDepthOverhead = 4;

}  // namespace pairlearn
