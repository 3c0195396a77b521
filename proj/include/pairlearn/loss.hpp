#pragma once
#include <array>
#include <cmath>
#include <cstdint>
#include <string>

#include "pairlearn/rng.hpp"

namespace pairlearn {

inline int sign_of(double v) { return v > 0.0 ? 1 : (v < 0.0 ? -1 : 0); }

enum class LossKind { LeastSquares, HingeRanking, MetricMargin };

// pairwise loss l(t, y, y') with its Lipschitz constant in t
struct PairwiseLoss {
  LossKind kind = LossKind::LeastSquares;
  double lipschitz = 0.0;
  double margin_bias = 0.0;  // MetricMargin only
  // predictor regime the loss is designed for: false means anti-symmetric
  // predictors (f(x',x) = -f(x,x')), true means symmetric ones (distances,
  // f(x',x) = f(x,x')).  Pair-order invariance of the risk holds on the
  // matching regime only.
  bool symmetric_predictor = false;

  // least squares (t - y + y')^2; Lipschitz constant 8B on the admissible range
  static PairwiseLoss least_squares(double label_bound) {
    return {LossKind::LeastSquares, 8.0 * label_bound, 0.0, false};
  }
  static PairwiseLoss hinge_ranking() { return {LossKind::HingeRanking, 1.0, 0.0, false}; }
  static PairwiseLoss metric_margin(double bias) {
    return {LossKind::MetricMargin, 1.0, bias, true};
  }

  double operator()(double t, double y, double yp) const {
    switch (kind) {
      case LossKind::LeastSquares: {
        double e = t - y + yp;
        return e * e;
      }
      case LossKind::HingeRanking: {
        double m = 1.0 - sign_of(y - yp) * t;
        return m > 0.0 ? m : 0.0;
      }
      case LossKind::MetricMargin:
      default: {
        double tau = (y == yp) ? 1.0 : -1.0;
        double m = 1.0 - tau * (t - margin_bias);
        return m > 0.0 ? m : 0.0;
      }
    }
  }

  // subgradient in t; at hinge kinks the one-sided value with 1[m > 0]
  double dt(double t, double y, double yp) const {
    switch (kind) {
      case LossKind::LeastSquares:
        return 2.0 * (t - y + yp);
      case LossKind::HingeRanking: {
        int s = sign_of(y - yp);
        return (1.0 - s * t > 0.0) ? -static_cast<double>(s) : 0.0;
      }
      case LossKind::MetricMargin:
      default: {
        double tau = (y == yp) ? 1.0 : -1.0;
        return (1.0 - tau * (t - margin_bias) > 0.0) ? -tau : 0.0;
      }
    }
  }
};

struct SymmetryReport {
  // l(t,y,y') == l(-t,y',y): pair-order invariance when the predictor is
  // anti-symmetric (reversing the pair negates t)
  bool sign_flip_symmetric = true;
  // l(t,y,y') == l(t,y',y): pair-order invariance when the predictor is
  // symmetric (reversing the pair leaves t unchanged)
  bool pair_symmetric = true;
  int trials = 0;
  std::array<double, 3> first_failure{};  // (t, y, y') of the first violation
};

// Property check used by tests and by anyone wiring in a custom loss.  Both
// pair-reversal identities are probed independently; a loss is sound for a
// given predictor regime iff the matching flag comes back true.
template <class L>
SymmetryReport check_loss_symmetries(const L& loss, int trials, uint64_t seed,
                                     double t_range = 4.0, double y_range = 1.0) {
  SymmetryReport rep;
  rep.trials = trials;
  CounterRng rng(seed, 77);
  for (int i = 0; i < trials; ++i) {
    double t = rng.uniform(4 * static_cast<uint64_t>(i), -t_range, t_range);
    double y = rng.uniform(4 * static_cast<uint64_t>(i) + 1, -y_range, y_range);
    double yp = rng.uniform(4 * static_cast<uint64_t>(i) + 2, -y_range, y_range);
    if (rng.uniform(4 * static_cast<uint64_t>(i) + 3) < 0.25) yp = y;  // exercise ties
    double a = loss(t, y, yp);
    double flipped = loss(-t, yp, y);
    double swapped = loss(t, yp, y);
    if (!(std::fabs(a - flipped) <= 1e-12 * (1.0 + std::fabs(a)))) {
      if (rep.sign_flip_symmetric && rep.pair_symmetric) rep.first_failure = {t, y, yp};
      rep.sign_flip_symmetric = false;
    }
    if (!(std::fabs(a - swapped) <= 1e-12 * (1.0 + std::fabs(a)))) {
      if (rep.sign_flip_symmetric && rep.pair_symmetric) rep.first_failure = {t, y, yp};
      rep.pair_symmetric = false;
    }
  }
  return rep;
}

inline std::string loss_name(LossKind k) {
  switch (k) {
    case LossKind::LeastSquares: return "least_squares";
    case LossKind::HingeRanking: return "hinge_ranking";
    default: return "metric_margin";
  }
}

}  // namespace pairlearn
