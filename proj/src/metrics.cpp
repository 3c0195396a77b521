#include "pairlearn/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "pairlearn/reduce.hpp"
#include "pairlearn/rng.hpp"

namespace pairlearn {

namespace {
void require_sample(const EmpiricalMetric& m, std::size_t at_least) {
  if (!m.sample) throw std::invalid_argument("metric needs an anchoring sample");
  if (m.sample->size() < at_least) throw std::invalid_argument("insufficient sample for metric");
}

// E_X[f(X, xi)^2] for one anchor point
double inner_second_moment(const PairPredictor& f, const EmpiricalMetric& m,
                           const std::vector<double>& xi) {
  if (m.atoms) {
    double s = 0.0;
    for (std::size_t k = 0; k < m.atoms->size(); ++k) {
      double v = f(m.atoms->atoms[k].x, xi);
      s += m.atoms->probs[k] * v * v;
    }
    return s;
  }
  int d = m.sample->d;
  if (d == 1) {
    int q = m.quad_points_1d;
    return chunked_sum(static_cast<std::size_t>(q),
                       [&](std::size_t i) {
                         std::vector<double> x{(static_cast<double>(i) + 0.5) / q};
                         double v = f(x, xi);
                         return v * v;
                       },
                       false) /
           q;
  }
  if (d == 2) {
    int q = m.quad_points_2d;
    return chunked_sum(static_cast<std::size_t>(q) * q,
                       [&](std::size_t i) {
                         std::vector<double> x{(static_cast<double>(i / q) + 0.5) / q,
                                               (static_cast<double>(i % q) + 0.5) / q};
                         double v = f(x, xi);
                         return v * v;
                       },
                       false) /
           (static_cast<double>(q) * q);
  }
  CounterRng rng(m.seed, 17);
  return chunked_sum(static_cast<std::size_t>(m.mc_budget),
                     [&](std::size_t i) {
                       std::vector<double> x(d);
                       for (int j = 0; j < d; ++j)
                         x[j] = rng.uniform(i * static_cast<uint64_t>(d) + j);
                       double v = f(x, xi);
                       return v * v;
                     },
                     false) /
         m.mc_budget;
}
}  // namespace

double metric_norm(const PairPredictor& f, const EmpiricalMetric& m) {
  if (m.kind == MetricKind::NuN) {
    require_sample(m, 2);
    const auto& pts = m.sample->points;
    std::size_t n = pts.size();
    double s = chunked_sum(n * (n - 1), [&](std::size_t idx) {
      std::size_t i = idx / (n - 1), j = idx % (n - 1);
      if (j >= i) ++j;
      double v = f(pts[i].x, pts[j].x);
      return v * v;
    });
    return std::sqrt(s / (static_cast<double>(n) * static_cast<double>(n - 1)));
  }
  if (m.kind == MetricKind::MuNCrossRho) {
    require_sample(m, 1);
    const auto& pts = m.sample->points;
    double s = 0.0;
    for (const auto& p : pts) s += inner_second_moment(f, m, p.x);
    return std::sqrt(s / static_cast<double>(pts.size()));
  }
  throw std::invalid_argument("metric kind needs a different argument shape");
}

double metric_norm_z(const ZPairFunction& f, const EmpiricalMetric& m) {
  if (m.kind != MetricKind::Xi)
    throw std::invalid_argument("metric kind needs a different argument shape");
  require_sample(m, 2);
  const auto& pts = m.sample->points;
  std::size_t n = pts.size();
  double s = chunked_sum(n * (n - 1), [&](std::size_t idx) {
    std::size_t i = idx / (n - 1), j = idx % (n - 1);
    if (j >= i) ++j;
    double v = f(pts[i], pts[j]);
    return v * v;
  });
  return std::sqrt(s / (static_cast<double>(n) * static_cast<double>(n - 1)));
}

double metric_norm_point(const PointFunction& g, const EmpiricalMetric& m) {
  if (m.kind != MetricKind::RhoN)
    throw std::invalid_argument("metric kind needs a different argument shape");
  require_sample(m, 1);
  const auto& pts = m.sample->points;
  double s = chunked_sum(pts.size(), [&](std::size_t i) {
    double v = g(pts[i]);
    return v * v;
  });
  return std::sqrt(s / static_cast<double>(pts.size()));
}

}  // namespace pairlearn
