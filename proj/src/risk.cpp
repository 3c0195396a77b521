#include "pairlearn/risk.hpp"

#include <stdexcept>

#include "pairlearn/reduce.hpp"
#include "pairlearn/rng.hpp"

namespace pairlearn {

namespace {
// maps a flat index over ordered pairs to (i, j), skipping the diagonal:
// row i contributes n-1 entries in column order with j == i removed
inline void pair_index(std::size_t idx, std::size_t n, std::size_t& i, std::size_t& j) {
  i = idx / (n - 1);
  j = idx % (n - 1);
  if (j >= i) ++j;
}
}  // namespace

double empirical_risk(const PairPredictor& f, const SampleSet& s, const PairwiseLoss& loss,
                      bool parallel) {
  std::size_t n = s.size();
  if (n < 2) throw std::invalid_argument("insufficient sample: need n >= 2");
  s.validate();
  double total = chunked_sum(
      n * (n - 1),
      [&](std::size_t idx) {
        std::size_t i, j;
        pair_index(idx, n, i, j);
        const auto& a = s.points[i];
        const auto& b = s.points[j];
        return loss(f(a.x, b.x), a.y, b.y);
      },
      parallel);
  return total / (static_cast<double>(n) * static_cast<double>(n - 1));
}

namespace {
double empirical_risk_net(const AntisymNet& net, const SampleSet& s, const PairwiseLoss& loss,
                          bool parallel) {
  std::size_t n = s.size();
  if (n < 2) throw std::invalid_argument("insufficient sample: need n >= 2");
  std::size_t count = n * (n - 1);
  std::size_t nchunks = (count + kReduceChunk - 1) / kReduceChunk;
  std::vector<double> partial(nchunks, 0.0);
#pragma omp parallel for schedule(static) if (parallel)
  for (long long c = 0; c < static_cast<long long>(nchunks); ++c) {
    std::size_t lo = static_cast<std::size_t>(c) * kReduceChunk;
    std::size_t hi = std::min(lo + kReduceChunk, count);
    NetWorkspace ws;
    net.prepare(ws);
    double acc = 0.0;
    for (std::size_t idx = lo; idx < hi; ++idx) {
      std::size_t i, j;
      pair_index(idx, n, i, j);
      const auto& a = s.points[i];
      const auto& b = s.points[j];
      double t = net.forward_ws(a.x.data(), b.x.data(), ws);
      acc += loss(t, a.y, b.y);
    }
    partial[static_cast<std::size_t>(c)] = acc;
  }
  double total = tree_combine(partial.data(), nchunks);
  return total / (static_cast<double>(n) * static_cast<double>(n - 1));
}
}  // namespace

double empirical_risk(const AntisymNet& net, const SampleSet& s, const PairwiseLoss& loss,
                      bool parallel) {
  return empirical_risk_net(net, s, loss, parallel);
}

double empirical_risk_serial(const AntisymNet& net, const SampleSet& s, const PairwiseLoss& loss) {
  return empirical_risk_net(net, s, loss, false);
}

double population_risk_mc(const PairPredictor& f, const SmoothTarget& target,
                          const NoiseModel& noise, const PairwiseLoss& loss, int mc_n,
                          uint64_t seed) {
  if (mc_n < 1) throw std::invalid_argument("mc_n must be >= 1");
  CounterRng rng(seed, 9);
  int d = target.d;
  double total = chunked_sum(static_cast<std::size_t>(mc_n), [&](std::size_t i) {
    uint64_t base = static_cast<uint64_t>(i) * (2 * d + 2);
    std::vector<double> x(d), xp(d);
    for (int j = 0; j < d; ++j) x[j] = rng.uniform(base + j);
    for (int j = 0; j < d; ++j) xp[j] = rng.uniform(base + d + j);
    double e = noise.sigma * (2.0 * rng.uniform(base + 2 * d) - 1.0);
    double ep = noise.sigma * (2.0 * rng.uniform(base + 2 * d + 1) - 1.0);
    if (noise.kind == NoiseModel::TwoPoint) {
      e = e >= 0.0 ? noise.sigma : -noise.sigma;
      ep = ep >= 0.0 ? noise.sigma : -noise.sigma;
    }
    double y = target.eval(x) + e, yp = target.eval(xp) + ep;
    return loss(f(x, xp), y, yp);
  });
  return total / mc_n;
}

double population_risk_exact(const PairPredictor& f, const DiscreteDistribution& dist,
                             const PairwiseLoss& loss) {
  dist.validate();
  double s = 0.0;
  for (std::size_t k = 0; k < dist.size(); ++k)
    for (std::size_t l = 0; l < dist.size(); ++l) {
      const auto& a = dist.atoms[k];
      const auto& b = dist.atoms[l];
      s += dist.probs[k] * dist.probs[l] * loss(f(a.x, b.x), a.y, b.y);
    }
  return s;
}

double population_risk_exact(const AntisymNet& net, const DiscreteDistribution& dist,
                             const PairwiseLoss& loss) {
  NetWorkspace ws;
  net.prepare(ws);
  dist.validate();
  double s = 0.0;
  for (std::size_t k = 0; k < dist.size(); ++k)
    for (std::size_t l = 0; l < dist.size(); ++l) {
      const auto& a = dist.atoms[k];
      const auto& b = dist.atoms[l];
      s += dist.probs[k] * dist.probs[l] * loss(net.forward_ws(a.x.data(), b.x.data(), ws), a.y, b.y);
    }
  return s;
}

double excess_risk_ls(const AntisymNet& net, const SmoothTarget& target, int quad_points) {
  if (quad_points < 2) throw std::invalid_argument("quad_points too small");
  if (target.d > 2) throw std::invalid_argument("quadrature supports d <= 2 only");
  if (net.d != target.d) throw std::invalid_argument("net/target dimension mismatch");
  std::size_t m = static_cast<std::size_t>(quad_points);
  std::size_t nodes = target.d == 1 ? m : m * m;
  std::vector<std::vector<double>> xs(nodes);
  std::vector<double> tv(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    if (target.d == 1) {
      xs[i] = {(static_cast<double>(i) + 0.5) / static_cast<double>(m)};
    } else {
      xs[i] = {(static_cast<double>(i / m) + 0.5) / static_cast<double>(m),
               (static_cast<double>(i % m) + 0.5) / static_cast<double>(m)};
    }
    tv[i] = target.eval(xs[i]);
  }
  double inv = 1.0 / (static_cast<double>(nodes) * static_cast<double>(nodes));
  double total = 0.0;
  chunked_accumulate_ctx(
      nodes * nodes, 1,
      [&] {
        NetWorkspace ws;
        net.prepare(ws);
        return ws;
      },
      [&](std::size_t idx, NetWorkspace& ws, double* acc) {
        std::size_t i = idx / nodes, j = idx % nodes;
        double diff = net.forward_ws(xs[i].data(), xs[j].data(), ws) - (tv[i] - tv[j]);
        acc[0] += diff * diff;
      },
      &total);
  return total * inv;
}

}  // namespace pairlearn
