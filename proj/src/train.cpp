#include "pairlearn/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "pairlearn/reduce.hpp"
#include "pairlearn/risk.hpp"
#include "pairlearn/rng.hpp"

namespace pairlearn {

double risk_and_gradient(const AntisymNet& net, const SampleSet& s, const PairwiseLoss& loss,
                         const std::vector<std::pair<int, int>>* pairs, double* grad,
                         bool parallel) {
  std::size_t n = s.size();
  if (n < 2) throw std::invalid_argument("insufficient sample: need n >= 2");
  std::size_t count = pairs ? pairs->size() : n * (n - 1);
  double wt = 1.0 / static_cast<double>(count);
  std::size_t P = net.param_count();
  // slot P carries the risk so value and gradient share one deterministic pass
  std::vector<double> acc(P + 1, 0.0);
  chunked_accumulate_ctx(
      count, P + 1,
      [&]() {
        NetWorkspace ws;
        net.prepare(ws);
        return ws;
      },
      [&](std::size_t idx, NetWorkspace& ws, double* a) {
        std::size_t i, j;
        if (pairs) {
          i = static_cast<std::size_t>((*pairs)[idx].first);
          j = static_cast<std::size_t>((*pairs)[idx].second);
        } else {
          i = idx / (n - 1);
          j = idx % (n - 1);
          if (j >= i) ++j;
        }
        const auto& pa = s.points[i];
        const auto& pb = s.points[j];
        a[P] += net.pair_loss_grad(pa.x.data(), pb.x.data(), pa.y, pb.y, loss, wt, ws, a);
      },
      acc.data(), parallel);
  if (grad) {
    for (std::size_t k = 0; k < P; ++k) grad[k] = acc[k];
    net.zero_masked(grad);
  }
  return acc[P] * wt;
}

namespace {
std::vector<std::pair<int, int>> draw_pairs(std::size_t n, long long m, uint64_t seed, int epoch) {
  CounterRng rng(seed, 3000 + static_cast<uint64_t>(epoch));
  std::vector<std::pair<int, int>> pairs(m);
  for (long long k = 0; k < m; ++k) {
    auto i = static_cast<int>(rng.below(2 * static_cast<uint64_t>(k), n));
    auto j = static_cast<int>(rng.below(2 * static_cast<uint64_t>(k) + 1, n - 1));
    if (j >= i) ++j;
    pairs[k] = {i, j};
  }
  return pairs;
}
}  // namespace

TrainResult train_erm(const AntisymNet& start, const SampleSet& s, const PairwiseLoss& loss,
                      const TrainConfig& cfg) {
  if (cfg.max_epochs < 0) throw std::invalid_argument("max_epochs must be >= 0");
  if (cfg.learning_rate < 0.0) throw std::invalid_argument("learning_rate must be >= 0");
  if (cfg.mode == BatchMode::SampledPairs && cfg.sampled_pairs < 1)
    throw std::invalid_argument("SampledPairs mode needs sampled_pairs >= 1");
  s.validate();
  auto t0 = std::chrono::steady_clock::now();

  AntisymNet net = start;
  std::size_t P = net.param_count();
  std::vector<double> theta(P), grad(P), prop(P), grad_prop(P);
  net.flatten(theta.data());

  TrainTrace trace;
  double lr = cfg.learning_rate;

  // sampled mode optimizes a fixed random pair subset (an incomplete pair
  // average), so descent, step halving and the stopping window behave exactly
  // as in full-batch mode
  std::vector<std::pair<int, int>> batch;
  const std::vector<std::pair<int, int>>* batch_ptr = nullptr;
  if (cfg.mode == BatchMode::SampledPairs) {
    batch = draw_pairs(s.size(), cfg.sampled_pairs, cfg.seed, 0);
    batch_ptr = &batch;
  }
  double cur = risk_and_gradient(net, s, loss, batch_ptr, grad.data(), cfg.parallel);
  trace.initial_risk = cur;
  trace.risk.push_back(cur);
  trace.lr.push_back(lr);

  for (int e = 1; e <= cfg.max_epochs; ++e) {
    for (std::size_t k = 0; k < P; ++k) prop[k] = theta[k] - lr * grad[k];
    net.load(prop.data());
    double rnew = risk_and_gradient(net, s, loss, batch_ptr, grad_prop.data(), cfg.parallel);
    if (!(rnew <= cur)) {
      // reject increases and non-finite risks: halve the step, retry from the
      // previous parameters
      lr *= 0.5;
      net.load(theta.data());
    } else {
      theta.swap(prop);
      grad.swap(grad_prop);
      cur = rnew;
    }
    trace.risk.push_back(cur);
    trace.lr.push_back(lr);
    if (cur > cfg.divergence_factor * (std::fabs(trace.initial_risk) + 1.0)) {
      trace.epochs = e;
      trace.final_risk = cur;
      throw TrainDivergence(trace);
    }
    if (e >= cfg.tol_window) {
      double improvement = trace.risk[e - cfg.tol_window] - trace.risk[e];
      if (improvement < cfg.tol) break;
    }
  }
  net.load(theta.data());
  trace.epochs = static_cast<int>(trace.risk.size()) - 1;
  trace.final_risk = cur;
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(net), std::move(trace)};
}

std::size_t discrete_erm(const std::vector<PairPredictor>& candidates, const SampleSet& s,
                         const PairwiseLoss& loss) {
  if (candidates.empty()) throw std::invalid_argument("empty candidate set");
  std::size_t best = 0;
  double best_risk = empirical_risk(candidates[0], s, loss, false);
  for (std::size_t c = 1; c < candidates.size(); ++c) {
    double r = empirical_risk(candidates[c], s, loss, false);
    if (r < best_risk) {
      best_risk = r;
      best = c;
    }
  }
  return best;
}

void write_trace_csv(const TrainTrace& t, const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path);
  std::fprintf(f, "epoch,risk,lr\n");
  for (std::size_t e = 0; e < t.risk.size(); ++e)
    std::fprintf(f, "%zu,%.17g,%.17g\n", e, t.risk[e], t.lr[e]);
  std::fclose(f);
}

}  // namespace pairlearn
