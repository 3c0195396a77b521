#pragma once
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pairlearn/loss.hpp"
#include "pairlearn/net.hpp"
#include "pairlearn/sample.hpp"

namespace pairlearn {

enum class BatchMode { FullPairBatch, SampledPairs };

struct TrainConfig {
  double learning_rate = 0.25;
  int max_epochs = 500;
  BatchMode mode = BatchMode::FullPairBatch;
  long long sampled_pairs = 0;  // batch size m, required in SampledPairs mode
  double tol = 1e-8;            // stop when the window improvement drops below this
  int tol_window = 50;
  uint64_t seed = 0;
  bool parallel = true;
  double divergence_factor = 1e6;
};

struct TrainTrace {
  std::vector<double> risk;  // accepted risk per epoch (epoch 0 = initial)
  std::vector<double> lr;
  double initial_risk = 0.0;
  double final_risk = 0.0;
  int epochs = 0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  AntisymNet net;
  TrainTrace trace;
};

struct TrainDivergence : std::runtime_error {
  TrainTrace trace;
  explicit TrainDivergence(TrainTrace t)
      : std::runtime_error("training diverged"), trace(std::move(t)) {}
};

// full-gradient descent with the step halved whenever the batch risk would
// increase (the proposal is then discarded and retried from the previous
// parameters); no momentum.  SampledPairs draws one fixed ordered-pair batch
// up front (an incomplete pair average) and applies the same rule to it.
TrainResult train_erm(const AntisymNet& start, const SampleSet& s, const PairwiseLoss& loss,
                      const TrainConfig& cfg);

// batch risk + gradient of the net at its current parameters in one pass
double risk_and_gradient(const AntisymNet& net, const SampleSet& s, const PairwiseLoss& loss,
                         const std::vector<std::pair<int, int>>* pairs, double* grad,
                         bool parallel);

// index of the empirical risk minimizer; ties resolve to the lowest index
std::size_t discrete_erm(const std::vector<PairPredictor>& candidates, const SampleSet& s,
                         const PairwiseLoss& loss);

void write_trace_csv(const TrainTrace& t, const std::string& path);

}  // namespace pairlearn
