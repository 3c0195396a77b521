#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <vector>

#include "pairlearn/risk.hpp"
#include "pairlearn/train.hpp"

using namespace pairlearn;

namespace {
SampleSet toy_sample(int n, uint64_t seed) {
  SmoothTarget t = generate_target(1, 1, 2, 7);
  NoiseModel noise{NoiseModel::UniformBounded, 0.3};
  return sample_data(t, noise, n, seed);
}

std::vector<double> flat_params(const AntisymNet& net) {
  std::vector<double> theta(net.param_count());
  net.flatten(theta.data());
  return theta;
}
}  // namespace

TEST_CASE("zero learning rate leaves the net untouched") {
  SampleSet s = toy_sample(12, 3);
  AntisymNet net = AntisymNet::init(1, {2, 4, 1}, 2.0, 0.0, 5);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.max_epochs = 10;
  cfg.tol = 0.0;
  TrainResult r = train_erm(net, s, PairwiseLoss::least_squares(1.0), cfg);
  CHECK(flat_params(r.net) == flat_params(net));
  for (double v : r.trace.risk) CHECK(v == r.trace.initial_risk);
  CHECK(r.trace.final_risk == r.trace.initial_risk);
}

TEST_CASE("full-batch risk trace is nonincreasing") {
  SampleSet s = toy_sample(24, 11);
  AntisymNet net = AntisymNet::init(1, {2, 6, 1}, 2.0, 0.0, 21);
  TrainConfig cfg;
  cfg.learning_rate = 0.5;
  cfg.max_epochs = 120;
  cfg.tol = 0.0;
  TrainResult r = train_erm(net, s, PairwiseLoss::least_squares(1.0), cfg);
  REQUIRE(r.trace.risk.size() == static_cast<std::size_t>(r.trace.epochs) + 1);
  for (std::size_t e = 1; e < r.trace.risk.size(); ++e)
    CHECK(r.trace.risk[e] <= r.trace.risk[e - 1]);
  CHECK(r.trace.final_risk < r.trace.initial_risk);
  // the returned net reproduces the reported final risk
  CHECK(empirical_risk(r.net, s, PairwiseLoss::least_squares(1.0)) ==
        doctest::Approx(r.trace.final_risk));
}

TEST_CASE("an oversized step is rejected and the rate is halved") {
  SampleSet s = toy_sample(16, 13);
  AntisymNet net = AntisymNet::init(1, {2, 5, 1}, 2.0, 0.0, 33);
  TrainConfig cfg;
  cfg.learning_rate = 4096.0;
  cfg.max_epochs = 60;
  cfg.tol = 0.0;
  TrainResult r = train_erm(net, s, PairwiseLoss::least_squares(1.0), cfg);
  CHECK(r.trace.lr.back() < cfg.learning_rate);
  for (std::size_t e = 1; e < r.trace.risk.size(); ++e)
    CHECK(r.trace.risk[e] <= r.trace.risk[e - 1]);
  bool halved = false;
  for (std::size_t e = 1; e < r.trace.lr.size(); ++e)
    halved |= r.trace.lr[e] == 0.5 * r.trace.lr[e - 1];
  CHECK(halved);
}

TEST_CASE("window tolerance stops early") {
  SampleSet s = toy_sample(16, 17);
  AntisymNet net = AntisymNet::init(1, {2, 4, 1}, 2.0, 0.0, 8);
  TrainConfig cfg;
  cfg.learning_rate = 0.25;
  cfg.max_epochs = 5000;
  cfg.tol = 1e-3;
  cfg.tol_window = 10;
  TrainResult r = train_erm(net, s, PairwiseLoss::least_squares(1.0), cfg);
  CHECK(r.trace.epochs < cfg.max_epochs);
}

TEST_CASE("sampled-pair training is deterministic and nonincreasing") {
  SampleSet s = toy_sample(40, 23);
  AntisymNet net = AntisymNet::init(1, {2, 5, 1}, 2.0, 0.0, 44);
  TrainConfig cfg;
  cfg.learning_rate = 0.25;
  cfg.max_epochs = 40;
  cfg.mode = BatchMode::SampledPairs;
  cfg.sampled_pairs = 300;
  cfg.seed = 99;
  cfg.tol = 0.0;
  TrainResult a = train_erm(net, s, PairwiseLoss::least_squares(1.0), cfg);
  TrainResult b = train_erm(net, s, PairwiseLoss::least_squares(1.0), cfg);
  CHECK(flat_params(a.net) == flat_params(b.net));
  CHECK(a.trace.risk == b.trace.risk);
  for (std::size_t e = 1; e < a.trace.risk.size(); ++e)
    CHECK(a.trace.risk[e] <= a.trace.risk[e - 1]);

  cfg.seed = 100;  // a different pair stream reaches a different point
  TrainResult c = train_erm(net, s, PairwiseLoss::least_squares(1.0), cfg);
  CHECK(flat_params(c.net) != flat_params(a.net));
}

TEST_CASE("sampled mode requires a batch size") {
  SampleSet s = toy_sample(10, 29);
  AntisymNet net = AntisymNet::init(1, {2, 3, 1}, 2.0, 0.0, 1);
  TrainConfig cfg;
  cfg.mode = BatchMode::SampledPairs;
  cfg.sampled_pairs = 0;
  CHECK_THROWS_AS(train_erm(net, s, PairwiseLoss::least_squares(1.0), cfg),
                  std::invalid_argument);
}

TEST_CASE("risk and gradient: parallel path is bit-identical and consistent") {
  SampleSet s = toy_sample(14, 31);
  AntisymNet net = AntisymNet::init(1, {2, 5, 1}, 2.0, 0.0, 77);
  PairwiseLoss loss = PairwiseLoss::least_squares(1.0);
  std::vector<double> gp(net.param_count()), gs(net.param_count());
  double rp = risk_and_gradient(net, s, loss, nullptr, gp.data(), true);
  double rs = risk_and_gradient(net, s, loss, nullptr, gs.data(), false);
  CHECK(rp == rs);
  CHECK(gp == gs);
  CHECK(rp == doctest::Approx(empirical_risk(net, s, loss)));
}

TEST_CASE("full-batch gradient matches finite differences of the empirical risk") {
  SampleSet s = toy_sample(8, 37);
  AntisymNet net = AntisymNet::init(1, {2, 3, 1}, 2.0, 0.0, 50);
  PairwiseLoss loss = PairwiseLoss::least_squares(1.0);
  std::vector<double> grad(net.param_count());
  risk_and_gradient(net, s, loss, nullptr, grad.data(), false);
  std::vector<double> theta = flat_params(net);
  AntisymNet work = net;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    double h = 1e-6 * std::max(1.0, std::abs(theta[k]));
    double orig = theta[k];
    theta[k] = orig + h;
    work.load(theta.data());
    double lp = empirical_risk(work, s, loss);
    theta[k] = orig - h;
    work.load(theta.data());
    double lm = empirical_risk(work, s, loss);
    theta[k] = orig;
    double fd = (lp - lm) / (2.0 * h);
    CHECK(grad[k] == doctest::Approx(fd).epsilon(1e-4));
  }
}

TEST_CASE("divergence guard throws with the trace attached") {
  SampleSet s = toy_sample(12, 41);
  AntisymNet net = AntisymNet::init(1, {2, 4, 1}, 2.0, 0.0, 60);
  TrainConfig cfg;
  cfg.learning_rate = 0.25;
  cfg.max_epochs = 50;
  cfg.divergence_factor = 1e-12;  // any nonzero risk now counts as divergence
  bool thrown = false;
  try {
    train_erm(net, s, PairwiseLoss::least_squares(1.0), cfg);
  } catch (const TrainDivergence& e) {
    thrown = true;
    CHECK(e.trace.risk.size() >= 2);
    CHECK(e.trace.epochs >= 1);
    CHECK(e.trace.final_risk > 0.0);
  }
  CHECK(thrown);
}

TEST_CASE("discrete erm picks the minimizer with lowest-index ties") {
  SampleSet s = toy_sample(10, 43);
  PairwiseLoss loss = PairwiseLoss::least_squares(1.0);
  PairPredictor zero = [](std::span<const double>, std::span<const double>) { return 0.0; };
  PairPredictor bad = [](std::span<const double>, std::span<const double>) { return 50.0; };
  // interpolates the sample labels pairwise, so its empirical risk is exactly
  // zero and it beats every other candidate on any sample with label noise
  auto label_of = [&s](std::span<const double> x) {
    for (const SamplePoint& p : s.points)
      if (std::equal(x.begin(), x.end(), p.x.begin(), p.x.end())) return p.y;
    return 0.0;
  };
  PairPredictor good = [&](std::span<const double> a, std::span<const double> b) {
    return label_of(a) - label_of(b);
  };
  CHECK(discrete_erm({bad, good, zero}, s, loss) == 1);
  CHECK(discrete_erm({bad, zero, zero, good, good}, s, loss) == 3);
  CHECK(discrete_erm({zero, zero}, s, loss) == 0);
  CHECK_THROWS_AS(discrete_erm({}, s, loss), std::invalid_argument);
}

TEST_CASE("trace csv writes one row per epoch") {
  SampleSet s = toy_sample(8, 47);
  AntisymNet net = AntisymNet::init(1, {2, 3, 1}, 2.0, 0.0, 70);
  TrainConfig cfg;
  cfg.max_epochs = 5;
  cfg.tol = 0.0;
  TrainResult r = train_erm(net, s, PairwiseLoss::least_squares(1.0), cfg);
  std::string path = "/tmp/pairlearn_trace_test.csv";
  write_trace_csv(r.trace, path);
  std::ifstream f(path);
  REQUIRE(bool(f));
  std::string line;
  int rows = 0;
  std::getline(f, line);
  CHECK(line == "epoch,risk,lr");
  while (std::getline(f, line)) ++rows;
  CHECK(rows == r.trace.epochs + 1);
}
