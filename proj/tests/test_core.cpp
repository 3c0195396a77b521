#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "pairlearn/loss.hpp"
#include "pairlearn/metrics.hpp"
#include "pairlearn/risk.hpp"
#include "pairlearn/sample.hpp"

using namespace pairlearn;

namespace {
SampleSet make_sample(const std::vector<double>& xs, const std::vector<double>& ys) {
  SampleSet s;
  s.d = 1;
  s.label_bound = 10.0;
  s.origin = "test";
  for (std::size_t i = 0; i < xs.size(); ++i) s.points.push_back({{xs[i]}, ys[i]});
  return s;
}
}  // namespace

TEST_CASE("least squares loss values and subgradient") {
  PairwiseLoss ls = PairwiseLoss::least_squares(1.0);
  CHECK(ls(2.0, 1.0, 0.5) == doctest::Approx(2.25));
  CHECK(ls(0.0, 0.3, 0.3) == doctest::Approx(0.0));
  CHECK(ls.dt(2.0, 1.0, 0.5) == doctest::Approx(3.0));
  CHECK(ls.lipschitz == doctest::Approx(8.0));
  CHECK(PairwiseLoss::least_squares(2.5).lipschitz == doctest::Approx(20.0));
}

TEST_CASE("hinge ranking loss: ties cost exactly one") {
  PairwiseLoss h = PairwiseLoss::hinge_ranking();
  CHECK(h(0.7, 1.0, 0.0) == doctest::Approx(0.3));   // correct order, inside margin
  CHECK(h(2.0, 1.0, 0.0) == doctest::Approx(0.0));   // correct with margin
  CHECK(h(-0.5, 1.0, 0.0) == doctest::Approx(1.5));  // wrong order
  CHECK(h(3.0, 0.5, 0.5) == doctest::Approx(1.0));   // tie: sign 0, loss 1 for any t
  CHECK(h(-9.0, 0.5, 0.5) == doctest::Approx(1.0));
  CHECK(h.dt(0.7, 1.0, 0.0) == doctest::Approx(-1.0));
  CHECK(h.dt(2.0, 1.0, 0.0) == doctest::Approx(0.0));
  CHECK(h.dt(1.0, 1.0, 0.0) == doctest::Approx(0.0));  // kink: one-sided value
  CHECK(h.dt(3.0, 0.5, 0.5) == doctest::Approx(0.0));
}

TEST_CASE("metric margin loss pulls same-label pairs above the bias") {
  PairwiseLoss m = PairwiseLoss::metric_margin(0.5);
  // same labels: hinge of (t - bias)
  CHECK(m(1.5, 1.0, 1.0) == doctest::Approx(0.0));
  CHECK(m(0.5, 1.0, 1.0) == doctest::Approx(1.0));
  // different labels: hinge of -(t - bias)
  CHECK(m(-0.5, 1.0, -1.0) == doctest::Approx(0.0));
  CHECK(m(1.0, 1.0, -1.0) == doctest::Approx(1.5));
  CHECK(m.dt(0.5, 1.0, 1.0) == doctest::Approx(-1.0));
  CHECK(m.dt(1.0, 1.0, -1.0) == doctest::Approx(1.0));
}

TEST_CASE("all shipped losses satisfy the ordering symmetry of their regime") {
  for (PairwiseLoss loss : {PairwiseLoss::least_squares(1.0), PairwiseLoss::hinge_ranking(),
                            PairwiseLoss::metric_margin(0.25)}) {
    SymmetryReport rep = check_loss_symmetries(loss, 5000, 31);
    // anti-symmetric-predictor losses must pass the sign-flip identity,
    // symmetric-predictor (distance) losses the plain label-swap identity
    if (loss.symmetric_predictor)
      CHECK(rep.pair_symmetric);
    else
      CHECK(rep.sign_flip_symmetric);
    CHECK(rep.trials == 5000);
  }
  // the regimes are genuinely different: each loss fails the other route
  CHECK(PairwiseLoss::least_squares(1.0).symmetric_predictor == false);
  CHECK(PairwiseLoss::hinge_ranking().symmetric_predictor == false);
  CHECK(PairwiseLoss::metric_margin(0.25).symmetric_predictor == true);
  CHECK_FALSE(check_loss_symmetries(PairwiseLoss::least_squares(1.0), 5000, 31).pair_symmetric);
  CHECK_FALSE(
      check_loss_symmetries(PairwiseLoss::metric_margin(0.25), 5000, 31).sign_flip_symmetric);
}

TEST_CASE("a broken loss is flagged by the symmetry check") {
  auto broken = [](double t, double y, double yp) { return (t - y + yp) * (t - y + yp) + t; };
  SymmetryReport rep = check_loss_symmetries(broken, 2000, 31);
  CHECK_FALSE(rep.sign_flip_symmetric);
}

TEST_CASE("empirical risk: zero predictor on a two-point sample") {
  SampleSet s = make_sample({0.2, 0.8}, {0.0, 1.0});
  PairPredictor zero = [](std::span<const double>, std::span<const double>) { return 0.0; };
  // both ordered pairs contribute (y' - y)^2 = 1
  CHECK(empirical_risk(zero, s, PairwiseLoss::least_squares(1.0)) == doctest::Approx(1.0));
}

TEST_CASE("empirical risk: hinge on all-tied labels is exactly one") {
  SampleSet s = make_sample({0.1, 0.5, 0.9}, {0.4, 0.4, 0.4});
  PairPredictor wild = [](std::span<const double> a, std::span<const double> b) {
    return 100.0 * (a[0] - b[0]);
  };
  CHECK(empirical_risk(wild, s, PairwiseLoss::hinge_ranking()) == doctest::Approx(1.0));
}

TEST_CASE("empirical risk enumerates ordered pairs without the diagonal") {
  SampleSet s = make_sample({0.0, 1.0, 2.0}, {0.0, 0.0, 0.0});
  PairPredictor f = [](std::span<const double> a, std::span<const double> b) {
    return 3.0 * a[0] + b[0];
  };
  // t over (i,j), i != j: (0,1)=1 (0,2)=2 (1,0)=3 (1,2)=5 (2,0)=6 (2,1)=7
  double expect = (1.0 + 4.0 + 9.0 + 25.0 + 36.0 + 49.0) / 6.0;
  CHECK(empirical_risk(f, s, PairwiseLoss::least_squares(1.0)) == doctest::Approx(expect));
  CHECK(empirical_risk(f, s, PairwiseLoss::least_squares(1.0), false) ==
        empirical_risk(f, s, PairwiseLoss::least_squares(1.0), true));
}

TEST_CASE("empirical risk rejects tiny samples") {
  SampleSet s = make_sample({0.5}, {0.0});
  PairPredictor zero = [](std::span<const double>, std::span<const double>) { return 0.0; };
  CHECK_THROWS_AS(empirical_risk(zero, s, PairwiseLoss::least_squares(1.0)),
                  std::invalid_argument);
}

TEST_CASE("exact population risk on two atoms") {
  DiscreteDistribution dist;
  dist.d = 1;
  dist.label_bound = 1.0;
  dist.atoms = {{{0.25}, 0.0}, {{0.75}, 1.0}};
  dist.probs = {0.5, 0.5};
  PairPredictor zero = [](std::span<const double>, std::span<const double>) { return 0.0; };
  // (k,l) in {01, 10} each with mass 1/4 contribute 1
  CHECK(population_risk_exact(zero, dist, PairwiseLoss::least_squares(1.0)) ==
        doctest::Approx(0.5));
}

TEST_CASE("monte carlo population risk matches a closed form") {
  SmoothTarget flat;  // identically zero target
  flat.d = 1;
  flat.r = 1;
  flat.k_max = 0;
  NoiseModel noise{NoiseModel::UniformBounded, 1.0};
  PairPredictor zero = [](std::span<const double>, std::span<const double>) { return 0.0; };
  // loss reduces to (e' - e)^2 with e, e' ~ U[-1,1]: expectation 2/3
  double est =
      population_risk_mc(zero, flat, noise, PairwiseLoss::least_squares(1.0), 400000, 17);
  CHECK(est == doctest::Approx(2.0 / 3.0).epsilon(0.01));
}

TEST_CASE("metric norms: constants and indicators") {
  SampleSet s = make_sample({0.2, 0.8}, {1.0, -1.0});
  DiscreteDistribution dist;
  dist.d = 1;
  dist.label_bound = 1.0;
  dist.atoms = {{{0.2}, 1.0}, {{0.8}, -1.0}};
  dist.probs = {0.5, 0.5};

  EmpiricalMetric nu{MetricKind::NuN, &s, nullptr, 4096, 128, 100000, 3};
  EmpiricalMetric mu{MetricKind::MuNCrossRho, &s, &dist, 4096, 128, 100000, 3};

  PairPredictor c3 = [](std::span<const double>, std::span<const double>) { return -3.0; };
  CHECK(metric_norm(c3, nu) == doctest::Approx(3.0));
  CHECK(metric_norm(c3, mu) == doctest::Approx(3.0));

  // indicator of the first argument being the first sample point
  PairPredictor ind = [](std::span<const double> a, std::span<const double>) {
    return a[0] == 0.2 ? 1.0 : 0.0;
  };
  CHECK(metric_norm(ind, nu) == doctest::Approx(std::sqrt(0.5)));
  CHECK(metric_norm(ind, mu) == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("point and observation norms") {
  SampleSet s = make_sample({0.1, 0.9}, {3.0, -4.0});
  EmpiricalMetric rho{MetricKind::RhoN, &s, nullptr, 4096, 128, 100000, 3};
  PointFunction g = [](const SamplePoint& z) { return z.y; };
  CHECK(metric_norm_point(g, rho) == doctest::Approx(std::sqrt((9.0 + 16.0) / 2.0)));

  EmpiricalMetric xi{MetricKind::Xi, &s, nullptr, 4096, 128, 100000, 3};
  ZPairFunction q = [](const SamplePoint& a, const SamplePoint& b) { return a.y - b.y; };
  // ordered non-diagonal pairs: (3-(-4))^2 and (-4-3)^2, both 49
  CHECK(metric_norm_z(q, xi) == doctest::Approx(7.0));
}

TEST_CASE("metric norm rejects mismatched function shapes") {
  SampleSet s = make_sample({0.1, 0.9}, {0.0, 1.0});
  EmpiricalMetric xi{MetricKind::Xi, &s, nullptr, 4096, 128, 100000, 3};
  PairPredictor zero = [](std::span<const double>, std::span<const double>) { return 0.0; };
  CHECK_THROWS_AS(metric_norm(zero, xi), std::invalid_argument);
  EmpiricalMetric nu{MetricKind::NuN, &s, nullptr, 4096, 128, 100000, 3};
  ZPairFunction q = [](const SamplePoint&, const SamplePoint&) { return 0.0; };
  CHECK_THROWS_AS(metric_norm_z(q, nu), std::invalid_argument);
}

TEST_CASE("discrete distribution validation and sampling") {
  DiscreteDistribution dist = DiscreteDistribution::random(2, 5, 1.5, 77);
  CHECK_NOTHROW(dist.validate());
  double mass = 0.0;
  for (double p : dist.probs) mass += p;
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-14));
  for (const auto& a : dist.atoms) CHECK(std::abs(a.y) <= 1.5);

  SampleSet s = dist.sample(200, 5);
  CHECK(s.size() == 200);
  for (const auto& p : s.points) {
    SamplePoint z{p.x, p.y};
    CHECK(dist.find_atom(z) >= 0);
  }
  SamplePoint not_atom{{-123.0, 55.0}, 0.0};
  CHECK(dist.find_atom(not_atom) == -1);

  DiscreteDistribution bad = dist;
  bad.probs[0] += 0.5;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}
