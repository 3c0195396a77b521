#include "pairlearn/target.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "pairlearn/loss.hpp"
#include "pairlearn/reduce.hpp"
#include "pairlearn/rng.hpp"

namespace pairlearn {

using nlohmann::json;

static constexpr double kTwoPi = 6.283185307179586476925286766559;

double SmoothTarget::eval(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != d) throw std::invalid_argument("target input dimension");
  double s = 0.0;
  for (const auto& t : terms) {
    double u = 0.0;
    for (int j = 0; j < d; ++j) u += t.k[j] * x[j];
    u *= kTwoPi;
    s += t.a_cos * std::cos(u) + t.a_sin * std::sin(u);
  }
  return s;
}

double SmoothTarget::eval_deriv(std::span<const double> x, std::span<const int> alpha) const {
  if (static_cast<int>(alpha.size()) != d) throw std::invalid_argument("alpha dimension");
  int m = 0;
  for (int a : alpha) m += a;
  double s = 0.0;
  for (const auto& t : terms) {
    double factor = 1.0;
    double u = 0.0;
    for (int j = 0; j < d; ++j) {
      factor *= std::pow(kTwoPi * t.k[j], alpha[j]);
      u += t.k[j] * x[j];
    }
    u *= kTwoPi;
    // each derivative advances the phase by pi/2
    double c, sn;
    switch (m % 4) {
      case 0: c = std::cos(u); sn = std::sin(u); break;
      case 1: c = -std::sin(u); sn = std::cos(u); break;
      case 2: c = -std::cos(u); sn = -std::sin(u); break;
      default: c = std::sin(u); sn = -std::cos(u); break;
    }
    s += factor * (t.a_cos * c + t.a_sin * sn);
  }
  return s;
}

double SmoothTarget::sup_bound() const {
  double s = 0.0;
  for (const auto& t : terms) s += std::fabs(t.a_cos) + std::fabs(t.a_sin);
  return s;
}

double SmoothTarget::l2_squared() const {
  // orthogonality of the trigonometric system on [0,1]^d
  double s = 0.0;
  for (const auto& t : terms) {
    bool zero_freq = true;
    for (int kj : t.k) zero_freq = zero_freq && kj == 0;
    if (zero_freq)
      s += t.a_cos * t.a_cos;
    else
      s += 0.5 * (t.a_cos * t.a_cos + t.a_sin * t.a_sin);
  }
  return s;
}

double SmoothTarget::mean() const {
  for (const auto& t : terms) {
    bool zero_freq = true;
    for (int kj : t.k) zero_freq = zero_freq && kj == 0;
    if (zero_freq) return t.a_cos;
  }
  return 0.0;
}

double SmoothTarget::certificate() const {
  double best = 0.0;
  for (int j = 0; j <= r; ++j) {
    double s = 0.0;
    for (const auto& t : terms) {
      int k1 = 0;
      for (int kj : t.k) k1 += kj;
      s += (std::fabs(t.a_cos) + std::fabs(t.a_sin)) * std::pow(kTwoPi * k1, j);
    }
    best = std::max(best, s);
  }
  return best;
}

SmoothTarget generate_target(int d, int r, int k_max, uint64_t seed) {
  if (d < 1 || r < 0 || k_max < 0) throw std::invalid_argument("bad target shape");
  SmoothTarget t;
  t.d = d;
  t.r = r;
  t.k_max = k_max;
  t.seed = seed;
  SeqRng rng(seed, 31);
  std::vector<int> k(d, 0);
  for (;;) {
    SmoothTarget::Term term;
    term.k = k;
    int k1 = 0;
    bool zero_freq = true;
    for (int kj : k) {
      k1 += kj;
      zero_freq = zero_freq && kj == 0;
    }
    double decay = std::pow(1.0 + k1, -(r + d + 1));
    term.a_cos = rng.uniform(-1.0, 1.0) * decay;
    term.a_sin = zero_freq ? 0.0 : rng.uniform(-1.0, 1.0) * decay;
    t.terms.push_back(std::move(term));
    // odometer over {0..k_max}^d
    int j = 0;
    while (j < d && ++k[j] > k_max) k[j++] = 0;
    if (j == d) break;
  }
  double raw = t.certificate();
  if (raw > 0.0) {
    double scale = (1.0 - 1e-9) / raw;
    for (auto& term : t.terms) {
      term.a_cos *= scale;
      term.a_sin *= scale;
    }
  }
  t.sobolev_bound = t.certificate();
  return t;
}

double NoiseModel::draw(uint64_t seed, uint64_t counter) const {
  CounterRng rng(seed, 5);
  if (kind == UniformBounded) return rng.uniform(counter, -sigma, sigma);
  return rng.rademacher(counter) * sigma;
}

SampleSet sample_data(const SmoothTarget& target, const NoiseModel& noise, int n, uint64_t seed) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  SampleSet s;
  s.d = target.d;
  s.label_bound = target.sup_bound() + noise.sigma;
  s.seed = seed;
  s.origin = "synthetic";
  CounterRng rng(seed, 7);
  s.points.resize(n);
  for (int i = 0; i < n; ++i) {
    auto& p = s.points[i];
    p.x.resize(target.d);
    uint64_t base = static_cast<uint64_t>(i) * (target.d + 1);
    for (int j = 0; j < target.d; ++j) p.x[j] = rng.uniform(base + j);
    p.y = target.eval(p.x) + noise.draw(seed, static_cast<uint64_t>(i));
  }
  s.validate();
  return s;
}

namespace {
// shared pair-quadrature driver: nodes are the midpoint tensor grid
template <class Eval>
double pair_quadrature(const SmoothTarget& target, int quad_points, Eval&& f_eval) {
  if (quad_points < 2) throw std::invalid_argument("quad_points too small");
  if (target.d > 2) throw std::invalid_argument("quadrature supports d <= 2 only");
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
  double total = chunked_sum(nodes * nodes, [&](std::size_t idx) {
    std::size_t i = idx / nodes, j = idx % nodes;
    double diff = f_eval(xs[i], xs[j]) - (tv[i] - tv[j]);
    return diff * diff;
  });
  return total * inv;
}
}  // namespace

double excess_risk_ls(const PairPredictor& f, const SmoothTarget& target, int quad_points) {
  return pair_quadrature(target, quad_points,
                         [&](const std::vector<double>& a, const std::vector<double>& b) {
                           return f(a, b);
                         });
}

VarianceExpectationReport verify_variance_expectation(
    const std::vector<PairPredictor>& candidates, const SmoothTarget& target,
    const NoiseModel& noise, int mc_n, uint64_t seed, const PairPredictor* reference) {
  if (mc_n < 2) throw std::invalid_argument("mc_n too small");
  double B = target.sup_bound() + noise.sigma;
  PairwiseLoss loss = PairwiseLoss::least_squares(B);
  BayesPredictor bayes{&target};
  VarianceExpectationReport rep;
  rep.checked = static_cast<int>(candidates.size());
  int d = target.d;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    CounterRng rng(seed, 100 + c);
    double sw = 0.0, sw2 = 0.0, sq = 0.0, sq2 = 0.0;
    std::vector<double> x(d), xp(d);
    for (int i = 0; i < mc_n; ++i) {
      uint64_t base = static_cast<uint64_t>(i) * (2 * d + 2);
      for (int j = 0; j < d; ++j) x[j] = rng.uniform(base + j);
      for (int j = 0; j < d; ++j) xp[j] = rng.uniform(base + d + j);
      double e = noise.sigma * (2.0 * rng.uniform(base + 2 * d) - 1.0);
      double ep = noise.sigma * (2.0 * rng.uniform(base + 2 * d + 1) - 1.0);
      if (noise.kind == NoiseModel::TwoPoint) {
        e = e >= 0.0 ? noise.sigma : -noise.sigma;
        ep = ep >= 0.0 ? noise.sigma : -noise.sigma;
      }
      double y = target.eval(x) + e, yp = target.eval(xp) + ep;
      double t = candidates[c](x, xp);
      double tref = reference ? (*reference)(x, xp) : bayes(x, xp);
      double q = loss(t, y, yp) - loss(tref, y, yp);
      double w = q * q - 64.0 * B * B * q;
      sw += w;
      sw2 += w * w;
      sq += q;
      sq2 += q * q;
    }
    double mw = sw / mc_n, mq = sq / mc_n;
    double vw = std::max(0.0, sw2 / mc_n - mw * mw);
    double vq = std::max(0.0, sq2 / mc_n - mq * mq);
    double sew = std::sqrt(vw / mc_n), seq = std::sqrt(vq / mc_n);
    if (seq > 0.0 && mq < -3.0 * seq) {
      ++rep.invalid;
      continue;
    }
    double margin = sew > 0.0 ? mw / sew : (mw > 0.0 ? 1e300 : 0.0);
    rep.worst_margin = std::max(rep.worst_margin, margin);
    if (mw > 3.0 * sew) ++rep.violations;
  }
  return rep;
}

// --- serialization ---------------------------------------------------------

std::string SmoothTarget::to_json() const {
  json j;
  j["d"] = d;
  j["r"] = r;
  j["k_max"] = k_max;
  j["seed"] = seed;
  j["sobolev_bound"] = sobolev_bound;
  json coeffs = json::array();
  for (const auto& t : terms) {
    json c;
    c["k"] = t.k;
    c["cos"] = t.a_cos;
    c["sin"] = t.a_sin;
    coeffs.push_back(c);
  }
  j["coefficients"] = coeffs;
  return j.dump(2);
}

SmoothTarget SmoothTarget::from_json(const std::string& text) {
  json j = json::parse(text);
  SmoothTarget t;
  t.d = j.at("d").get<int>();
  t.r = j.at("r").get<int>();
  t.k_max = j.at("k_max").get<int>();
  t.seed = j.at("seed").get<uint64_t>();
  t.sobolev_bound = j.at("sobolev_bound").get<double>();
  for (const auto& c : j.at("coefficients")) {
    SmoothTarget::Term term;
    term.k = c.at("k").get<std::vector<int>>();
    term.a_cos = c.at("cos").get<double>();
    term.a_sin = c.at("sin").get<double>();
    if (static_cast<int>(term.k.size()) != t.d)
      throw std::invalid_argument("coefficient dimension mismatch");
    t.terms.push_back(std::move(term));
  }
  return t;
}

void SmoothTarget::save(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  f << to_json() << "\n";
}

SmoothTarget SmoothTarget::load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_json(ss.str());
}

}  // namespace pairlearn
