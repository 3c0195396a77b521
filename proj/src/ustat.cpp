#include "pairlearn/ustat.hpp"

#include <cmath>
#include <stdexcept>

#include "pairlearn/rng.hpp"

namespace pairlearn {

double q_kernel(const PairPredictor& f, const PairPredictor& f_ref, const SamplePoint& a,
                const SamplePoint& b, const PairwiseLoss& loss) {
  return loss(f(a.x, b.x), a.y, b.y) - loss(f_ref(a.x, b.x), a.y, b.y);
}

std::vector<std::vector<double>> kernel_matrix(const PairPredictor& f, const PairPredictor& f_ref,
                                               const SampleSet& s, const PairwiseLoss& loss) {
  std::size_t n = s.size();
  if (n < 2) throw std::invalid_argument("insufficient sample: need n >= 2");
  std::vector<std::vector<double>> q(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) q[i][j] = q_kernel(f, f_ref, s.points[i], s.points[j], loss);
  return q;
}

std::vector<double> DiscreteKernel::degeneracy(const DiscreteDistribution& dist) const {
  std::vector<double> out(h.size(), 0.0);
  for (std::size_t k = 0; k < h.size(); ++k) {
    double s = 0.0;
    for (std::size_t l = 0; l < h.size(); ++l)
      s += dist.probs[l] * hhat(static_cast<int>(k), static_cast<int>(l));
    out[k] = s;
  }
  return out;
}

DiscreteKernel make_discrete_kernel(const PairPredictor& f, const PairPredictor& f_ref,
                                    const DiscreteDistribution& dist, const PairwiseLoss& loss) {
  dist.validate();
  std::size_t m = dist.size();
  DiscreteKernel kern;
  kern.q.assign(m, std::vector<double>(m, 0.0));
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t l = 0; l < m; ++l)
      kern.q[k][l] = q_kernel(f, f_ref, dist.atoms[k], dist.atoms[l], loss);
  kern.expected_u = 0.0;
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t l = 0; l < m; ++l)
      kern.expected_u += dist.probs[k] * dist.probs[l] * kern.q[k][l];
  kern.h.assign(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    double cond = 0.0;
    for (std::size_t l = 0; l < m; ++l) cond += dist.probs[l] * kern.q[k][l];
    kern.h[k] = kern.expected_u - cond;
  }
  return kern;
}

namespace {
// assembles the sample-level decomposition from per-point h values, an
// expected_u estimate, the q matrix, and (possibly distinct) pieces for hhat
HoeffdingDecomposition assemble(const std::vector<std::vector<double>>& q, double expected_u_t,
                                const std::vector<double>& h_t, double expected_u_w,
                                const std::vector<double>& h_w) {
  std::size_t n = h_t.size();
  HoeffdingDecomposition d;
  d.expected_u = expected_u_t;
  d.h_values = h_t;
  double us = 0.0, ts = 0.0, wsum = 0.0;
  d.hhat.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    ts += h_t[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      us += q[i][j];
      d.hhat[i][j] = expected_u_w - h_w[i] - h_w[j] - q[i][j];
      wsum += d.hhat[i][j];
    }
  }
  double pairs = static_cast<double>(n) * static_cast<double>(n - 1);
  d.u_n = us / pairs;
  d.t_n = ts / static_cast<double>(n);
  d.w_n = wsum / pairs;
  return d;
}
}  // namespace

HoeffdingDecomposition hoeffding_decompose_exact(const PairPredictor& f,
                                                 const PairPredictor& f_ref, const SampleSet& s,
                                                 const DiscreteDistribution& dist,
                                                 const PairwiseLoss& loss) {
  std::size_t n = s.size();
  if (n < 2) throw std::invalid_argument("insufficient sample: need n >= 2");
  std::vector<int> atom_of(n);
  for (std::size_t i = 0; i < n; ++i) {
    atom_of[i] = dist.find_atom(s.points[i]);
    if (atom_of[i] < 0)
      throw std::invalid_argument("exact decomposition needs sample points on the atoms");
  }
  DiscreteKernel kern = make_discrete_kernel(f, f_ref, dist, loss);
  std::vector<std::vector<double>> q(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) q[i][j] = kern.q[atom_of[i]][atom_of[j]];
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = kern.h[atom_of[i]];
  return assemble(q, kern.expected_u, h, kern.expected_u, h);
}

ZSampler make_synthetic_sampler(const SmoothTarget& target, const NoiseModel& noise,
                                uint64_t seed) {
  SmoothTarget t = target;
  NoiseModel nm = noise;
  CounterRng rng(seed, 41);
  ZSampler z;
  z.d = target.d;
  z.draw = [t, nm, rng](uint64_t counter) {
    SamplePoint p;
    p.x.resize(t.d);
    uint64_t base = counter * static_cast<uint64_t>(t.d + 1);
    for (int j = 0; j < t.d; ++j) p.x[j] = rng.uniform(base + j);
    double u = rng.uniform(base + t.d);
    double e = nm.kind == NoiseModel::TwoPoint ? (u < 0.5 ? -nm.sigma : nm.sigma)
                                               : nm.sigma * (2.0 * u - 1.0);
    p.y = t.eval(p.x) + e;
    return p;
  };
  return z;
}

ZSampler make_discrete_sampler(const DiscreteDistribution& dist, uint64_t seed) {
  DiscreteDistribution d = dist;
  d.validate();
  CounterRng rng(seed, 43);
  ZSampler z;
  z.d = dist.d;
  z.draw = [d, rng](uint64_t counter) {
    double u = rng.uniform(counter);
    double c = 0.0;
    std::size_t k = 0;
    for (; k + 1 < d.probs.size(); ++k) {
      c += d.probs[k];
      if (u < c) break;
    }
    return d.atoms[k];
  };
  return z;
}

McHoeffdingDecomposition hoeffding_decompose_mc(const PairPredictor& f,
                                                const PairPredictor& f_ref, const SampleSet& s,
                                                const ZSampler& z, int mc_budget,
                                                const PairwiseLoss& loss) {
  std::size_t n = s.size();
  if (n < 2) throw std::invalid_argument("insufficient sample: need n >= 2");
  if (mc_budget < 2) throw std::invalid_argument("mc_budget too small");
  std::vector<std::vector<double>> q(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) q[i][j] = q_kernel(f, f_ref, s.points[i], s.points[j], loss);

  // independent draw sets: stream offsets partition the counter space
  auto pair_mean = [&](uint64_t stream, double* se) {
    double sum = 0.0, sum2 = 0.0;
    for (int k = 0; k < mc_budget; ++k) {
      uint64_t base = (stream * static_cast<uint64_t>(mc_budget) + k) * 2;
      SamplePoint a = z.draw(base);
      SamplePoint b = z.draw(base + 1);
      double v = q_kernel(f, f_ref, a, b, loss);
      sum += v;
      sum2 += v * v;
    }
    double m = sum / mc_budget;
    if (se) {
      double var = std::max(0.0, sum2 / mc_budget - m * m);
      *se = std::sqrt(var / mc_budget);
    }
    return m;
  };
  auto cond_mean = [&](std::size_t i, uint64_t stream, double* se) {
    double sum = 0.0, sum2 = 0.0;
    // counters disjoint from the pair streams and from every other (stream, i)
    uint64_t block = (1000000ULL + stream * 500000ULL + i) * static_cast<uint64_t>(mc_budget);
    for (int k = 0; k < mc_budget; ++k) {
      SamplePoint b = z.draw(block + static_cast<uint64_t>(k));
      double v = q_kernel(f, f_ref, s.points[i], b, loss);
      sum += v;
      sum2 += v * v;
    }
    double m = sum / mc_budget;
    if (se) {
      double var = std::max(0.0, sum2 / mc_budget - m * m);
      *se = std::sqrt(var / mc_budget);
    }
    return m;
  };

  McHoeffdingDecomposition out;
  double eu_a = pair_mean(0, &out.expected_u_se);
  double eu_c = pair_mean(1, nullptr);
  std::vector<double> h_t(n), h_w(n);
  out.h_se.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    h_t[i] = eu_a - cond_mean(i, 0, &out.h_se[i]);
    h_w[i] = eu_c - cond_mean(i, 1, nullptr);
  }
  static_cast<HoeffdingDecomposition&>(out) = assemble(q, eu_a, h_t, eu_c, h_w);
  return out;
}

ChaosDiagnostics chaos_diagnostics(const std::vector<std::vector<std::vector<double>>>& mats,
                                   int mc_draws, uint64_t seed) {
  if (mats.empty()) throw std::invalid_argument("no kernels given");
  if (mc_draws < 1) throw std::invalid_argument("mc_draws must be >= 1");
  std::size_t n = mats[0].size();
  for (const auto& m : mats)
    if (m.size() != n) throw std::invalid_argument("kernel size mismatch");

  ChaosDiagnostics diag;
  diag.draws = mc_draws;
  for (const auto& m : mats) {
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        diag.f_sup = std::max(diag.f_sup, std::fabs(m[i][j]));
        ss += m[i][j] * m[i][j];
      }
    diag.d_sup = std::max(diag.d_sup, std::sqrt(ss / (static_cast<double>(n) * (n - 1))));
  }

  CounterRng rng(seed, 55);
  std::vector<int> eps(n);
  std::vector<double> he(n);
  diag.z_per_draw.resize(mc_draws);
  diag.u_per_draw.resize(mc_draws);
  diag.m_per_draw.resize(mc_draws);
  for (int t = 0; t < mc_draws; ++t) {
    for (std::size_t i = 0; i < n; ++i)
      eps[i] = rng.rademacher(static_cast<uint64_t>(t) * n + i);
    double zmax = 0.0, umax = 0.0, mmax = 0.0;
    for (const auto& m : mats) {
      double quad = 0.0;
      double l2 = 0.0, linf = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (i == j) continue;
          row += m[i][j] * eps[j];
        }
        he[i] = row;
        quad += eps[i] * row;
        l2 += row * row;
        linf = std::max(linf, std::fabs(row));
      }
      zmax = std::max(zmax, std::fabs(quad));
      umax = std::max(umax, std::sqrt(l2));
      mmax = std::max(mmax, linf);
    }
    diag.z_per_draw[t] = zmax;
    diag.u_per_draw[t] = umax;
    diag.m_per_draw[t] = mmax;
    diag.z_mean += zmax;
    diag.u_mean += umax;
    diag.m_mean += mmax;
  }
  diag.z_mean /= mc_draws;
  diag.u_mean /= mc_draws;
  diag.m_mean /= mc_draws;
  return diag;
}

}  // namespace pairlearn
