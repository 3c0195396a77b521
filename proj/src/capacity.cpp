#include "pairlearn/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pairlearn/rng.hpp"

namespace pairlearn {

double FunctionClassSample::dist(std::size_t i, std::size_t j) const {
  return cross_dist(*this, i, *this, j);
}

double cross_dist(const FunctionClassSample& a, std::size_t i, const FunctionClassSample& b,
                  std::size_t j) {
  if (a.npoints() != b.npoints()) throw std::invalid_argument("point sets differ");
  double s = 0.0;
  for (std::size_t p = 0; p < a.weights.size(); ++p) {
    double d = a.values[i][p] - b.values[j][p];
    s += a.weights[p] * d * d;
  }
  return std::sqrt(s);
}

double FunctionClassSample::norm(std::size_t i) const {
  double s = 0.0;
  for (std::size_t p = 0; p < weights.size(); ++p)
    s += weights[p] * values[i][p] * values[i][p];
  return std::sqrt(s);
}

double FunctionClassSample::mean(std::size_t i) const {
  double s = 0.0;
  for (std::size_t p = 0; p < weights.size(); ++p) s += weights[p] * values[i][p];
  return s;
}

double FunctionClassSample::moment2(std::size_t i) const {
  double s = 0.0;
  for (std::size_t p = 0; p < weights.size(); ++p)
    s += weights[p] * values[i][p] * values[i][p];
  return s;
}

// --- builders ---------------------------------------------------------------

FunctionClassSample class_on_pairs(const std::vector<PairPredictor>& members,
                                   const SampleSet& s) {
  std::size_t n = s.size();
  if (n < 2) throw std::invalid_argument("insufficient sample: need n >= 2");
  FunctionClassSample cls;
  std::size_t np = n * (n - 1);
  cls.weights.assign(np, 1.0 / static_cast<double>(np));
  for (const auto& f : members) {
    std::vector<double> row(np);
    std::size_t p = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        row[p++] = f(s.points[i].x, s.points[j].x);
      }
    cls.values.push_back(std::move(row));
  }
  return cls;
}

FunctionClassSample class_on_cross(const std::vector<PairPredictor>& members, const SampleSet& s,
                                   const DiscreteDistribution* atoms, int quad_points) {
  std::size_t n = s.size();
  if (n < 1) throw std::invalid_argument("insufficient sample");
  std::vector<std::vector<double>> inner;
  std::vector<double> inner_w;
  if (atoms) {
    for (std::size_t k = 0; k < atoms->size(); ++k) {
      inner.push_back(atoms->atoms[k].x);
      inner_w.push_back(atoms->probs[k]);
    }
  } else {
    int d = s.d;
    if (d > 2) throw std::invalid_argument("cross grid supports d <= 2 without atoms");
    if (d == 1) {
      for (int g = 0; g < quad_points; ++g) {
        inner.push_back({(g + 0.5) / quad_points});
        inner_w.push_back(1.0 / quad_points);
      }
    } else {
      for (int g1 = 0; g1 < quad_points; ++g1)
        for (int g2 = 0; g2 < quad_points; ++g2) {
          inner.push_back({(g1 + 0.5) / quad_points, (g2 + 0.5) / quad_points});
          inner_w.push_back(1.0 / (static_cast<double>(quad_points) * quad_points));
        }
    }
  }
  FunctionClassSample cls;
  std::size_t np = inner.size() * n;
  cls.weights.resize(np);
  std::size_t p = 0;
  for (std::size_t g = 0; g < inner.size(); ++g)
    for (std::size_t i = 0; i < n; ++i) cls.weights[p++] = inner_w[g] / static_cast<double>(n);
  for (const auto& f : members) {
    std::vector<double> row(np);
    p = 0;
    for (std::size_t g = 0; g < inner.size(); ++g)
      for (std::size_t i = 0; i < n; ++i) row[p++] = f(inner[g], s.points[i].x);
    cls.values.push_back(std::move(row));
  }
  return cls;
}

double shifted_value(const PairPredictor& f, const PairPredictor& f_ref, const SamplePoint& z,
                     const DiscreteDistribution& dist, const PairwiseLoss& loss) {
  double s = 0.0;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    const auto& a = dist.atoms[k];
    s += dist.probs[k] *
         (loss(f(z.x, a.x), z.y, a.y) - loss(f_ref(z.x, a.x), z.y, a.y));
  }
  return s;
}

FunctionClassSample shifted_class_atoms(const std::vector<PairPredictor>& members,
                                        const PairPredictor& f_ref,
                                        const DiscreteDistribution& dist,
                                        const PairwiseLoss& loss) {
  dist.validate();
  FunctionClassSample cls;
  cls.weights = dist.probs;
  for (const auto& f : members) {
    std::vector<double> row(dist.size());
    for (std::size_t k = 0; k < dist.size(); ++k)
      row[k] = shifted_value(f, f_ref, dist.atoms[k], dist, loss);
    cls.values.push_back(std::move(row));
  }
  return cls;
}

FunctionClassSample shifted_class_sample(const std::vector<PairPredictor>& members,
                                         const PairPredictor& f_ref, const SampleSet& s,
                                         const DiscreteDistribution& dist,
                                         const PairwiseLoss& loss) {
  if (s.size() < 1) throw std::invalid_argument("insufficient sample");
  FunctionClassSample cls;
  cls.weights.assign(s.size(), 1.0 / static_cast<double>(s.size()));
  for (const auto& f : members) {
    std::vector<double> row(s.size());
    for (std::size_t i = 0; i < s.size(); ++i)
      row[i] = shifted_value(f, f_ref, s.points[i], dist, loss);
    cls.values.push_back(std::move(row));
  }
  return cls;
}

FunctionClassSample star_hull_grid(const FunctionClassSample& cls, int alpha_steps) {
  if (alpha_steps < 1) throw std::invalid_argument("alpha_steps must be >= 1");
  FunctionClassSample hull;
  hull.weights = cls.weights;
  for (std::size_t m = 0; m < cls.size(); ++m) {
    for (int i = 0; i <= alpha_steps; ++i) {
      double alpha = static_cast<double>(i) / alpha_steps;
      std::vector<double> row(cls.values[m].size());
      for (std::size_t p = 0; p < row.size(); ++p) row[p] = alpha * cls.values[m][p];
      bool dup = false;
      for (const auto& existing : hull.values)
        if (existing == row) {
          dup = true;
          break;
        }
      if (!dup) hull.values.push_back(std::move(row));
    }
  }
  return hull;
}

// --- covering ---------------------------------------------------------------

std::vector<std::size_t> covering_net_greedy(const FunctionClassSample& cls, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("eps must be positive");
  std::size_t m = cls.size();
  if (m == 0) throw std::invalid_argument("empty class");
  std::vector<std::size_t> centers{0};
  std::vector<double> best(m);
  for (std::size_t i = 0; i < m; ++i) best[i] = cls.dist(i, 0);
  for (;;) {
    std::size_t far = 0;
    for (std::size_t i = 1; i < m; ++i)
      if (best[i] > best[far]) far = i;  // ties keep the lowest index
    if (best[far] <= eps) break;
    centers.push_back(far);
    for (std::size_t i = 0; i < m; ++i) best[i] = std::min(best[i], cls.dist(i, far));
  }
  return centers;
}

namespace {
struct CoverSearch {
  const std::vector<std::vector<std::size_t>>* covers_of;  // element -> candidate sets
  const std::vector<std::vector<char>>* in_set;            // candidate -> element bitmap
  std::size_t n_elems;
  std::size_t best;
  std::size_t max_ball;

  void run(std::vector<char>& covered, std::size_t ncovered, std::size_t used) {
    if (ncovered == n_elems) {
      best = std::min(best, used);
      return;
    }
    // lower bound: remaining elements / biggest ball
    std::size_t remaining = n_elems - ncovered;
    if (used + (remaining + max_ball - 1) / max_ball >= best) return;
    // branch on the uncovered element with the fewest covering candidates
    std::size_t pick = n_elems;
    std::size_t fewest = static_cast<std::size_t>(-1);
    for (std::size_t e = 0; e < n_elems; ++e) {
      if (covered[e]) continue;
      std::size_t c = (*covers_of)[e].size();
      if (c < fewest) {
        fewest = c;
        pick = e;
      }
    }
    if (pick == n_elems || fewest == 0) return;  // uncoverable
    for (std::size_t cand : (*covers_of)[pick]) {
      std::vector<std::size_t> newly;
      for (std::size_t e = 0; e < n_elems; ++e)
        if (!covered[e] && (*in_set)[cand][e]) {
          covered[e] = 1;
          newly.push_back(e);
        }
      run(covered, ncovered + newly.size(), used + 1);
      for (std::size_t e : newly) covered[e] = 0;
    }
  }
};
}  // namespace

std::size_t covering_number_exact(const FunctionClassSample& universe,
                                  const FunctionClassSample& candidates, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("eps must be positive");
  std::size_t ne = universe.size(), nc = candidates.size();
  if (ne == 0 || nc == 0) throw std::invalid_argument("empty class");
  std::vector<std::vector<char>> in_set(nc, std::vector<char>(ne, 0));
  std::vector<std::vector<std::size_t>> covers_of(ne);
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t e = 0; e < ne; ++e)
      if (cross_dist(candidates, c, universe, e) <= eps) {
        in_set[c][e] = 1;
        covers_of[e].push_back(c);
      }
  std::size_t max_ball = 0;
  for (std::size_t c = 0; c < nc; ++c) {
    std::size_t sz = 0;
    for (std::size_t e = 0; e < ne; ++e) sz += in_set[c][e];
    max_ball = std::max(max_ball, sz);
  }
  if (max_ball == 0) throw std::invalid_argument("eps too small: some element uncoverable");
  // greedy upper bound
  std::vector<char> covered(ne, 0);
  std::size_t ncov = 0, greedy = 0;
  while (ncov < ne) {
    std::size_t bestc = nc, bestgain = 0;
    for (std::size_t c = 0; c < nc; ++c) {
      std::size_t gain = 0;
      for (std::size_t e = 0; e < ne; ++e) gain += !covered[e] && in_set[c][e];
      if (gain > bestgain) {
        bestgain = gain;
        bestc = c;
      }
    }
    if (bestc == nc) throw std::invalid_argument("eps too small: some element uncoverable");
    for (std::size_t e = 0; e < ne; ++e)
      if (in_set[bestc][e] && !covered[e]) {
        covered[e] = 1;
        ++ncov;
      }
    ++greedy;
  }
  CoverSearch search{&covers_of, &in_set, ne, greedy, max_ball};
  std::vector<char> cov(ne, 0);
  search.run(cov, 0, 0);
  return search.best;
}

// --- local complexity -------------------------------------------------------

LocalComplexityCurve local_complexity_curve(const FunctionClassSample& cls, int n,
                                            const std::vector<double>& r_grid, int mc_draws,
                                            uint64_t seed, StarMode mode) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (mc_draws < 1) throw std::invalid_argument("mc_draws must be >= 1");
  for (double r : r_grid)
    if (r < 0.0) throw std::invalid_argument("radius must be nonnegative");
  std::size_t m = cls.size();
  std::size_t npts = cls.npoints();
  std::vector<double> means(m), m2(m);
  for (std::size_t g = 0; g < m; ++g) {
    means[g] = cls.mean(g);
    m2[g] = cls.moment2(g);
  }
  // cumulative weights for categorical sampling
  std::vector<double> cum(npts);
  double acc = 0.0;
  for (std::size_t p = 0; p < npts; ++p) {
    acc += cls.weights[p];
    cum[p] = acc;
  }

  LocalComplexityCurve out;
  out.r = r_grid;
  out.phi.assign(r_grid.size(), 0.0);
  out.se.assign(r_grid.size(), 0.0);
  std::vector<double> sum(r_grid.size(), 0.0), sum2(r_grid.size(), 0.0);
  CounterRng rng(seed, 91);
  std::vector<int> counts(npts);
  std::vector<double> dev(m);
  for (int t = 0; t < mc_draws; ++t) {
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) {
      double u = rng.uniform(static_cast<uint64_t>(t) * n + i);
      std::size_t p = static_cast<std::size_t>(
          std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
      if (p >= npts) p = npts - 1;
      ++counts[p];
    }
    for (std::size_t g = 0; g < m; ++g) {
      double s = 0.0;
      for (std::size_t p = 0; p < npts; ++p) {
        if (counts[p] == 0 && cls.weights[p] == 0.0) continue;
        s += (cls.weights[p] - static_cast<double>(counts[p]) / n) * cls.values[g][p];
      }
      dev[g] = std::fabs(s);
    }
    for (std::size_t ri = 0; ri < r_grid.size(); ++ri) {
      double r = r_grid[ri];
      double sup = 0.0;
      for (std::size_t g = 0; g < m; ++g) {
        if (mode == StarMode::Continuous) {
          double alpha = (m2[g] > 0.0) ? std::min(1.0, std::sqrt(r / m2[g])) : 1.0;
          sup = std::max(sup, alpha * dev[g]);
        } else {
          if (m2[g] <= r) sup = std::max(sup, dev[g]);
        }
      }
      sum[ri] += sup;
      sum2[ri] += sup * sup;
    }
  }
  for (std::size_t ri = 0; ri < r_grid.size(); ++ri) {
    double mean = sum[ri] / mc_draws;
    double var = std::max(0.0, sum2[ri] / mc_draws - mean * mean);
    out.phi[ri] = mean;
    out.se[ri] = std::sqrt(var / mc_draws);
  }
  return out;
}

double local_complexity(const FunctionClassSample& cls, int n, double r, int mc_draws,
                        uint64_t seed, StarMode mode) {
  return local_complexity_curve(cls, n, {r}, mc_draws, seed, mode).phi[0];
}

// --- fixed point ------------------------------------------------------------

double fixed_point(const std::vector<double>& r_grid, const std::vector<double>& psi) {
  if (r_grid.size() != psi.size() || r_grid.size() < 2)
    throw std::invalid_argument("grid and psi must align with >= 2 entries");
  for (std::size_t i = 0; i < r_grid.size(); ++i) {
    if (r_grid[i] <= 0.0) throw std::invalid_argument("radii must be positive");
    if (psi[i] < 0.0) throw std::invalid_argument("psi must be nonnegative");
    if (i > 0 && r_grid[i] <= r_grid[i - 1])
      throw std::invalid_argument("radii must be strictly increasing");
  }
  // bracketing cell: psi - r changes sign from >= 0 to <= 0
  std::size_t cell = r_grid.size();
  for (std::size_t i = 0; i + 1 < r_grid.size(); ++i) {
    if (psi[i] - r_grid[i] == 0.0) return r_grid[i];
    if (psi[i] - r_grid[i] > 0.0 && psi[i + 1] - r_grid[i + 1] <= 0.0) {
      cell = i;
      break;
    }
  }
  if (psi.back() - r_grid.back() == 0.0) return r_grid.back();
  if (cell == r_grid.size()) throw std::invalid_argument("fixed point outside grid");

  // log-log interpolation within the cell (exact on power laws a r^b)
  double lr0 = std::log(r_grid[cell]), lr1 = std::log(r_grid[cell + 1]);
  double lp0 = std::log(std::max(psi[cell], 1e-300));
  double lp1 = std::log(std::max(psi[cell + 1], 1e-300));
  auto interp = [&](double r) {
    double t = (std::log(r) - lr0) / (lr1 - lr0);
    return std::exp(lp0 + t * (lp1 - lp0));
  };
  double lo = r_grid[cell], hi = r_grid[cell + 1];
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (interp(mid) - mid > 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-15 * hi) break;
  }
  return 0.5 * (lo + hi);
}

// --- sizing -----------------------------------------------------------------

NetSize size_network(long long n, int d, int r) {
  if (n < 2) throw std::invalid_argument("n must be >= 2");
  if (d < 1 || r < 1) throw std::invalid_argument("d and r must be >= 1");
  NetSize sz;
  double ratio = static_cast<double>(d) / (2.0 * r + d);
  sz.depth_L = static_cast<int>(std::ceil(ratio * std::log(static_cast<double>(n))));
  if (sz.depth_L < 1) sz.depth_L = 1;
  double w = std::ceil(std::exp(static_cast<double>(sz.depth_L)));
  sz.weights_W = static_cast<long long>(w);
  sz.units_U = static_cast<long long>(w);
  return sz;
}

long long pdim_budget(const NetComplexity& c) {
  if (c.depth < 1 || c.nonzero_weights < 1 || c.units < 1)
    throw std::invalid_argument("complexity counts must be positive");
  long long lnU = static_cast<long long>(std::ceil(std::log(static_cast<double>(c.units))));
  return static_cast<long long>(c.depth) * c.nonzero_weights * lnU;
}

CapacityFit fit_capacity_exponents(const std::vector<double>& eps_grid,
                                   const std::vector<std::size_t>& counts) {
  if (eps_grid.size() != counts.size() || eps_grid.size() < 3)
    throw std::invalid_argument("need >= 3 (eps, count) points");
  double first = eps_grid.front();
  bool degenerate = true;
  for (double e : eps_grid) {
    if (e <= 0.0) throw std::invalid_argument("eps must be positive");
    if (e != first) degenerate = false;
  }
  if (degenerate) throw std::invalid_argument("degenerate eps grid");
  for (std::size_t c : counts)
    if (c < 1) throw std::invalid_argument("counts must be >= 1");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = eps_grid.size();
  for (std::size_t i = 0; i < n; ++i) {
    double x = std::log(1.0 / eps_grid[i]);
    double y = std::log(static_cast<double>(counts[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double denom = n * sxx - sx * sx;
  CapacityFit fit;
  fit.exponent_v = (n * sxy - sx * sy) / denom;
  fit.log_s = (sy - fit.exponent_v * sx) / n;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double x = std::log(1.0 / eps_grid[i]);
    double y = std::log(static_cast<double>(counts[i]));
    double e = y - (fit.log_s + fit.exponent_v * x);
    ss += e * e;
  }
  fit.rms_residual = std::sqrt(ss / n);
  return fit;
}

}  // namespace pairlearn
