#include "pairlearn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "pairlearn/csv.hpp"
#include "pairlearn/risk.hpp"
#include "pairlearn/rng.hpp"

namespace pairlearn {

// --- config ------------------------------------------------------------------

namespace {
std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}
}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    cfg.kv[key] = val;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

std::string KeyValueConfig::str(const std::string& key, const std::string& fallback) const {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

long long KeyValueConfig::integer(const std::string& key, long long fallback) const {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  std::size_t pos = 0;
  long long v = std::stoll(it->second, &pos);
  if (pos != it->second.size())
    throw std::invalid_argument("config key " + key + ": not an integer: " + it->second);
  return v;
}

double KeyValueConfig::real(const std::string& key, double fallback) const {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  std::size_t pos = 0;
  double v = std::stod(it->second, &pos);
  if (pos != it->second.size())
    throw std::invalid_argument("config key " + key + ": not a number: " + it->second);
  return v;
}

std::vector<long long> KeyValueConfig::int_list(const std::string& key,
                                                const std::vector<long long>& fallback) const {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  std::vector<long long> out;
  std::string item;
  std::istringstream ss(it->second);
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::size_t pos = 0;
    out.push_back(std::stoll(item, &pos));
    if (pos != item.size())
      throw std::invalid_argument("config key " + key + ": bad list entry: " + item);
  }
  if (out.empty()) throw std::invalid_argument("config key " + key + ": empty list");
  return out;
}

int thread_budget(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PAIRLEARN_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<int>(v);
  }
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
#endif
}

namespace {

void reject_unknown_keys(const KeyValueConfig& kv, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : kv.kv)
    if (!allowed.count(key)) throw std::invalid_argument("unknown config key: " + key);
}

// runs job(index, inner_parallel) over [0, njobs).  A single worker stays on
// the calling thread with OpenMP enabled inside the job; multiple workers use
// plain threads and disable the nested OpenMP level instead.
template <class Job>
void run_pool(std::size_t njobs, int width, Job&& job) {
  if (width <= 1 || njobs <= 1) {
    for (std::size_t i = 0; i < njobs; ++i) job(i, true);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= njobs || failed.load()) return;
      try {
        job(i, false);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  int w = std::min<std::size_t>(static_cast<std::size_t>(width), njobs);
  threads.reserve(w);
  for (int t = 0; t < w; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

struct LineFit {
  double intercept = 0.0, slope = 0.0, slope_se = 0.0;
};

LineFit fit_line(const std::vector<double>& xs, const std::vector<double>& ys) {
  std::size_t m = xs.size();
  if (m < 2 || ys.size() != m) throw std::invalid_argument("line fit needs >= 2 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("line fit: degenerate abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  if (m > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double r = ys[i] - f.intercept - f.slope * xs[i];
      rss += r * r;
    }
    f.slope_se = std::sqrt(rss / static_cast<double>(m - 2) / sxx);
  }
  return f;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  std::size_t m = v.size();
  return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

std::vector<double> geometric_grid(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi >= lo) || points < 1)
    throw std::invalid_argument("geometric grid needs 0 < lo <= hi and points >= 1");
  std::vector<double> g(points);
  if (points == 1) {
    g[0] = lo;
    return g;
  }
  double step = std::log(hi / lo) / static_cast<double>(points - 1);
  for (int i = 0; i < points; ++i) g[i] = lo * std::exp(step * i);
  return g;
}

// optimal pairwise predictor when every x value pins down its label exactly
PairPredictor make_atom_bayes(const DiscreteDistribution& dist) {
  return [dist](std::span<const double> x, std::span<const double> xp) {
    auto label = [&](std::span<const double> v) {
      for (const auto& atom : dist.atoms) {
        if (atom.x.size() != v.size()) continue;
        bool same = true;
        for (std::size_t j = 0; j < v.size(); ++j)
          if (atom.x[j] != v[j]) {
            same = false;
            break;
          }
        if (same) return atom.y;
      }
      throw std::invalid_argument("point is not an atom of the reference distribution");
    };
    return label(x) - label(xp);
  };
}

}  // namespace

// --- rate study --------------------------------------------------------------

RateStudyConfig rate_config_from(const KeyValueConfig& kv) {
  reject_unknown_keys(kv, {"outdir", "seed", "threads", "n_grid", "seeds", "d", "r", "k_max",
                           "target_seed", "sigma", "lr", "max_epochs", "tol", "tol_window",
                           "full_batch_max_n", "sampled_factor", "eta_factor", "quad_points",
                           "restarts", "dump_traces"});
  RateStudyConfig c;
  c.outdir = kv.str("outdir", c.outdir);
  c.seed = static_cast<uint64_t>(kv.integer("seed", static_cast<long long>(c.seed)));
  c.threads = static_cast<int>(kv.integer("threads", c.threads));
  c.n_grid = kv.int_list("n_grid", c.n_grid);
  c.seeds = static_cast<int>(kv.integer("seeds", c.seeds));
  c.d = static_cast<int>(kv.integer("d", c.d));
  c.r = static_cast<int>(kv.integer("r", c.r));
  c.k_max = static_cast<int>(kv.integer("k_max", c.k_max));
  c.target_seed = static_cast<uint64_t>(kv.integer("target_seed", static_cast<long long>(c.target_seed)));
  c.sigma = kv.real("sigma", c.sigma);
  c.lr = kv.real("lr", c.lr);
  c.max_epochs = static_cast<int>(kv.integer("max_epochs", c.max_epochs));
  c.tol = kv.real("tol", c.tol);
  c.tol_window = static_cast<int>(kv.integer("tol_window", c.tol_window));
  c.full_batch_max_n = kv.integer("full_batch_max_n", c.full_batch_max_n);
  c.sampled_factor = kv.integer("sampled_factor", c.sampled_factor);
  c.eta_factor = kv.real("eta_factor", c.eta_factor);
  c.quad_points = static_cast<int>(kv.integer("quad_points", c.quad_points));
  c.restarts = static_cast<int>(kv.integer("restarts", c.restarts));
  c.dump_traces = kv.integer("dump_traces", c.dump_traces ? 1 : 0) != 0;
  if (c.seeds < 1) throw std::invalid_argument("seeds must be >= 1");
  if (c.restarts < 1) throw std::invalid_argument("restarts must be >= 1");
  for (long long n : c.n_grid)
    if (n < 2) throw std::invalid_argument("n_grid entries must be >= 2");
  return c;
}

RateStudyResult run_rate_study(const RateStudyConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  SmoothTarget target = generate_target(cfg.d, cfg.r, cfg.k_max, cfg.target_seed);
  NoiseModel noise{NoiseModel::UniformBounded, cfg.sigma};
  double B = target.sup_bound() + cfg.sigma;
  PairwiseLoss loss = PairwiseLoss::least_squares(B);
  double eta = cfg.eta_factor * B;

  RateStudyResult res;
  res.n_grid = cfg.n_grid;
  res.theory_slope = -2.0 * cfg.r / (2.0 * cfg.r + cfg.d);
  std::size_t reps = static_cast<std::size_t>(cfg.seeds);
  std::size_t njobs = cfg.n_grid.size() * reps;
  res.rows.resize(njobs);
  if (cfg.dump_traces) std::filesystem::create_directories(cfg.outdir);

  run_pool(njobs, thread_budget(cfg.threads), [&](std::size_t jid, bool inner_parallel) {
    std::size_t gi = jid / reps;
    int rep = static_cast<int>(jid % reps);
    long long n = cfg.n_grid[gi];
    uint64_t job_seed = mix64(mix64(cfg.seed ^ static_cast<uint64_t>(n)) + static_cast<uint64_t>(rep));

    RateRow row;
    row.n = n;
    row.seed = rep;
    NetSize sz = size_network(n, cfg.d, cfg.r);
    row.depth_L = sz.depth_L;
    row.weights_W = sz.weights_W;
    row.units_U = sz.units_U;
    SampleSet data = sample_data(target, noise, static_cast<int>(n), job_seed);

    TrainConfig tc;
    tc.learning_rate = cfg.lr;
    tc.max_epochs = cfg.max_epochs;
    tc.mode = n <= cfg.full_batch_max_n ? BatchMode::FullPairBatch : BatchMode::SampledPairs;
    tc.sampled_pairs = cfg.sampled_factor * n;
    tc.tol = cfg.tol;
    tc.tol_window = cfg.tol_window;
    tc.seed = job_seed;
    tc.parallel = inner_parallel;
    // gradient descent on these nonconvex nets occasionally stalls in a poor
    // basin; several independent inits are trained on the same data and the one
    // with the lowest final empirical risk is kept (the restarts jointly act as
    // the empirical minimizer)
    bool have = false;
    TrainResult best;
    for (int attempt = 0; attempt < cfg.restarts; ++attempt) {
      uint64_t net_seed = mix64(job_seed + 10007ull * static_cast<uint64_t>(attempt));
      AntisymNet net0 =
          AntisymNet::sized(cfg.d, sz.depth_L, sz.weights_W, sz.units_U, eta, net_seed);
      try {
        TrainResult tr = train_erm(net0, data, loss, tc);
        if (!have || tr.trace.final_risk < best.trace.final_risk) {
          best = std::move(tr);
          have = true;
        }
      } catch (const TrainDivergence& e) {
        if (!have) {
          row.epochs = e.trace.epochs;
          row.final_risk = e.trace.final_risk;
        }
      }
    }
    if (have) {
      row.epochs = best.trace.epochs;
      row.final_risk = best.trace.final_risk;
      row.excess = excess_risk_ls(best.net, target, cfg.quad_points);
      if (cfg.dump_traces)
        write_trace_csv(best.trace, cfg.outdir + "/trace-n" + std::to_string(n) + "-s" +
                                        std::to_string(rep) + ".csv");
    } else {
      row.diverged = true;
      row.excess = std::numeric_limits<double>::quiet_NaN();
    }
    res.rows[jid] = row;
  });

  res.median_excess.resize(cfg.n_grid.size());
  std::vector<double> lx, ly;
  for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
    std::vector<double> ex;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const RateRow& row = res.rows[gi * reps + rep];
      if (row.diverged) {
        ++res.diverged;
        continue;
      }
      ex.push_back(row.excess);
    }
    res.median_excess[gi] = median_of(ex);
    if (std::isfinite(res.median_excess[gi]) && res.median_excess[gi] > 0.0) {
      lx.push_back(std::log(static_cast<double>(cfg.n_grid[gi])));
      ly.push_back(std::log(res.median_excess[gi]));
    }
  }
  if (lx.size() >= 2) {
    LineFit fit = fit_line(lx, ly);
    res.slope = fit.slope;
    res.slope_stderr = fit.slope_se;
    res.slope_defined = lx.size() == cfg.n_grid.size();
  }
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// --- decomposition study -----------------------------------------------------

DecomposeStudyConfig decompose_config_from(const KeyValueConfig& kv) {
  reject_unknown_keys(kv, {"outdir", "seed", "threads", "mode", "n_grid", "seeds", "d", "atoms",
                           "label_bound", "candidates", "tie_gap", "chaos_draws", "mc_budget",
                           "r", "k_max", "sigma", "target_seed"});
  DecomposeStudyConfig c;
  c.outdir = kv.str("outdir", c.outdir);
  c.seed = static_cast<uint64_t>(kv.integer("seed", static_cast<long long>(c.seed)));
  c.threads = static_cast<int>(kv.integer("threads", c.threads));
  c.mode = kv.str("mode", c.mode);
  c.n_grid = kv.int_list("n_grid", c.n_grid);
  c.seeds = static_cast<int>(kv.integer("seeds", c.seeds));
  c.d = static_cast<int>(kv.integer("d", c.d));
  c.atoms = static_cast<int>(kv.integer("atoms", c.atoms));
  c.label_bound = kv.real("label_bound", c.label_bound);
  c.candidates = static_cast<int>(kv.integer("candidates", c.candidates));
  c.tie_gap = kv.real("tie_gap", c.tie_gap);
  c.chaos_draws = static_cast<int>(kv.integer("chaos_draws", c.chaos_draws));
  c.mc_budget = static_cast<int>(kv.integer("mc_budget", c.mc_budget));
  c.r = static_cast<int>(kv.integer("r", c.r));
  c.k_max = static_cast<int>(kv.integer("k_max", c.k_max));
  c.sigma = kv.real("sigma", c.sigma);
  c.target_seed = static_cast<uint64_t>(kv.integer("target_seed", static_cast<long long>(c.target_seed)));
  if (c.mode != "discrete" && c.mode != "synthetic")
    throw std::invalid_argument("mode must be discrete or synthetic");
  if (c.candidates < 1) throw std::invalid_argument("candidates must be >= 1");
  if (c.seeds < 1) throw std::invalid_argument("seeds must be >= 1");
  for (long long n : c.n_grid)
    if (n < 2) throw std::invalid_argument("n_grid entries must be >= 2");
  return c;
}

DecomposeStudyResult run_decompose_study(const DecomposeStudyConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  bool discrete = cfg.mode == "discrete";

  DiscreteDistribution dist;
  SmoothTarget target;
  NoiseModel noise{NoiseModel::UniformBounded, cfg.sigma};
  PairPredictor f_ref;
  double B = 0.0;
  if (discrete) {
    dist = DiscreteDistribution::random(cfg.d, cfg.atoms, cfg.label_bound,
                                        mix64(cfg.seed ^ 0xD15C0ULL));
    B = cfg.label_bound;
    f_ref = make_atom_bayes(dist);
  } else {
    target = generate_target(cfg.d, cfg.r, cfg.k_max, cfg.target_seed);
    B = target.sup_bound() + cfg.sigma;
    SmoothTarget tcopy = target;
    f_ref = [tcopy](std::span<const double> x, std::span<const double> xp) {
      return tcopy.eval(x) - tcopy.eval(xp);
    };
  }
  PairwiseLoss loss = PairwiseLoss::least_squares(B);
  double eta = 2.0 * B;

  std::vector<int> widths{2 * cfg.d, 4, 4, 1};
  std::vector<AntisymNet> nets;
  for (int c = 0; c < cfg.candidates; ++c)
    nets.push_back(AntisymNet::init(cfg.d, widths, eta, 0.0, mix64(cfg.seed + 777 + c)));

  int pop_mc = std::max(100000, cfg.mc_budget);
  auto pop_risk = [&](const AntisymNet& net) {
    if (discrete) return population_risk_exact(net, dist, loss);
    return population_risk_mc(net.as_predictor(), target, noise, loss, pop_mc,
                              mix64(cfg.seed ^ 0xB0B0ULL));
  };

  std::vector<double> pops;
  for (const auto& net : nets) pops.push_back(pop_risk(net));
  std::size_t best = 0;
  for (std::size_t c = 1; c < pops.size(); ++c)
    if (pops[c] < pops[best]) best = c;

  // parameter blends toward independent random nets, pulled in until the
  // population-risk gap to the current best closes below tie_gap; the near-tie
  // set keeps the empirical minimizer flipping between functionally distinct
  // predictors, so the split stays visible at every n (runs that happen to
  // select the population best contribute exact-zero rows, and those must stay
  // a minority for the per-n medians to track the degenerate term)
  double base = pops[best];
  std::size_t nparams = nets[best].param_count();
  std::vector<double> tbest(nparams), trand(nparams), tmix(nparams);
  nets[best].flatten(tbest.data());
  for (int twin = 0; twin < 4; ++twin) {
    AntisymNet rnd = AntisymNet::init(cfg.d, widths, eta, 0.0, mix64(cfg.seed + 3333 + twin));
    rnd.flatten(trand.data());
    AntisymNet tw = nets[best];
    double delta = 1.0;
    for (int iter = 0; iter < 80; ++iter) {
      for (std::size_t k = 0; k < nparams; ++k)
        tmix[k] = tbest[k] + delta * (trand[k] - tbest[k]);
      tw.load(tmix.data());
      if (std::abs(pop_risk(tw) - base) <= cfg.tie_gap) break;
      delta *= 0.5;
    }
    nets.push_back(tw);
    pops.push_back(pop_risk(tw));
  }

  std::vector<PairPredictor> cand;
  for (const auto& net : nets) cand.push_back(net.as_predictor());
  std::size_t ref_best = 0;
  for (std::size_t c = 1; c < pops.size(); ++c)
    if (pops[c] < pops[ref_best]) ref_best = c;

  DecomposeStudyResult res;
  res.n_grid = cfg.n_grid;
  std::size_t reps = static_cast<std::size_t>(cfg.seeds);
  std::size_t njobs = cfg.n_grid.size() * reps;
  res.rows.resize(njobs);

  run_pool(njobs, thread_budget(cfg.threads), [&](std::size_t jid, bool) {
    std::size_t gi = jid / reps;
    int rep = static_cast<int>(jid % reps);
    long long n = cfg.n_grid[gi];
    uint64_t sample_seed =
        mix64(mix64(cfg.seed ^ static_cast<uint64_t>(n)) + 1000 + static_cast<uint64_t>(rep));
    SampleSet s = discrete ? dist.sample(static_cast<int>(n), sample_seed)
                           : sample_data(target, noise, static_cast<int>(n), sample_seed);

    DecomposeRow row;
    row.n = n;
    row.seed = rep;
    std::size_t pick = discrete_erm(cand, s, loss);
    row.picked = static_cast<int>(pick);

    std::vector<std::vector<std::vector<double>>> mats(cand.size());
    HoeffdingDecomposition dhat, dref;
    if (discrete) {
      for (std::size_t c = 0; c < cand.size(); ++c) {
        HoeffdingDecomposition dc = hoeffding_decompose_exact(cand[c], f_ref, s, dist, loss);
        if (c == pick) dhat = dc;
        if (c == ref_best) dref = dc;
        mats[c] = std::move(dc.hhat);
      }
    } else {
      ZSampler zs = make_synthetic_sampler(target, noise, mix64(sample_seed ^ 0x5EEDULL));
      for (std::size_t c = 0; c < cand.size(); ++c) {
        McHoeffdingDecomposition dc = hoeffding_decompose_mc(cand[c], f_ref, s, zs, cfg.mc_budget, loss);
        if (c == pick) dhat = dc;
        if (c == ref_best) dref = dc;
        mats[c] = std::move(dc.hhat);
      }
    }
    row.u_n = dhat.u_n;
    row.t_n = dhat.t_n;
    row.w_n = dhat.w_n;
    row.residual = dhat.identity_residual();
    ErrorSplit es = estimation_error_split(dhat, dref);
    row.s1 = es.s1;
    row.s2 = es.s2;

    ChaosDiagnostics ch = chaos_diagnostics(mats, cfg.chaos_draws, mix64(sample_seed + 0xC4A05ULL));
    row.z_mean = ch.z_mean;
    row.u_mean = ch.u_mean;
    row.m_mean = ch.m_mean;
    row.f_sup = ch.f_sup;
    row.d_sup = ch.d_sup;
    double dn = static_cast<double>(n);
    row.s2_aggregate = (ch.z_mean + ch.u_mean + ch.m_mean + ch.f_sup * dn) / (dn * dn);
    res.rows[jid] = row;
  });

  res.median_abs_s1.resize(cfg.n_grid.size());
  res.median_abs_s2.resize(cfg.n_grid.size());
  for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
    std::vector<double> a1, a2;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      a1.push_back(std::abs(res.rows[gi * reps + rep].s1));
      a2.push_back(std::abs(res.rows[gi * reps + rep].s2));
    }
    res.median_abs_s1[gi] = median_of(a1);
    res.median_abs_s2[gi] = median_of(a2);
  }
  res.s2_decreasing = cfg.n_grid.size() >= 2;
  for (std::size_t gi = 1; gi < cfg.n_grid.size(); ++gi)
    if (!(res.median_abs_s2[gi] < res.median_abs_s2[gi - 1])) res.s2_decreasing = false;
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// --- capacity study ----------------------------------------------------------

CapacityStudyConfig capacity_config_from(const KeyValueConfig& kv) {
  reject_unknown_keys(kv, {"outdir", "seed", "threads", "n_grid", "d", "r", "atoms", "label_bound",
                           "candidates", "alpha_steps", "eps_points", "eps_lo_frac", "eps_hi_frac",
                           "r_points", "r_lo_frac", "r_hi_frac", "mc_draws"});
  CapacityStudyConfig c;
  c.outdir = kv.str("outdir", c.outdir);
  c.seed = static_cast<uint64_t>(kv.integer("seed", static_cast<long long>(c.seed)));
  c.threads = static_cast<int>(kv.integer("threads", c.threads));
  c.n_grid = kv.int_list("n_grid", c.n_grid);
  c.d = static_cast<int>(kv.integer("d", c.d));
  c.r = static_cast<int>(kv.integer("r", c.r));
  c.atoms = static_cast<int>(kv.integer("atoms", c.atoms));
  c.label_bound = kv.real("label_bound", c.label_bound);
  c.candidates = static_cast<int>(kv.integer("candidates", c.candidates));
  c.alpha_steps = static_cast<int>(kv.integer("alpha_steps", c.alpha_steps));
  c.eps_points = static_cast<int>(kv.integer("eps_points", c.eps_points));
  c.eps_lo_frac = kv.real("eps_lo_frac", c.eps_lo_frac);
  c.eps_hi_frac = kv.real("eps_hi_frac", c.eps_hi_frac);
  c.r_points = static_cast<int>(kv.integer("r_points", c.r_points));
  c.r_lo_frac = kv.real("r_lo_frac", c.r_lo_frac);
  c.r_hi_frac = kv.real("r_hi_frac", c.r_hi_frac);
  c.mc_draws = static_cast<int>(kv.integer("mc_draws", c.mc_draws));
  if (c.candidates < 1) throw std::invalid_argument("candidates must be >= 1");
  if (!(c.eps_lo_frac > 0.0) || !(c.eps_hi_frac >= c.eps_lo_frac))
    throw std::invalid_argument("need 0 < eps_lo_frac <= eps_hi_frac");
  if (!(c.r_lo_frac > 0.0) || !(c.r_hi_frac >= c.r_lo_frac))
    throw std::invalid_argument("need 0 < r_lo_frac <= r_hi_frac");
  for (long long n : c.n_grid)
    if (n < 2) throw std::invalid_argument("n_grid entries must be >= 2");
  return c;
}

CapacityStudyResult run_capacity_study(const CapacityStudyConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  DiscreteDistribution dist = DiscreteDistribution::random(cfg.d, cfg.atoms, cfg.label_bound,
                                                           mix64(cfg.seed ^ 0xCA9AULL));
  double B = cfg.label_bound;
  PairwiseLoss loss = PairwiseLoss::least_squares(B);
  double eta = 2.0 * B;
  double k_loss = loss.lipschitz;
  double k_eta = 2.0 * (eta + 2.0 * B);

  std::vector<int> widths{2 * cfg.d, 4, 4, 1};
  std::vector<PairPredictor> members;
  for (int c = 0; c < cfg.candidates; ++c)
    members.push_back(
        AntisymNet::init(cfg.d, widths, eta, 0.0, mix64(cfg.seed + 901 + c)).as_predictor());
  PairPredictor f_ref = make_atom_bayes(dist);

  CapacityStudyResult res;

  // n-independent records: the loss-shifted class on the atoms and its star hull
  FunctionClassSample shifted = shifted_class_atoms(members, f_ref, dist, loss);
  FunctionClassSample star = star_hull_grid(shifted, cfg.alpha_steps);
  {
    double maxnorm = 0.0;
    for (std::size_t i = 0; i < star.size(); ++i) maxnorm = std::max(maxnorm, star.norm(i));
    if (maxnorm > 0.0) {
      std::vector<double> eg =
          geometric_grid(cfg.eps_lo_frac * maxnorm, cfg.eps_hi_frac * maxnorm, cfg.eps_points);
      std::vector<std::size_t> counts;
      for (double eps : eg) {
        std::size_t cnt = covering_number_greedy(star, eps);
        counts.push_back(cnt);
        res.covering.push_back({0, "star_rho", eps, cnt});
      }
      res.fits["star_rho@0"] = fit_capacity_exponents(eg, counts);
    }
  }

  double max_m2 = 0.0;
  for (std::size_t i = 0; i < shifted.size(); ++i)
    max_m2 = std::max(max_m2, shifted.moment2(i));
  std::vector<double> r_grid;
  if (max_m2 > 0.0)
    r_grid = geometric_grid(cfg.r_lo_frac * max_m2, cfg.r_hi_frac * max_m2, cfg.r_points);

  for (long long n : cfg.n_grid) {
    uint64_t sample_seed = mix64(cfg.seed ^ (0xABCULL + static_cast<uint64_t>(n)));
    SampleSet s = dist.sample(static_cast<int>(n), sample_seed);

    struct MetricClass {
      const char* name;
      FunctionClassSample cls;
    };
    MetricClass classes[2] = {{"nu_n", class_on_pairs(members, s)},
                              {"mu_n", class_on_cross(members, s, &dist, 0)}};
    for (const auto& mc : classes) {
      double maxnorm = 0.0;
      for (std::size_t i = 0; i < mc.cls.size(); ++i) maxnorm = std::max(maxnorm, mc.cls.norm(i));
      if (maxnorm <= 0.0) continue;
      std::vector<double> eg =
          geometric_grid(cfg.eps_lo_frac * maxnorm, cfg.eps_hi_frac * maxnorm, cfg.eps_points);
      std::vector<std::size_t> counts;
      for (double eps : eg) {
        std::size_t cnt = covering_number_greedy(mc.cls, eps);
        counts.push_back(cnt);
        res.covering.push_back({n, mc.name, eps, cnt});
      }
      res.fits[std::string(mc.name) + "@" + std::to_string(n)] = fit_capacity_exponents(eg, counts);
    }

    if (!r_grid.empty()) {
      LocalComplexityCurve curve =
          local_complexity_curve(shifted, static_cast<int>(n), r_grid, cfg.mc_draws,
                                 mix64(cfg.seed + 0xF1ULL + static_cast<uint64_t>(n)),
                                 StarMode::Continuous);
      for (std::size_t i = 0; i < r_grid.size(); ++i)
        res.phi.push_back({n, curve.r[i], curve.phi[i], curve.se[i]});
      double rstar = std::numeric_limits<double>::quiet_NaN();
      try {
        rstar = fixed_point(curve.r, curve.phi);
      } catch (const std::exception&) {
        // crossing outside the grid: leave the entry undefined
      }
      res.r_star.push_back({n, rstar});
    }

    NetSize sz = size_network(n, cfg.d, cfg.r);
    AntisymNet sized = AntisymNet::sized(cfg.d, sz.depth_L, sz.weights_W, sz.units_U, eta,
                                         mix64(cfg.seed + 0x51ULL));
    res.sizing.push_back(
        {n, sz.depth_L, sz.weights_W, sz.units_U, pdim_budget(sized.complexity()), k_loss, k_eta});
  }

  res.r_star_decreasing = res.r_star.size() == cfg.n_grid.size() && cfg.n_grid.size() >= 2;
  for (std::size_t i = 0; i < res.r_star.size(); ++i)
    if (!std::isfinite(res.r_star[i].second)) res.r_star_decreasing = false;
  if (res.r_star_decreasing)
    for (std::size_t i = 1; i < res.r_star.size(); ++i)
      if (!(res.r_star[i].second < res.r_star[i - 1].second)) res.r_star_decreasing = false;
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// --- gradient check ----------------------------------------------------------

GradcheckConfig gradcheck_config_from(const KeyValueConfig& kv) {
  reject_unknown_keys(kv, {"outdir", "seed", "nets", "d_max", "max_depth", "batch_points",
                           "fd_step", "kink_margin", "tol_fail"});
  GradcheckConfig c;
  c.outdir = kv.str("outdir", c.outdir);
  c.seed = static_cast<uint64_t>(kv.integer("seed", static_cast<long long>(c.seed)));
  c.nets = static_cast<int>(kv.integer("nets", c.nets));
  c.d_max = static_cast<int>(kv.integer("d_max", c.d_max));
  c.max_depth = static_cast<int>(kv.integer("max_depth", c.max_depth));
  c.batch_points = static_cast<int>(kv.integer("batch_points", c.batch_points));
  c.fd_step = kv.real("fd_step", c.fd_step);
  c.kink_margin = kv.real("kink_margin", c.kink_margin);
  c.tol_fail = kv.real("tol_fail", c.tol_fail);
  if (c.nets < 1 || c.d_max < 1 || c.max_depth < 2 || c.batch_points < 1)
    throw std::invalid_argument("gradcheck config out of range");
  return c;
}

GradcheckResult run_gradcheck(const GradcheckConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  PairwiseLoss loss = PairwiseLoss::least_squares(1.0);
  GradcheckResult res;

  for (int id = 0; id < cfg.nets; ++id) {
    int d = 1 + id % cfg.d_max;
    int L = 2 + id % (cfg.max_depth - 1);
    bool done = false;
    for (int attempt = 0; attempt < 500 && !done; ++attempt) {
      uint64_t s = mix64(cfg.seed + 10007ULL * static_cast<uint64_t>(id) +
                         static_cast<uint64_t>(attempt));
      SeqRng rng(s, 71);
      std::vector<int> widths{2 * d};
      for (int l = 1; l < L; ++l) widths.push_back(2 + static_cast<int>(rng.below(3)));
      widths.push_back(1);
      double sparsity = id % 3 == 0 ? 0.25 : 0.0;
      double eta = rng.uniform(1.0, 2.0);
      AntisymNet net = AntisymNet::init(d, widths, eta, sparsity, s);

      std::vector<std::vector<double>> xs(cfg.batch_points), xps(cfg.batch_points);
      std::vector<double> ys(cfg.batch_points), yps(cfg.batch_points);
      for (int b = 0; b < cfg.batch_points; ++b) {
        xs[b].resize(d);
        xps[b].resize(d);
        for (int j = 0; j < d; ++j) xs[b][j] = rng.uniform();
        for (int j = 0; j < d; ++j) xps[b][j] = rng.uniform();
        ys[b] = rng.uniform(-1.0, 1.0);
        yps[b] = rng.uniform(-1.0, 1.0);
      }

      NetWorkspace ws;
      net.prepare(ws);
      double margin = std::numeric_limits<double>::infinity();
      for (int b = 0; b < cfg.batch_points; ++b)
        margin = std::min(margin, net.min_kink_margin(xs[b].data(), xps[b].data(), ws));
      if (!(margin > cfg.kink_margin)) continue;  // too close to a kink; redraw

      std::size_t P = net.param_count();
      std::vector<double> analytic(P, 0.0);
      for (int b = 0; b < cfg.batch_points; ++b)
        net.pair_loss_grad(xs[b].data(), xps[b].data(), ys[b], yps[b], loss, 1.0, ws,
                           analytic.data());
      double gmax = 0.0;
      for (double g : analytic) gmax = std::max(gmax, std::abs(g));
      if (gmax == 0.0) continue;  // every head saturated: nothing to check

      std::vector<double> theta(P);
      net.flatten(theta.data());
      AntisymNet work = net;
      auto batch_loss = [&](const double* params) {
        work.load(params);
        double total = 0.0;
        for (int b = 0; b < cfg.batch_points; ++b)
          total += loss(work.forward_ws(xs[b].data(), xps[b].data(), ws), ys[b], yps[b]);
        return total;
      };
      GradcheckRow row;
      row.net_id = id;
      row.d = d;
      row.depth = L;
      row.params = P;
      double sum_rel = 0.0;
      for (std::size_t k = 0; k < P; ++k) {
        double h = cfg.fd_step * std::max(1.0, std::abs(theta[k]));
        double orig = theta[k];
        theta[k] = orig + h;
        double lp = batch_loss(theta.data());
        theta[k] = orig - h;
        double lm = batch_loss(theta.data());
        theta[k] = orig;
        double fd = (lp - lm) / (2.0 * h);
        double rel = std::abs(analytic[k] - fd) /
                     std::max({std::abs(analytic[k]), std::abs(fd), 1e-6});
        row.max_rel_err = std::max(row.max_rel_err, rel);
        sum_rel += rel;
      }
      row.mean_rel_err = sum_rel / static_cast<double>(P);
      res.rows.push_back(row);
      res.worst = std::max(res.worst, row.max_rel_err);
      done = true;
    }
    if (!done) throw std::runtime_error("gradcheck: no kink-free configuration found");
  }
  res.passed = res.worst <= cfg.tol_fail;
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

// --- rendering ---------------------------------------------------------------

namespace {
std::string bool01(bool b) { return b ? "1" : "0"; }
}  // namespace

std::string rate_csv(const RateStudyResult& r) {
  std::string out = "n,seed,depth_L,weights_W,units_U,epochs,final_risk,excess,diverged\n";
  for (const auto& row : r.rows) {
    out += std::to_string(row.n) + "," + std::to_string(row.seed) + "," +
           std::to_string(row.depth_L) + "," + std::to_string(row.weights_W) + "," +
           std::to_string(row.units_U) + "," + std::to_string(row.epochs) + "," +
           g17(row.final_risk) + "," + g17(row.excess) + "," + bool01(row.diverged) + "\n";
  }
  return out;
}

std::string rate_summary(const RateStudyResult& r) {
  std::ostringstream s;
  s << "rate study\n";
  s << "  n grid:";
  for (long long n : r.n_grid) s << " " << n;
  s << "\n  median excess risk per n:\n";
  for (std::size_t i = 0; i < r.n_grid.size(); ++i)
    s << "    n=" << r.n_grid[i] << "  " << g17(r.median_excess[i]) << "\n";
  s << "  fitted log-log slope: " << g17(r.slope) << " (stderr " << g17(r.slope_stderr) << ")\n";
  s << "  reference slope -2r/(2r+d): " << g17(r.theory_slope) << "\n";
  s << "  slope uses all grid points: " << (r.slope_defined ? "yes" : "no") << "\n";
  s << "  diverged runs: " << r.diverged << "\n";
  s << "  wall seconds: " << g17(r.wall_seconds) << "\n";
  return s.str();
}

std::string decompose_csv(const DecomposeStudyResult& r) {
  std::string out =
      "n,seed,picked,u_n,t_n,w_n,s1,s2,residual,z_mean,u_mean,m_mean,f_sup,d_sup,s2_aggregate\n";
  for (const auto& row : r.rows) {
    out += std::to_string(row.n) + "," + std::to_string(row.seed) + "," +
           std::to_string(row.picked) + "," + g17(row.u_n) + "," + g17(row.t_n) + "," +
           g17(row.w_n) + "," + g17(row.s1) + "," + g17(row.s2) + "," + g17(row.residual) + "," +
           g17(row.z_mean) + "," + g17(row.u_mean) + "," + g17(row.m_mean) + "," +
           g17(row.f_sup) + "," + g17(row.d_sup) + "," + g17(row.s2_aggregate) + "\n";
  }
  return out;
}

std::string decompose_summary(const DecomposeStudyResult& r) {
  std::ostringstream s;
  s << "decomposition study\n";
  s << "  n grid:";
  for (long long n : r.n_grid) s << " " << n;
  s << "\n  median |first-order term| per n:\n";
  for (std::size_t i = 0; i < r.n_grid.size(); ++i)
    s << "    n=" << r.n_grid[i] << "  " << g17(r.median_abs_s1[i]) << "\n";
  s << "  median |degenerate term| per n:\n";
  for (std::size_t i = 0; i < r.n_grid.size(); ++i)
    s << "    n=" << r.n_grid[i] << "  " << g17(r.median_abs_s2[i]) << "\n";
  s << "  degenerate term strictly decreasing: " << (r.s2_decreasing ? "yes" : "no") << "\n";
  s << "  wall seconds: " << g17(r.wall_seconds) << "\n";
  return s.str();
}

std::string capacity_csv(const CapacityStudyResult& r) {
  std::string out =
      "record,n,metric,eps,count,r,phi,se,depth_L,weights_W,units_U,budget,k_loss,k_eta\n";
  for (const auto& row : r.covering)
    out += "covering," + std::to_string(row.n) + "," + row.metric + "," + g17(row.eps) + "," +
           std::to_string(row.count) + ",,,,,,,,,\n";
  for (const auto& row : r.phi)
    out += "phi," + std::to_string(row.n) + ",,,," + g17(row.r) + "," + g17(row.phi) + "," +
           g17(row.se) + ",,,,,,\n";
  for (const auto& [n, rstar] : r.r_star)
    out += "rstar," + std::to_string(n) + ",,,," + g17(rstar) + ",,,,,,,,\n";
  for (const auto& row : r.sizing)
    out += "sizing," + std::to_string(row.n) + ",,,,,,," + std::to_string(row.depth_L) + "," +
           std::to_string(row.weights_W) + "," + std::to_string(row.units_U) + "," +
           std::to_string(row.budget) + "," + g17(row.k_loss) + "," + g17(row.k_eta) + "\n";
  return out;
}

std::string capacity_summary(const CapacityStudyResult& r) {
  std::ostringstream s;
  s << "capacity study\n";
  s << "  covering fits (log N = log_s + v log(1/eps)):\n";
  for (const auto& [key, fit] : r.fits)
    s << "    " << key << "  log_s=" << g17(fit.log_s) << "  v=" << g17(fit.exponent_v)
      << "  rms=" << g17(fit.rms_residual) << "\n";
  s << "  fixed points:\n";
  for (const auto& [n, rstar] : r.r_star) s << "    n=" << n << "  r*=" << g17(rstar) << "\n";
  s << "  fixed point strictly decreasing: " << (r.r_star_decreasing ? "yes" : "no") << "\n";
  s << "  wall seconds: " << g17(r.wall_seconds) << "\n";
  return s.str();
}

std::string gradcheck_csv(const GradcheckResult& r) {
  std::string out = "net_id,d,depth,params,max_rel_err,mean_rel_err\n";
  for (const auto& row : r.rows)
    out += std::to_string(row.net_id) + "," + std::to_string(row.d) + "," +
           std::to_string(row.depth) + "," + std::to_string(row.params) + "," +
           g17(row.max_rel_err) + "," + g17(row.mean_rel_err) + "\n";
  return out;
}

std::string gradcheck_summary(const GradcheckResult& r) {
  std::ostringstream s;
  s << "gradient check\n";
  s << "  nets checked: " << r.rows.size() << "\n";
  s << "  worst relative error: " << g17(r.worst) << "\n";
  s << "  passed: " << (r.passed ? "yes" : "no") << "\n";
  s << "  wall seconds: " << g17(r.wall_seconds) << "\n";
  return s.str();
}

// --- CLI entry ---------------------------------------------------------------

namespace {
std::string utc_timestamp() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", &tm);
  return buf;
}
}  // namespace

int run_cli_command(const std::string& command, const std::string& config_path,
                    const std::string& outdir_override, int threads_override) {
  KeyValueConfig kv = KeyValueConfig::load(config_path);
  std::string csv, summary, outdir;
  int code = 0;
  if (command == "rate") {
    RateStudyConfig cfg = rate_config_from(kv);
    if (!outdir_override.empty()) cfg.outdir = outdir_override;
    if (threads_override > 0) cfg.threads = threads_override;
    outdir = cfg.outdir;
    RateStudyResult r = run_rate_study(cfg);
    csv = rate_csv(r);
    summary = rate_summary(r);
  } else if (command == "decompose") {
    DecomposeStudyConfig cfg = decompose_config_from(kv);
    if (!outdir_override.empty()) cfg.outdir = outdir_override;
    if (threads_override > 0) cfg.threads = threads_override;
    outdir = cfg.outdir;
    DecomposeStudyResult r = run_decompose_study(cfg);
    csv = decompose_csv(r);
    summary = decompose_summary(r);
  } else if (command == "capacity") {
    CapacityStudyConfig cfg = capacity_config_from(kv);
    if (!outdir_override.empty()) cfg.outdir = outdir_override;
    if (threads_override > 0) cfg.threads = threads_override;
    outdir = cfg.outdir;
    CapacityStudyResult r = run_capacity_study(cfg);
    csv = capacity_csv(r);
    summary = capacity_summary(r);
  } else if (command == "gradcheck") {
    GradcheckConfig cfg = gradcheck_config_from(kv);
    if (!outdir_override.empty()) cfg.outdir = outdir_override;
    outdir = cfg.outdir;
    GradcheckResult r = run_gradcheck(cfg);
    csv = gradcheck_csv(r);
    summary = gradcheck_summary(r);
    if (!r.passed) code = 2;
  } else {
    throw std::invalid_argument("unknown command: " + command);
  }
  std::filesystem::create_directories(outdir);
  write_text_file(outdir + "/" + command + "-" + utc_timestamp() + ".csv", csv);
  write_text_file(outdir + "/summary.txt", summary);
  return code;
}

}  // namespace pairlearn
