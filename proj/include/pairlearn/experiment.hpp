#pragma once
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pairlearn/capacity.hpp"
#include "pairlearn/train.hpp"
#include "pairlearn/ustat.hpp"

namespace pairlearn {

// flat key = value config files; '#' starts a comment
struct KeyValueConfig {
  std::map<std::string, std::string> kv;

  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const std::string& path);

  bool has(const std::string& key) const { return kv.count(key) > 0; }
  std::string str(const std::string& key, const std::string& fallback) const;
  long long integer(const std::string& key, long long fallback) const;
  double real(const std::string& key, double fallback) const;
  std::vector<long long> int_list(const std::string& key,
                                  const std::vector<long long>& fallback) const;
};

// worker budget: PAIRLEARN_THREADS caps it, hardware concurrency is the default
int thread_budget(int requested = 0);

// --- rate study -------------------------------------------------------------

struct RateStudyConfig {
  std::string outdir = "out";
  uint64_t seed = 1;
  int threads = 0;
  std::vector<long long> n_grid{128, 256, 512, 1024, 2048, 4096};
  int seeds = 5;
  int d = 1, r = 1, k_max = 2;
  uint64_t target_seed = 7;
  double sigma = 0.3;
  double lr = 1.0;
  int max_epochs = 300;
  double tol = 1e-8;
  int tol_window = 50;
  long long full_batch_max_n = 512;  // larger n switches to sampled pairs
  long long sampled_factor = 64;      // batch m = factor * n
  double eta_factor = 2.0;            // eta = factor * B
  int quad_points = 512;              // 128 is the sane value for d = 2
  int restarts = 2;                   // inits trained per cell; lowest final risk kept
  bool dump_traces = false;
};

struct RateRow {
  long long n = 0;
  int seed = 0;
  int depth_L = 0;
  long long weights_W = 0, units_U = 0;
  int epochs = 0;
  double final_risk = 0.0;
  double excess = 0.0;
  bool diverged = false;
};

struct RateStudyResult {
  std::vector<RateRow> rows;
  std::vector<long long> n_grid;
  std::vector<double> median_excess;
  double slope = 0.0, slope_stderr = 0.0, theory_slope = 0.0;
  bool slope_defined = false;
  int diverged = 0;
  double wall_seconds = 0.0;
};

RateStudyResult run_rate_study(const RateStudyConfig& cfg);
RateStudyConfig rate_config_from(const KeyValueConfig& kv);

// --- decomposition study ----------------------------------------------------

struct DecomposeStudyConfig {
  std::string outdir = "out";
  uint64_t seed = 1;
  int threads = 0;
  std::string mode = "discrete";  // or "synthetic"
  std::vector<long long> n_grid{8, 16, 32, 64};
  int seeds = 61;
  int d = 1;
  int atoms = 8;
  double label_bound = 1.0;
  int candidates = 4;   // random nets; a population near-tie set is appended
  double tie_gap = 2e-4;
  int chaos_draws = 200;
  int mc_budget = 20000;  // synthetic-mode conditional expectations
  int r = 1, k_max = 2;
  double sigma = 0.3;
  uint64_t target_seed = 7;
};

struct DecomposeRow {
  long long n = 0;
  int seed = 0;
  int picked = 0;  // index of the empirical minimizer
  double u_n = 0, t_n = 0, w_n = 0;
  double s1 = 0, s2 = 0;
  double residual = 0;
  double z_mean = 0, u_mean = 0, m_mean = 0, f_sup = 0, d_sup = 0;
  double s2_aggregate = 0;  // (E Z + E U + E M + F n) / n^2, unit constants
};

struct DecomposeStudyResult {
  std::vector<DecomposeRow> rows;
  std::vector<long long> n_grid;
  std::vector<double> median_abs_s1, median_abs_s2;
  bool s2_decreasing = false;
  double wall_seconds = 0.0;
};

DecomposeStudyResult run_decompose_study(const DecomposeStudyConfig& cfg);
DecomposeStudyConfig decompose_config_from(const KeyValueConfig& kv);

// --- capacity study ---------------------------------------------------------

struct CapacityStudyConfig {
  std::string outdir = "out";
  uint64_t seed = 1;
  int threads = 0;
  std::vector<long long> n_grid{16, 64, 256};
  int d = 1, r = 1;
  int atoms = 8;
  double label_bound = 1.0;
  int candidates = 6;
  int alpha_steps = 8;
  int eps_points = 8;
  double eps_lo_frac = 0.08, eps_hi_frac = 1.0;  // times the largest norm
  int r_points = 12;
  double r_lo_frac = 1e-4, r_hi_frac = 4.0;  // times the largest E[g^2]
  int mc_draws = 800;
};

struct CoveringRow {
  long long n;
  std::string metric;  // "nu_n" or "mu_n"
  double eps;
  std::size_t count;
};
struct PhiRow {
  long long n;
  double r, phi, se;
};
struct SizingRow {
  long long n;
  int depth_L;
  long long weights_W, units_U;
  long long budget;
  double k_loss, k_eta;  // Lipschitz constant 8B and the eta-tightened 2(eta + 2B)
};

struct CapacityStudyResult {
  std::vector<CoveringRow> covering;
  std::vector<PhiRow> phi;
  std::vector<std::pair<long long, double>> r_star;  // per n
  std::vector<SizingRow> sizing;
  std::map<std::string, CapacityFit> fits;  // key "<metric>@n"
  bool r_star_decreasing = false;
  double wall_seconds = 0.0;
};

CapacityStudyResult run_capacity_study(const CapacityStudyConfig& cfg);
CapacityStudyConfig capacity_config_from(const KeyValueConfig& kv);

// --- gradient check ---------------------------------------------------------

struct GradcheckConfig {
  std::string outdir = "out";
  uint64_t seed = 1;
  int nets = 20;
  int d_max = 2;
  int max_depth = 4;  // total affine maps in the inner net
  int batch_points = 8;
  double fd_step = 1e-5;
  double kink_margin = 1e-3;
  double tol_fail = 1e-3;
};

struct GradcheckRow {
  int net_id = 0;
  int d = 0, depth = 0;
  std::size_t params = 0;
  double max_rel_err = 0.0, mean_rel_err = 0.0;
};

struct GradcheckResult {
  std::vector<GradcheckRow> rows;
  double worst = 0.0;
  bool passed = false;
  double wall_seconds = 0.0;
};

GradcheckResult run_gradcheck(const GradcheckConfig& cfg);
GradcheckConfig gradcheck_config_from(const KeyValueConfig& kv);

// --- CSV / summary rendering and the CLI entry ------------------------------

std::string rate_csv(const RateStudyResult& r);
std::string rate_summary(const RateStudyResult& r);
std::string decompose_csv(const DecomposeStudyResult& r);
std::string decompose_summary(const DecomposeStudyResult& r);
std::string capacity_csv(const CapacityStudyResult& r);
std::string capacity_summary(const CapacityStudyResult& r);
std::string gradcheck_csv(const GradcheckResult& r);
std::string gradcheck_summary(const GradcheckResult& r);

// parses the config, runs the study, writes <outdir>/<command>-<timestamp>.csv
// and <outdir>/summary.txt; returns the process exit code
int run_cli_command(const std::string& command, const std::string& config_path,
                    const std::string& outdir_override = "", int threads_override = 0);

}  // namespace pairlearn
