// timing harness for the pair kernels: OpenMP path vs the serial reference.
// usage: bench_kernels [n] [reps]
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <vector>

#include "pairlearn/risk.hpp"
#include "pairlearn/train.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace pairlearn;
using clock_type = std::chrono::steady_clock;

static double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

int main(int argc, char** argv) {
  int n = argc > 1 ? std::atoi(argv[1]) : 512;
  int reps = argc > 2 ? std::atoi(argv[2]) : 5;
  if (n < 2 || reps < 1) {
    std::fprintf(stderr, "usage: bench_kernels [n >= 2] [reps >= 1]\n");
    return 1;
  }

  SmoothTarget target = generate_target(1, 1, 2, 7);
  NoiseModel noise{NoiseModel::UniformBounded, 0.3};
  double B = target.sup_bound() + noise.sigma;
  PairwiseLoss loss = PairwiseLoss::least_squares(B);
  SampleSet data = sample_data(target, noise, n, 123);
  AntisymNet net = AntisymNet::init(1, {2, 8, 8, 1}, 2.0 * B, 0.0, 99);
  std::vector<double> grad(net.param_count());

#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP: not enabled\n");
#endif
  std::printf("n = %d, ordered pairs = %lld, reps = %d\n", n,
              static_cast<long long>(n) * (n - 1), reps);

  double r_par = 0.0, r_ser = 0.0;
  double t_risk_par = 0.0, t_risk_ser = 0.0, t_grad_par = 0.0, t_grad_ser = 0.0;
  for (int k = 0; k < reps; ++k) {
    auto t0 = clock_type::now();
    r_par = empirical_risk(net, data, loss, true);
    t_risk_par += seconds_since(t0);

    t0 = clock_type::now();
    r_ser = empirical_risk_serial(net, data, loss);
    t_risk_ser += seconds_since(t0);

    t0 = clock_type::now();
    std::fill(grad.begin(), grad.end(), 0.0);
    risk_and_gradient(net, data, loss, nullptr, grad.data(), true);
    t_grad_par += seconds_since(t0);

    t0 = clock_type::now();
    std::fill(grad.begin(), grad.end(), 0.0);
    risk_and_gradient(net, data, loss, nullptr, grad.data(), false);
    t_grad_ser += seconds_since(t0);
  }

  std::printf("empirical risk   parallel %.4fs  serial %.4fs  speedup %.2fx\n", t_risk_par / reps,
              t_risk_ser / reps, t_risk_ser / t_risk_par);
  std::printf("risk + gradient  parallel %.4fs  serial %.4fs  speedup %.2fx\n", t_grad_par / reps,
              t_grad_ser / reps, t_grad_ser / t_grad_par);
  std::printf("bit-identical risk across paths: %s (%.17g)\n", r_par == r_ser ? "yes" : "NO",
              r_par);
  return r_par == r_ser ? 0 : 2;
}
