#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "pairlearn/experiment.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

int main(int argc, char** argv) {
  CLI::App app{"pairwise learning laboratory"};
  app.require_subcommand(1);

  struct Args {
    std::string config;
    std::string outdir;
    int threads = 0;
  };
  Args args;

  const char* descriptions[][2] = {
      {"rate", "train sized nets across sample sizes and fit the excess-risk slope"},
      {"decompose", "split the pairwise estimation error into projection terms"},
      {"capacity", "covering numbers, local complexity and the fixed point"},
      {"gradcheck", "finite-difference audit of the pair-loss gradient"},
  };
  for (auto& d : descriptions) {
    CLI::App* sub = app.add_subcommand(d[0], d[1]);
    sub->add_option("--config", args.config, "key = value config file")->required();
    sub->add_option("--outdir", args.outdir, "override the configured output directory");
    sub->add_option("--threads", args.threads, "override the worker thread budget");
  }

  CLI11_PARSE(app, argc, argv);
  std::string command = app.get_subcommands().front()->get_name();

#ifdef _OPENMP
  omp_set_num_threads(pairlearn::thread_budget(args.threads));
#endif

  try {
    return pairlearn::run_cli_command(command, args.config, args.outdir, args.threads);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
