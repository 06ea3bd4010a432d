#include <cstdio>

#include "hyperembed/studies.hpp"

using namespace hyperembed;
using namespace hyperembed::studies;

static double auc_of(const eval::EvalReport& r, const char* name) {
  auto v = r.auc_of(name);
  return v ? *v : std::nan("");
}

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 100;
  const std::uint64_t seed = 1;
  auto data = simulate_study1(n, seed);

  for (int iters : {200, 400, 800, 1500, 3000}) {
    for (double lambda : {0.0, 3e-4}) {
      for (double step : {0.01, 0.03}) {
        std::printf("it=%-4d lam=%-6g st=%.2f:", iters, lambda, step);
        for (const char* method : {"ple", "hle", "jle"}) {
          ModelConfig cfg = study_config(seed, lambda);
          cfg.optimizer.max_iters = iters;
          cfg.optimizer.step = step;
          auto res = run_method(method, data, cfg, {});
          std::printf(" %s[p=%.3f A2=%.3f]", method, auc_of(res.report, "pair"),
                      auc_of(res.report, "hyper_A2"));
          std::fflush(stdout);
        }
        std::printf("\n");
      }
    }
  }
  return 0;
}
