#include <cstdio>
#include <random>

#include "hyperembed/simgen.hpp"

using namespace hyperembed;
using namespace hyperembed::simgen;

int main() {
  for (int n : {120, 240}) {
    for (std::uint64_t seed : {42ull, 77ull, 303ull}) {
      auto cl = gen_latent_clustered(n, 5, 6, seed);
      auto full = gen_pair_links(cl.Z, seed + 1);
      std::mt19937_64 rng(99 + seed);
      auto tuples = detail::random_tuples_with_replacement(n, 100000, rng);
      for (double beta : {3.0, 6.0}) {
        for (double rho : {0.25, 0.55, 0.85}) {
          try {
            auto s = gen_hyper_dependent(cl.Z, full, rho, 1.0, beta, tuples, 11);
            std::printf("n=%d seed=%llu b=%.0f rho %.2f: rho_eff=%.3f mc=%.4f pos_rate=%.3f\n", n,
                        (unsigned long long)seed, beta, rho, s.rho_eff, estimate_rho_mc(s, 123),
                        [&]{ double m=0; for (auto y : s.labels) m += y; return m / s.size(); }());
          } catch (const std::exception& e) {
            std::printf("n=%d seed=%llu b=%.0f rho %.2f: ERROR %s\n", n,
                        (unsigned long long)seed, beta, rho, e.what());
          }
          std::fflush(stdout);
        }
      }
    }
  }
  {
    auto cl = gen_latent_clustered(240, 5, 6, 42);
    auto full = gen_pair_links(cl.Z, 43);
    for (double target : {0.15, 0.25, 0.35}) {
      try {
        auto obs = sample_observations(full, 0.4, target, 17);
        const double measured = estimate_rho_obs(obs, 240, 777);
        std::printf("rho_obs target %.2f: measured=%.4f size=%zu\n", target, measured, obs.size());
      } catch (const std::exception& e) {
        std::printf("rho_obs target %.2f: ERROR %s\n", target, e.what());
      }
      std::fflush(stdout);
    }
    // uniform sanity
    auto uobs = sample_observations(full, 0.5, 0.0, 5);
    std::printf("uniform: measured=%.4f size=%zu (P=%zu)\n", estimate_rho_obs(uobs, 240, 777),
                uobs.size(), pair_count(240));
  }
  return 0;
}
