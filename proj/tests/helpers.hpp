#pragma once

#include <random>
#include <vector>

#include "hyperembed/model.hpp"

namespace testutil {

using hyperembed::model::HyperObservations;
using hyperembed::model::LatentFactors;
using hyperembed::model::PairEntry;
using hyperembed::model::PairObservations;

inline LatentFactors random_factors(int n, int r, std::mt19937_64& rng, double scale = 1.0) {
  LatentFactors Z(n, r);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& v : Z.values) v = u(rng);
  return Z;
}

inline PairObservations random_pairs(int n, int count, std::mt19937_64& rng) {
  std::vector<std::pair<int, int>> all;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) all.emplace_back(i, j);
  std::shuffle(all.begin(), all.end(), rng);
  std::vector<PairEntry> entries;
  std::bernoulli_distribution coin(0.5);
  count = std::min<int>(count, static_cast<int>(all.size()));
  for (int e = 0; e < count; ++e)
    entries.push_back({all[e].first, all[e].second, static_cast<std::uint8_t>(coin(rng) ? 1 : 0)});
  return PairObservations::from_entries(n, entries);
}

inline HyperObservations random_hyper(int n, int m, int count, std::mt19937_64& rng) {
  HyperObservations obs(n, m);
  std::uniform_int_distribution<int> node(0, n - 1);
  std::bernoulli_distribution coin(0.5);
  int attempts = 0;
  while (static_cast<int>(obs.size()) < count && attempts < count * 200) {
    ++attempts;
    std::vector<std::int32_t> tuple;
    while (static_cast<int>(tuple.size()) < m) {
      int v = node(rng);
      if (std::find(tuple.begin(), tuple.end(), v) == tuple.end()) tuple.push_back(v);
    }
    std::sort(tuple.begin(), tuple.end());
    if (obs.contains(tuple)) continue;
    obs.add(tuple, coin(rng) ? 1 : 0);
  }
  return obs;
}

}  // namespace testutil
