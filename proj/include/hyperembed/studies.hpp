#pragma once

#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "hyperembed/augment.hpp"
#include "hyperembed/errors.hpp"
#include "hyperembed/eval.hpp"
#include "hyperembed/optim.hpp"
#include "hyperembed/simgen.hpp"

namespace hyperembed::studies {

using model::HyperObservations;
using model::LatentFactors;
using model::ModelConfig;
using model::PairObservations;

/// One simulated experiment: splits, labeled hyperlink sets and ground truth.
struct StudyData {
  int n = 0;
  LatentFactors Z_true;
  std::vector<int> cluster_labels;
  PairObservations train_pair, valid_pair, test_pair;
  HyperObservations train_hyper, valid_hyper, test_hyper;
  std::vector<double> valid_hyper_truth, test_hyper_truth;
  std::vector<double> test_pair_truth;
  double measured_rho = std::nan("");
  double measured_rho_obs = std::nan("");
};

namespace detail {

inline HyperObservations to_hyper_obs(const simgen::HyperSample& sample) {
  HyperObservations obs(sample.n, 3);
  for (std::size_t e = 0; e < sample.size(); ++e)
    obs.add({sample.tuples.data() + 3 * e, 3}, sample.labels[e]);
  return obs;
}

inline std::vector<double> pair_truth_for(const simgen::PairLabels& full, const PairObservations& obs) {
  std::vector<double> truth;
  truth.reserve(obs.size());
  for (const auto& e : obs.entries) truth.push_back(full.prob(e.i, e.j));
  return truth;
}

}  // namespace detail

struct Study1Config {
  double train_frac = 0.6, valid_frac = 0.2, test_frac = 0.2;
  double hyper_train_frac_of_all = 0.002;
};

/// Mixture latent factors, feature-weighted pairwise and hyperlink
/// generators, independent hyperlink statuses.
inline StudyData simulate_study1(int n, std::uint64_t seed, const Study1Config& cfg = {}) {
  simgen::GenSpec spec;
  spec.n = n;
  spec.seed = seed;
  spec.validate();
  const std::uint64_t base = seed * 1000003ull;

  StudyData data;
  data.n = n;
  data.Z_true = simgen::gen_latent_mixture(n, spec.r, base + 1);
  const LatentFactors Zp = simgen::weighted(data.Z_true, spec.alpha_pair);
  const LatentFactors Zh = simgen::weighted(data.Z_true, spec.alpha_hyper);
  const simgen::PairLabels full = simgen::gen_pair_links(Zp, base + 2);

  const auto splits = simgen::make_splits(full, cfg.train_frac, cfg.valid_frac, cfg.test_frac,
                                          simgen::HyperTrainMode::FractionOfAll,
                                          cfg.hyper_train_frac_of_all, base + 3);
  data.train_pair = splits.train_pair;
  data.valid_pair = splits.valid_pair;
  data.test_pair = splits.test_pair;
  data.test_pair_truth = detail::pair_truth_for(full, data.test_pair);

  const auto train = simgen::gen_hyper_independent(Zp, Zh, spec.c, spec.beta_gen, splits.hyper_train, base + 4);
  const auto valid = simgen::gen_hyper_independent(Zp, Zh, spec.c, spec.beta_gen, splits.hyper_valid, base + 5);
  const auto test = simgen::gen_hyper_independent(Zp, Zh, spec.c, spec.beta_gen, splits.hyper_test, base + 6);
  data.train_hyper = detail::to_hyper_obs(train);
  data.valid_hyper = detail::to_hyper_obs(valid);
  data.test_hyper = detail::to_hyper_obs(test);
  data.valid_hyper_truth = valid.theta;
  data.test_hyper_truth = test.theta;
  return data;
}

struct Study2Config {
  std::optional<double> missing_rate;  // test fraction; validation stays 20% of observed
  double hyper_train_frac_of_pool = 0.01;
};

/// Same generators as study 1 with a sparser hyperlink training set (a
/// fraction of the all-pairs-observed pool) and an optional missing-rate
/// override for the pairwise split.
inline StudyData simulate_study2(int n, std::uint64_t seed, const Study2Config& cfg = {}) {
  Study1Config base_cfg;
  if (cfg.missing_rate) {
    const double mu = *cfg.missing_rate;
    if (!(mu > 0.0 && mu < 1.0)) throw argument_error("simulate_study2: missing rate must lie in (0,1)");
    base_cfg.test_frac = mu;
    base_cfg.valid_frac = 0.2 * (1.0 - mu);
    base_cfg.train_frac = 1.0 - mu - base_cfg.valid_frac;
  }

  simgen::GenSpec spec;
  spec.n = n;
  spec.seed = seed;
  spec.validate();
  const std::uint64_t base = seed * 1000003ull;

  StudyData data;
  data.n = n;
  data.Z_true = simgen::gen_latent_mixture(n, spec.r, base + 1);
  const LatentFactors Zp = simgen::weighted(data.Z_true, spec.alpha_pair);
  const LatentFactors Zh = simgen::weighted(data.Z_true, spec.alpha_hyper);
  const simgen::PairLabels full = simgen::gen_pair_links(Zp, base + 2);

  const auto splits = simgen::make_splits(full, base_cfg.train_frac, base_cfg.valid_frac,
                                          base_cfg.test_frac, simgen::HyperTrainMode::FractionOfPool,
                                          cfg.hyper_train_frac_of_pool, base + 3);
  data.train_pair = splits.train_pair;
  data.valid_pair = splits.valid_pair;
  data.test_pair = splits.test_pair;
  data.test_pair_truth = detail::pair_truth_for(full, data.test_pair);

  const auto train = simgen::gen_hyper_independent(Zp, Zh, spec.c, spec.beta_gen, splits.hyper_train, base + 4);
  const auto valid = simgen::gen_hyper_independent(Zp, Zh, spec.c, spec.beta_gen, splits.hyper_valid, base + 5);
  const auto test = simgen::gen_hyper_independent(Zp, Zh, spec.c, spec.beta_gen, splits.hyper_test, base + 6);
  data.train_hyper = detail::to_hyper_obs(train);
  data.valid_hyper = detail::to_hyper_obs(valid);
  data.test_hyper = detail::to_hyper_obs(test);
  data.valid_hyper_truth = valid.theta;
  data.test_hyper_truth = test.theta;
  return data;
}

struct Study3Config {
  int clusters = 6;
  double rho = 0.85;
  double rho_obs = 0.35;
  double train_rate = 0.4;
  double valid_frac = 0.2;
  int hyper_train = 30;
  int hyper_valid = 200;
  int test_per_class = 1000;
};

/// Clustered latent positions, missing-not-at-random pairwise observation,
/// hyperlinks conditionally dependent on realized cliques, and a balanced
/// hyperlink test set over tuples whose pairs are not all observed.
inline StudyData simulate_study3(int n, std::uint64_t seed, const Study3Config& cfg = {}) {
  if (cfg.hyper_train < 1) throw argument_error("simulate_study3: hyper_train must be positive");
  const std::uint64_t base = seed * 1000003ull;

  StudyData data;
  data.n = n;
  auto clustered = simgen::gen_latent_clustered(n, 5, cfg.clusters, base + 1);
  data.Z_true = clustered.Z;
  data.cluster_labels = std::move(clustered.labels);
  const simgen::PairLabels full = simgen::gen_pair_links(data.Z_true, base + 2);

  data.train_pair = simgen::sample_observations(full, cfg.train_rate, cfg.rho_obs, base + 3);
  data.measured_rho_obs = simgen::estimate_rho_obs(data.train_pair, n, base + 4);

  // validation and test pairs: a uniform split of the unobserved statuses
  {
    const std::size_t P = simgen::pair_count(n);
    std::vector<std::uint8_t> in_train(P, 0);
    for (const auto& e : data.train_pair.entries) in_train[simgen::pair_index(n, e.i, e.j)] = 1;
    std::vector<std::uint32_t> rest;
    rest.reserve(P - data.train_pair.size());
    for (std::size_t p = 0; p < P; ++p)
      if (!in_train[p]) rest.push_back(static_cast<std::uint32_t>(p));
    std::mt19937_64 rng(base + 5);
    std::shuffle(rest.begin(), rest.end(), rng);
    const std::size_t n_valid = std::min<std::size_t>(
        rest.size(), static_cast<std::size_t>(std::llround(cfg.valid_frac * static_cast<double>(P))));
    data.valid_pair = PairObservations(n);
    data.test_pair = PairObservations(n);
    std::vector<std::pair<std::int32_t, std::int32_t>> ends(P);
    std::size_t p = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, ++p) ends[p] = {i, j};
    for (std::size_t t = 0; t < rest.size(); ++t) {
      PairObservations& dst = t < n_valid ? data.valid_pair : data.test_pair;
      dst.entries.push_back({ends[rest[t]].first, ends[rest[t]].second, full.labels[rest[t]]});
    }
    data.test_pair_truth = detail::pair_truth_for(full, data.test_pair);
  }

  // hyper training/validation tuples from the all-pairs-observed pool
  const auto pool = simgen::detail::observed_triples(data.train_pair);
  const std::size_t pool_size = pool.size() / 3;
  if (pool_size < static_cast<std::size_t>(cfg.hyper_train))
    throw data_error("simulate_study3: observed-triangle pool smaller than the hyper training size");
  std::mt19937_64 rng(base + 6);
  std::vector<std::uint32_t> order(pool_size);
  std::iota(order.begin(), order.end(), 0u);
  std::shuffle(order.begin(), order.end(), rng);
  auto take = [&](std::size_t lo, std::size_t hi) {
    std::vector<std::int32_t> flat;
    for (std::size_t t = lo; t < hi && t < pool_size; ++t)
      flat.insert(flat.end(), pool.begin() + 3 * order[t], pool.begin() + 3 * order[t] + 3);
    return flat;
  };
  const auto train_tuples = take(0, cfg.hyper_train);
  const auto valid_tuples = take(cfg.hyper_train, cfg.hyper_train + cfg.hyper_valid);

  const double rho_eff =
      simgen::detail::calibrate_rho_eff(data.Z_true, full, cfg.rho, 1.0, 3.0, base + 7);
  const auto train = simgen::detail::gen_hyper_dependent_raw(data.Z_true, full, rho_eff, 1.0, 3.0,
                                                             train_tuples, base + 8);
  const auto valid = simgen::detail::gen_hyper_dependent_raw(data.Z_true, full, rho_eff, 1.0, 3.0,
                                                             valid_tuples, base + 9);
  data.train_hyper = detail::to_hyper_obs(train);
  data.valid_hyper = detail::to_hyper_obs(valid);
  data.valid_hyper_truth = valid.theta;

  {
    std::mt19937_64 mrng(base + 10);
    auto probe = simgen::detail::gen_hyper_dependent_raw(
        data.Z_true, full, rho_eff, 1.0, 3.0,
        simgen::detail::random_tuples_with_replacement(n, 100000, mrng), base + 10);
    data.measured_rho = simgen::estimate_rho_mc(probe, base + 11);
  }

  // balanced test set over tuples whose pairs are not all observed
  {
    const std::size_t P = simgen::pair_count(n);
    std::vector<std::uint8_t> in_train(P, 0);
    for (const auto& e : data.train_pair.entries) in_train[simgen::pair_index(n, e.i, e.j)] = 1;
    auto fully_observed = [&](std::span<const std::int32_t> t) {
      return in_train[simgen::pair_index(n, t[0], t[1])] && in_train[simgen::pair_index(n, t[0], t[2])] &&
             in_train[simgen::pair_index(n, t[1], t[2])];
    };
    model::detail::TupleKeySet seen;
    std::vector<std::int32_t> store;
    data.test_hyper = HyperObservations(n, 3);
    std::mt19937_64 trng(base + 12);
    std::size_t pos = 0, neg = 0, attempts = 0;
    const std::size_t quota = cfg.test_per_class;
    const std::size_t max_attempts = 400000 + 800 * quota;
    std::vector<double> truth;
    while ((pos < quota || neg < quota) && attempts < max_attempts) {
      ++attempts;
      auto flat = simgen::detail::random_tuples_with_replacement(n, 1, trng);
      const std::span<const std::int32_t> t{flat.data(), 3};
      if (fully_observed(t)) continue;
      const std::size_t offset = store.size();
      store.insert(store.end(), t.begin(), t.end());
      if (!seen.insert(t, store, offset)) {
        store.resize(offset);
        continue;
      }
      auto s = simgen::detail::gen_hyper_dependent_raw(data.Z_true, full, rho_eff, 1.0, 3.0,
                                                       {t.begin(), t.end()}, base + 13 + attempts);
      const int y = s.labels[0];
      if (y == 1 && pos >= quota) continue;
      if (y == 0 && neg >= quota) continue;
      (y ? pos : neg) += 1;
      data.test_hyper.add(t, y);
      truth.push_back(s.theta[0]);
    }
    if (pos < 20 || neg < 20)
      throw data_error("simulate_study3: could not assemble a two-class hyper test set");
    data.test_hyper_truth = std::move(truth);
  }
  return data;
}

struct RunOptions {
  double delta = 0.1;
  std::optional<std::size_t> cap_per_class = 20000;
};

struct MethodResult {
  eval::EvalReport report;
  optim::FitReport fit;
  LatentFactors Z;
  std::size_t augmented_count = 0;
};

/// Fits one estimator on a study's training data and scores the test sets.
inline MethodResult run_method(const std::string& method, const StudyData& data,
                               const ModelConfig& config, const RunOptions& options = {}) {
  MethodResult out;
  if (method == "ple") {
    auto [Z, rep] = optim::fit_variant(optim::Variant::PLE, data.train_pair, data.train_hyper, config);
    out.Z = std::move(Z);
    out.fit = std::move(rep);
  } else if (method == "hle") {
    auto [Z, rep] = optim::fit_variant(optim::Variant::HLE, data.train_pair, data.train_hyper, config);
    out.Z = std::move(Z);
    out.fit = std::move(rep);
  } else if (method == "jle") {
    auto [Z, rep] = optim::fit_variant(optim::Variant::JLE, data.train_pair, data.train_hyper, config);
    out.Z = std::move(Z);
    out.fit = std::move(rep);
  } else if (method == "augjle") {
    augment::AugmentOptions aug;
    aug.delta = options.delta;
    aug.cap_per_class = options.cap_per_class;
    auto res = augment::augment_and_refit(data.train_pair, data.train_hyper, config, aug);
    out.Z = std::move(res.Z);
    out.fit = std::move(res.report);
    out.augmented_count = res.augmented.size();
  } else {
    throw argument_error("run_method: unknown method '" + method + "'");
  }
  out.report = eval::evaluate(out.Z, config.beta, data.test_pair, data.test_hyper,
                              data.test_pair_truth.empty() ? nullptr : &data.test_pair_truth,
                              data.test_hyper_truth.empty() ? nullptr : &data.test_hyper_truth);
  return out;
}

/// Optimizer settings used by the reproduction harness.
inline ModelConfig study_config(std::uint64_t seed, double lambda = 0.0) {
  ModelConfig cfg;
  cfg.r = 5;
  cfg.beta = 3.0;
  cfg.lambda = lambda;
  cfg.optimizer.step = 0.02;
  cfg.optimizer.max_iters = 2000;
  cfg.optimizer.tol = 1e-6;
  cfg.optimizer.seed = seed;
  return cfg;
}

struct ReplicateScores {
  // method -> set name -> per-replicate AUC values
  std::map<std::string, std::map<std::string, std::vector<double>>> auc;
  std::vector<double> measured_rho, measured_rho_obs;

  static double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  }
  static double sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
  }
};

struct StudyRunSpec {
  int study = 1;
  int n = 100;
  int replicates = 5;
  std::uint64_t base_seed = 1;
  std::vector<std::string> methods;  // defaults per study when empty
  double lambda = 0.0;
  RunOptions options;
  Study2Config study2;
  Study3Config study3;
};

inline StudyData simulate_for(const StudyRunSpec& spec, std::uint64_t seed) {
  switch (spec.study) {
    case 1: return simulate_study1(spec.n, seed);
    case 2: return simulate_study2(spec.n, seed, spec.study2);
    case 3: return simulate_study3(spec.n, seed, spec.study3);
    default: throw argument_error("unknown study " + std::to_string(spec.study));
  }
}

inline std::vector<std::string> default_methods(int study) {
  if (study == 1) return {"ple", "hle", "jle"};
  return {"ple", "hle", "jle", "augjle"};
}

/// Runs simulate -> fit(all methods) -> evaluate across replicate seeds.
inline ReplicateScores run_replicates(const StudyRunSpec& spec) {
  if (spec.replicates < 1) throw argument_error("run_replicates: need at least one replicate");
  const auto methods = spec.methods.empty() ? default_methods(spec.study) : spec.methods;
  ReplicateScores scores;
  for (int rep = 0; rep < spec.replicates; ++rep) {
    const std::uint64_t seed = spec.base_seed + static_cast<std::uint64_t>(rep);
    const StudyData data = simulate_for(spec, seed);
    if (!std::isnan(data.measured_rho)) scores.measured_rho.push_back(data.measured_rho);
    if (!std::isnan(data.measured_rho_obs)) scores.measured_rho_obs.push_back(data.measured_rho_obs);
    for (const auto& method : methods) {
      const ModelConfig cfg = study_config(seed, spec.lambda);
      const MethodResult res = run_method(method, data, cfg, spec.options);
      for (const auto& row : res.report.rows) {
        if (!row.auc) continue;
        scores.auc[method][row.set].push_back(*row.auc);
      }
    }
  }
  return scores;
}

}  // namespace hyperembed::studies
