#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "hyperembed/errors.hpp"
#include "hyperembed/eval.hpp"
#include "hyperembed/model.hpp"
#include "hyperembed/optim.hpp"

namespace hyperembed::augment {

using model::HyperObservations;
using model::LatentFactors;
using model::ModelConfig;
using model::PairObservations;

/// Candidate tuples for augmentation: every internal pair observed with a
/// constant label (all 1 -> clique pool, all 0 -> non-clique pool), excluding
/// tuples whose status is already observed.
struct CandidatePools {
  int n = 0;
  int m = 3;
  std::vector<std::int32_t> clique;      // flat, m per tuple
  std::vector<std::int32_t> non_clique;  // flat, m per tuple

  std::size_t clique_count() const { return clique.size() / m; }
  std::size_t non_clique_count() const { return non_clique.size() / m; }
};

enum class AugmentSource : std::uint8_t { Clique = 0, NonClique = 1 };

struct AugmentedSet {
  int n = 0;
  int m = 3;
  std::vector<std::int32_t> tuples;  // flat, m per tuple
  std::vector<std::uint8_t> labels;
  std::vector<AugmentSource> sources;
  std::vector<double> scores;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  std::span<const std::int32_t> tuple(std::size_t e) const {
    return {tuples.data() + e * m, static_cast<std::size_t>(m)};
  }
};

namespace detail {

/// Streams the label-constant m-cliques of one label class and keeps a
/// seeded uniform reservoir when a cap is set.
class TupleCollector {
 public:
  TupleCollector(int m, std::optional<std::size_t> cap, std::uint64_t seed)
      : m_(m), cap_(cap), rng_(seed) {}

  void offer(std::span<const std::int32_t> tuple) {
    ++seen_;
    if (!cap_ || flat_.size() / m_ < *cap_) {
      flat_.insert(flat_.end(), tuple.begin(), tuple.end());
      return;
    }
    std::uniform_int_distribution<std::size_t> pick(0, seen_ - 1);
    const std::size_t slot = pick(rng_);
    if (slot < *cap_)
      std::copy(tuple.begin(), tuple.end(), flat_.begin() + slot * m_);
  }

  std::vector<std::int32_t> take() { return std::move(flat_); }

 private:
  int m_;
  std::optional<std::size_t> cap_;
  std::mt19937_64 rng_;
  std::size_t seen_ = 0;
  std::vector<std::int32_t> flat_;
};

struct LabelGraph {
  int n = 0;
  std::size_t words = 0;
  std::vector<std::uint64_t> adj;

  explicit LabelGraph(int n_) : n(n_), words((n_ + 63) / 64), adj(static_cast<std::size_t>(n_) * words, 0) {}
  void add_edge(int i, int j) {
    adj[i * words + j / 64] |= 1ull << (j % 64);
    adj[j * words + i / 64] |= 1ull << (i % 64);
  }
  const std::uint64_t* row(int i) const { return adj.data() + static_cast<std::size_t>(i) * words; }
};

/// Recursively extends a clique prefix by intersecting candidate sets;
/// every enumerated m-clique is offered to the collector.
inline void extend_cliques(const LabelGraph& g, std::vector<std::int32_t>& prefix,
                           std::vector<std::uint64_t>& cand, int depth, int m,
                           const HyperObservations& exclude, TupleCollector& out) {
  if (depth == m) {
    const std::span<const std::int32_t> t(prefix.data(), prefix.size());
    if (exclude.empty() || !exclude.contains(t)) out.offer(t);
    return;
  }
  const int last = prefix.back();
  for (std::size_t w = last / 64; w < g.words; ++w) {
    std::uint64_t bits = cand[w];
    if (w == static_cast<std::size_t>(last / 64)) bits &= ~((2ull << (last % 64)) - 1);
    while (bits) {
      const int v = static_cast<int>(w * 64 + std::countr_zero(bits));
      bits &= bits - 1;
      std::vector<std::uint64_t> next(g.words);
      const std::uint64_t* rv = g.row(v);
      for (std::size_t x = 0; x < g.words; ++x) next[x] = cand[x] & rv[x];
      prefix.push_back(v);
      extend_cliques(g, prefix, next, depth + 1, m, exclude, out);
      prefix.pop_back();
    }
  }
}

}  // namespace detail

/// Enumerates the candidate pools by common-neighbor intersection over the
/// label-1 and label-0 observation graphs. With cap_per_class set, each pool
/// is a seeded uniform subsample of that size.
inline CandidatePools build_candidate_pools(const PairObservations& pair_obs,
                                            const HyperObservations& hyper_obs, int m,
                                            std::optional<std::size_t> cap_per_class = 20000,
                                            std::uint64_t seed = 0xc0ffee) {
  if (pair_obs.empty()) throw argument_error("build_candidate_pools: no pairwise observations");
  if (m < 3) throw argument_error("build_candidate_pools: order must be at least 3");
  if (m > model::kMaxOrder) throw argument_error("build_candidate_pools: order above supported maximum");

  const int n = pair_obs.n;
  detail::LabelGraph linked(n), unlinked(n);
  for (const auto& e : pair_obs.entries) (e.y ? linked : unlinked).add_edge(e.i, e.j);

  CandidatePools pools;
  pools.n = n;
  pools.m = m;
  const detail::LabelGraph* graphs[2] = {&linked, &unlinked};
  for (int cls = 0; cls < 2; ++cls) {
    const detail::LabelGraph& g = *graphs[cls];
    detail::TupleCollector collector(m, cap_per_class, seed + cls);
    std::vector<std::int32_t> prefix;
    for (const auto& e : pair_obs.entries) {
      if ((cls == 0) != (e.y != 0)) continue;
      std::vector<std::uint64_t> cand(g.words);
      const std::uint64_t* ri = g.row(e.i);
      const std::uint64_t* rj = g.row(e.j);
      for (std::size_t w = 0; w < g.words; ++w) cand[w] = ri[w] & rj[w];
      prefix.assign({e.i, e.j});
      detail::extend_cliques(g, prefix, cand, 2, m, hyper_obs, collector);
    }
    (cls == 0 ? pools.clique : pools.non_clique) = collector.take();
  }
  return pools;
}

/// Scores pool tuples with the fitted factors and keeps the low-uncertainty
/// ones: clique tuples scoring at least 1-delta become positives, non-clique
/// tuples scoring at most delta become negatives.
inline AugmentedSet select_augmented(const LatentFactors& Z, const CandidatePools& pools, double beta,
                                     double delta) {
  if (!(delta > 0.0 && delta < 0.5)) throw argument_error("select_augmented: delta must lie in (0, 0.5)");
  AugmentedSet out;
  out.n = pools.n;
  out.m = pools.m;
  std::array<const double*, model::kMaxOrder> rows{};
  auto scan = [&](const std::vector<std::int32_t>& flat, AugmentSource source) {
    const double threshold_hi = 1.0 - delta;
    for (std::size_t e = 0; e + pools.m <= flat.size(); e += pools.m) {
      const std::span<const std::int32_t> t{flat.data() + e, static_cast<std::size_t>(pools.m)};
      for (int a = 0; a < pools.m; ++a) rows[a] = Z.row(t[a]);
      const double score =
          model::hyper_prob(std::span<const double* const>(rows.data(), pools.m), Z.r, beta);
      const bool keep = source == AugmentSource::Clique ? score >= threshold_hi : score <= delta;
      if (!keep) continue;
      out.tuples.insert(out.tuples.end(), t.begin(), t.end());
      out.labels.push_back(source == AugmentSource::Clique ? 1 : 0);
      out.sources.push_back(source);
      out.scores.push_back(score);
    }
  };
  scan(pools.clique, AugmentSource::Clique);
  scan(pools.non_clique, AugmentSource::NonClique);
  return out;
}

/// Step 1 of the augmentation pipeline: joint embedding of the observed
/// network with the penalty disabled (lambda forced to 0).
inline LatentFactors embed_observed(const PairObservations& pair_obs,
                                    const HyperObservations& hyper_obs, const ModelConfig& config) {
  if (pair_obs.empty()) throw argument_error("embed_observed: pairwise observations required");
  ModelConfig step1 = config;
  step1.lambda = 0.0;
  auto [Z, report] = optim::fit_variant(optim::Variant::JLE, pair_obs, hyper_obs, step1);
  return Z;
}

struct AugmentOptions {
  double delta = 0.1;
  std::optional<std::size_t> cap_per_class = 20000;
  std::uint64_t pool_seed = 0xc0ffee;
  bool confidence_weights = false;  // per-entry weight = selection score confidence
};

struct AugmentResult {
  LatentFactors Z;
  AugmentedSet augmented;
  optim::FitReport report;
};

/// The full three-step pipeline: embed the observed network, build candidate
/// pools, select low-uncertainty statuses, then refit the joint objective on
/// the union, warm-started from the observed-network embedding. An empty
/// selection falls back to the plain seeded joint fit.
inline AugmentResult augment_and_refit(const PairObservations& pair_obs,
                                       const HyperObservations& hyper_obs, const ModelConfig& config,
                                       const AugmentOptions& options = {}) {
  if (pair_obs.empty()) throw argument_error("augment_and_refit: pairwise observations required");
  if (!(options.delta > 0.0 && options.delta < 0.5))
    throw argument_error("augment_and_refit: delta must lie in (0, 0.5)");
  config.validate();

  const LatentFactors Z_obs = embed_observed(pair_obs, hyper_obs, config);
  const int m = hyper_obs.empty() ? 3 : hyper_obs.m;
  const auto pools =
      build_candidate_pools(pair_obs, hyper_obs, m, options.cap_per_class, options.pool_seed);
  AugmentedSet selected = select_augmented(Z_obs, pools, config.beta, options.delta);

  AugmentResult result;
  if (selected.empty()) {
    auto [Z, report] = optim::fit_variant(optim::Variant::JLE, pair_obs, hyper_obs, config);
    result.Z = std::move(Z);
    result.report = std::move(report);
    result.augmented = std::move(selected);
    return result;
  }

  HyperObservations merged = hyper_obs.empty() ? HyperObservations(pair_obs.n, m) : hyper_obs;
  for (std::size_t e = 0; e < selected.size(); ++e) {
    const double w =
        options.confidence_weights
            ? (selected.labels[e] ? selected.scores[e] : 1.0 - selected.scores[e])
            : 1.0;
    merged.add(selected.tuple(e), selected.labels[e], w);
  }
  auto [Z, report] = optim::fit_from(Z_obs, pair_obs, merged, config);
  result.Z = std::move(Z);
  result.report = std::move(report);
  result.augmented = std::move(selected);
  return result;
}

struct DeltaTable {
  double best_delta = 0.0;
  std::vector<std::pair<double, double>> table;  // delta -> validation AUC
};

/// Grid search for the augmentation cutoff; ties break toward the larger
/// (more conservative) delta.
inline DeltaTable tune_delta(std::vector<double> grid, const PairObservations& pair_obs,
                             const HyperObservations& hyper_obs, const PairObservations& valid_pair,
                             const HyperObservations& valid_hyper, const ModelConfig& config,
                             AugmentOptions options = {}) {
  if (grid.empty()) throw argument_error("tune_delta: empty grid");
  if (valid_pair.empty() && valid_hyper.empty()) throw argument_error("tune_delta: empty validation sets");
  for (double d : grid)
    if (!(d > 0.0 && d < 0.5)) throw argument_error("tune_delta: grid values must lie in (0, 0.5)");
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  DeltaTable out;
  bool any = false;
  double best_auc = -1.0;
  for (double delta : grid) {
    options.delta = delta;
    try {
      const AugmentResult res = augment_and_refit(pair_obs, hyper_obs, config, options);
      const double score = optim::combined_validation_auc(res.Z, config.beta, valid_pair, valid_hyper);
      out.table.emplace_back(delta, score);
      if (!any || score >= best_auc) {
        any = true;
        best_auc = score;
        out.best_delta = delta;
      }
    } catch (const numeric_error&) {
      // fit failed at this delta; skip
    }
  }
  if (!any) throw numeric_error("tune_delta: every grid point failed");
  return out;
}

}  // namespace hyperembed::augment
