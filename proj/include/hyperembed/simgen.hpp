#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "hyperembed/errors.hpp"
#include "hyperembed/model.hpp"
#include "hyperembed/types.hpp"

namespace hyperembed::simgen {

using model::HyperObservations;
using model::LatentFactors;
using model::PairObservations;

/// Knobs of the synthetic network generators.
struct GenSpec {
  int n = 100;
  int r = 5;
  std::vector<double> alpha_pair{1.0, 1.0, 1.0, 0.2, 0.2};
  std::vector<double> alpha_hyper{0.2, 0.2, 0.2, 1.0, 1.0};
  double c = 1.0;
  double beta_gen = 3.0;
  double rho = 0.0;
  double rho_obs = 0.0;
  int clusters = 0;
  std::uint64_t seed = 1;

  void validate() const {
    if (n < 3) throw argument_error("GenSpec: n must be at least 3");
    if (r <= 0) throw argument_error("GenSpec: r must be positive");
    if (!(c > 0.0)) throw argument_error("GenSpec: c must be positive");
    if (beta_gen < 1.0) throw argument_error("GenSpec: beta_gen must be >= 1");
    if (rho < 0.0 || rho >= 1.0) throw argument_error("GenSpec: rho must lie in [0,1)");
    if (rho_obs < 0.0 || rho_obs >= 1.0) throw argument_error("GenSpec: rho_obs must lie in [0,1)");
    for (double a : alpha_pair)
      if (!(a > 0.0)) throw argument_error("GenSpec: alpha entries must be positive");
    for (double a : alpha_hyper)
      if (!(a > 0.0)) throw argument_error("GenSpec: alpha entries must be positive");
  }
};

inline std::size_t pair_count(int n) { return static_cast<std::size_t>(n) * (n - 1) / 2; }

inline std::size_t pair_index(int n, int i, int j) {
  return static_cast<std::size_t>(i) * n - static_cast<std::size_t>(i) * (i + 1) / 2 + (j - i - 1);
}

/// Fully realized pairwise statuses with their generating probabilities,
/// indexed by pair_index over i < j.
struct PairLabels {
  int n = 0;
  std::vector<std::uint8_t> labels;
  std::vector<double> probs;

  std::uint8_t label(int i, int j) const { return labels[pair_index(n, i, j)]; }
  double prob(int i, int j) const { return probs[pair_index(n, i, j)]; }
};

/// Mixture-uniform latent factors: each entry is U(-1,-0.6) or U(0.6,1)
/// with a fair sign coin, independently per entry.
inline LatentFactors gen_latent_mixture(int n, int r, std::uint64_t seed) {
  LatentFactors Z(n, r);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> mag(0.6, 1.0);
  std::bernoulli_distribution neg(0.5);
  for (double& v : Z.values) {
    const double u = mag(rng);
    v = neg(rng) ? -u : u;
  }
  return Z;
}

inline LatentFactors weighted(const LatentFactors& Z, std::span<const double> alpha) {
  if (static_cast<int>(alpha.size()) != Z.r) throw argument_error("weighted: alpha length must equal r");
  LatentFactors out = Z;
  for (int i = 0; i < Z.n; ++i)
    for (int k = 0; k < Z.r; ++k) out.at(i, k) = Z.at(i, k) * alpha[k];
  return out;
}

namespace detail {

/// Coordinates of K regular-simplex vertices (unit norm, pairwise dot
/// -1/(K-1)) embedded in the first K-1 of r dimensions, via a rank-deficient
/// Cholesky of the simplex Gram matrix.
inline std::vector<std::vector<double>> simplex_directions(int K, int r) {
  std::vector<std::vector<double>> dirs(K, std::vector<double>(r, 0.0));
  if (K == 1) {
    dirs[0][0] = 1.0;
    return dirs;
  }
  const double off = -1.0 / (K - 1);
  std::vector<std::vector<double>> L(K, std::vector<double>(K - 1, 0.0));
  for (int g = 0; g < K; ++g) {
    for (int t = 0; t <= std::min(g, K - 2); ++t) {
      double acc = (t == g) ? 1.0 : off;
      for (int s = 0; s < t; ++s) acc -= L[g][s] * L[t][s];
      if (t == g) L[g][t] = std::sqrt(std::max(acc, 0.0));
      else L[g][t] = acc / L[t][t];
    }
  }
  for (int g = 0; g < K; ++g)
    for (int t = 0; t < K - 1; ++t) dirs[g][t] = L[g][t];
  return dirs;
}

/// Greedily spread K unit directions in r dimensions when K > r+1 rules out
/// an exact simplex: each pick minimizes the worst coherence with the
/// directions chosen so far.
inline std::vector<std::vector<double>> spread_directions(int K, int r, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto draw_unit = [&] {
    std::vector<double> v(r);
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& x : v) {
        x = gauss(rng);
        norm += x * x;
      }
    } while (norm < 1e-12);
    norm = std::sqrt(norm);
    for (double& x : v) x /= norm;
    return v;
  };
  std::vector<std::vector<double>> dirs;
  dirs.push_back(draw_unit());
  while (static_cast<int>(dirs.size()) < K) {
    std::vector<double> best;
    double best_score = 2.0;
    for (int cand = 0; cand < 200; ++cand) {
      auto v = draw_unit();
      double worst = 0.0;
      for (const auto& d : dirs) {
        double dot = 0.0;
        for (int k = 0; k < r; ++k) dot += v[k] * d[k];
        worst = std::max(worst, std::fabs(dot));
      }
      if (worst < best_score) {
        best_score = worst;
        best = std::move(v);
      }
    }
    dirs.push_back(std::move(best));
  }
  return dirs;
}

struct ClusterCalibration {
  double scale_sq = 2.197;  // squared center norm
  double flip_prob = 0.0;
  double flip_mult = 2.0;
};

/// Expected link rates of the two-population radial construction have closed
/// forms over the direction Gram, which makes the calibration a pair of
/// nested bisections: flip probability against the within-cluster target,
/// then center magnitude against the between-cluster target.
inline ClusterCalibration calibrate_clusters(const std::vector<std::vector<double>>& dirs, int r,
                                             double within_target, double between_target) {
  const int K = static_cast<int>(dirs.size());
  const double alpha = 2.0;

  std::vector<double> cross;  // direction dot products over cluster pairs
  for (int g = 0; g < K; ++g)
    for (int h = g + 1; h < K; ++h) {
      double dot = 0.0;
      for (int k = 0; k < r; ++k) dot += dirs[g][k] * dirs[h][k];
      cross.push_back(dot);
    }

  auto mix = [&](double logit, double p) {
    const double q_same = (1.0 - p) * (1.0 - p);
    const double q_mix = 2.0 * p * (1.0 - p);
    const double q_flip = p * p;
    return q_same * model::sigmoid(logit) + q_mix * model::sigmoid(-alpha * logit) +
           q_flip * model::sigmoid(alpha * alpha * logit);
  };
  auto within = [&](double x, double p) { return mix(x, p); };
  auto between = [&](double x, double p) {
    if (cross.empty()) return 0.0;
    double s = 0.0;
    for (double d : cross) s += mix(x * d, p);
    return s / static_cast<double>(cross.size());
  };
  auto solve_flip = [&](double x) {
    double lo = 0.0, hi = 0.5;
    if (within(x, 0.0) <= within_target) return 0.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (within(x, mid) > within_target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  };

  ClusterCalibration cal;
  cal.flip_mult = alpha;
  if (cross.empty()) {
    // single cluster: only the within-rate target applies
    double lo = 1e-3, hi = 80.0;
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (model::sigmoid(mid) < within_target ? lo : hi) = mid;
    }
    cal.scale_sq = 0.5 * (lo + hi);
    return cal;
  }
  double lo = 0.5, hi = 80.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (between(mid, solve_flip(mid)) > between_target ? lo : hi) = mid;
  }
  cal.scale_sq = 0.5 * (lo + hi);
  cal.flip_prob = solve_flip(cal.scale_sq);
  return cal;
}

}  // namespace detail

struct ClusteredLatent {
  LatentFactors Z;
  std::vector<int> labels;
};

/// Latent positions spread across K clusters, calibrated so realized links
/// under the logistic inner-product model hit roughly 0.90 within clusters
/// and 0.25 between them. Cluster centers sit on a scaled regular simplex;
/// a small calibrated fraction of nodes is placed on the opposite ray at
/// twice the magnitude, which is what pulls the between-cluster average
/// below the value reachable by center geometry alone.
inline ClusteredLatent gen_latent_clustered(int n, int r, int K, std::uint64_t seed,
                                            double within_target = 0.90, double between_target = 0.25) {
  if (n < 1 || r < 1) throw argument_error("gen_latent_clustered: n and r must be positive");
  if (K < 1 || K > n) throw argument_error("gen_latent_clustered: K must lie in [1, n]");

  std::mt19937_64 rng(seed);
  const auto dirs = (K <= r + 1) ? detail::simplex_directions(K, r) : detail::spread_directions(K, r, rng);
  const auto cal = detail::calibrate_clusters(dirs, r, within_target, between_target);
  const double scale = std::sqrt(cal.scale_sq);

  ClusteredLatent out{LatentFactors(n, r), std::vector<int>(n, 0)};
  std::bernoulli_distribution flip(cal.flip_prob);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  for (int i = 0; i < n; ++i) {
    const int g = static_cast<int>((static_cast<long long>(i) * K) / n);
    out.labels[i] = g;
    const double t = flip(rng) ? -cal.flip_mult : 1.0;
    for (int k = 0; k < r; ++k) out.Z.at(i, k) = t * scale * dirs[g][k] + jitter(rng);
  }
  return out;
}

/// Realizes every pairwise status Y_ij ~ Bernoulli(sigma(Z_i . Z_j)).
inline PairLabels gen_pair_links(const LatentFactors& Z, std::uint64_t seed) {
  PairLabels out;
  out.n = Z.n;
  out.labels.resize(pair_count(Z.n));
  out.probs.resize(pair_count(Z.n));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t p = 0;
  for (int i = 0; i < Z.n; ++i)
    for (int j = i + 1; j < Z.n; ++j, ++p) {
      const double prob = model::pair_prob(Z.row_span(i), Z.row_span(j));
      out.probs[p] = prob;
      out.labels[p] = static_cast<std::uint8_t>(u(rng) < prob ? 1 : 0);
    }
  return out;
}

/// Hyperlink statuses generated on a list of 3-tuples.
struct HyperSample {
  int n = 0;
  int m = 3;
  std::vector<std::int32_t> tuples;  // flat, m per entry
  std::vector<std::uint8_t> labels;
  std::vector<double> theta;     // marginal probability given Z
  std::vector<double> p_used;    // probability the label was drawn from
  std::vector<double> p_clique;      // conditional probability given a clique
  std::vector<double> p_non_clique;  // conditional probability given no clique
  std::vector<std::uint8_t> clique;
  double rho_eff = 0.0;

  std::size_t size() const { return labels.size(); }
};

namespace detail {

/// Hyperlink marginal: the pairwise-sum term reads low-level pair factors,
/// the concordance term reads the (possibly differently weighted) subgroup
/// factors. Passing the same matrix twice gives the single-weighting form.
inline double hyper_theta(const LatentFactors& Z_pair, const LatentFactors& Z_conc,
                          std::span<const std::int32_t> t, double c, double beta_gen) {
  double pair_sum = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b) {
      const double* za = Z_pair.row(t[a]);
      const double* zb = Z_pair.row(t[b]);
      double dot = 0.0;
      for (int k = 0; k < Z_pair.r; ++k) dot += za[k] * zb[k];
      pair_sum += dot;
    }
  const double* rows[3] = {Z_conc.row(t[0]), Z_conc.row(t[1]), Z_conc.row(t[2])};
  const double f = model::concordance_f(std::span<const double* const>(rows, 3), Z_conc.r);
  return model::sigmoid(c * pair_sum + beta_gen * f);
}

inline bool is_clique(const PairLabels& pairs, std::span<const std::int32_t> t) {
  return pairs.label(t[0], t[1]) && pairs.label(t[0], t[2]) && pairs.label(t[1], t[2]);
}

inline double clique_prob(const PairLabels& pairs, std::span<const std::int32_t> t) {
  return pairs.prob(t[0], t[1]) * pairs.prob(t[0], t[2]) * pairs.prob(t[1], t[2]);
}

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace detail

/// Independently generated hyperlinks: Y ~ Bernoulli(sigma(c * pairsum +
/// beta_gen * f)), with the pairwise sum over the link-level factors and the
/// concordance over the subgroup-level factors.
inline HyperSample gen_hyper_independent(const LatentFactors& Z_pair_part,
                                         const LatentFactors& Z_conc_part, double c, double beta_gen,
                                         std::vector<std::int32_t> tuples, std::uint64_t seed) {
  if (!(c > 0.0)) throw argument_error("gen_hyper_independent: c must be positive");
  if (beta_gen < 1.0) throw argument_error("gen_hyper_independent: beta_gen must be >= 1");
  if (Z_pair_part.n != Z_conc_part.n) throw argument_error("gen_hyper_independent: factor shapes disagree");
  if (tuples.size() % 3 != 0) throw argument_error("gen_hyper_independent: flat tuple list must be a multiple of 3");
  HyperSample out;
  out.n = Z_pair_part.n;
  out.tuples = std::move(tuples);
  const std::size_t count = out.tuples.size() / 3;
  out.labels.resize(count);
  out.theta.resize(count);
  out.p_used.resize(count);
  out.clique.assign(count, 0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t e = 0; e < count; ++e) {
    const std::span<const std::int32_t> t{out.tuples.data() + 3 * e, 3};
    const double theta = detail::hyper_theta(Z_pair_part, Z_conc_part, t, c, beta_gen);
    out.theta[e] = theta;
    out.p_used[e] = theta;
    out.labels[e] = static_cast<std::uint8_t>(u(rng) < theta ? 1 : 0);
  }
  return out;
}

inline HyperSample gen_hyper_independent(const LatentFactors& Z_alpha, double c, double beta_gen,
                                         std::vector<std::int32_t> tuples, std::uint64_t seed) {
  return gen_hyper_independent(Z_alpha, Z_alpha, c, beta_gen, std::move(tuples), seed);
}

namespace detail {

inline std::vector<std::int32_t> random_tuples_with_replacement(int n, std::size_t count,
                                                                std::mt19937_64& rng) {
  std::uniform_int_distribution<std::int32_t> node(0, n - 1);
  std::vector<std::int32_t> flat;
  flat.reserve(3 * count);
  while (flat.size() < 3 * count) {
    std::int32_t a = node(rng), b = node(rng), c = node(rng);
    if (a == b || a == c || b == c) continue;
    std::int32_t t[3] = {a, b, c};
    std::sort(std::begin(t), std::end(t));
    flat.insert(flat.end(), std::begin(t), std::end(t));
  }
  return flat;
}

/// Mean per-tuple conditional gap of the additive construction at a given
/// effective dependency, over a calibration sample of tuples. Without
/// clamping every tuple's gap equals rho_eff and the mean is rho_eff.
inline double mean_conditional_gap(std::span<const double> theta, std::span<const double> q,
                                   double rho_eff) {
  double sum = 0.0;
  for (std::size_t e = 0; e < theta.size(); ++e) {
    const double p1 = clamp01(theta[e] + rho_eff * (1.0 - q[e]));
    const double p0 = clamp01(theta[e] - rho_eff * q[e]);
    sum += p1 - p0;
  }
  return sum / static_cast<double>(theta.size());
}

/// Solves for the effective per-tuple dependency whose mean realized
/// conditional gap equals the requested rho. Clamping makes the raw
/// construction undershoot, so the effective value sits at or above the
/// target; with no clamping anywhere it equals rho exactly.
inline double calibrate_rho_eff(const LatentFactors& Z, const PairLabels& pairs, double rho,
                                double c, double beta_gen, std::uint64_t seed) {
  if (rho == 0.0) return 0.0;
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  const std::size_t count = 100000;
  const auto flat = random_tuples_with_replacement(Z.n, count, rng);
  std::vector<double> theta(count), q(count);
  for (std::size_t e = 0; e < count; ++e) {
    const std::span<const std::int32_t> t{flat.data() + 3 * e, 3};
    theta[e] = hyper_theta(Z, Z, t, c, beta_gen);
    q[e] = clique_prob(pairs, t);
  }
  if (mean_conditional_gap(theta, q, 1.0) < rho)
    throw numeric_error("gen_hyper_dependent: requested dependency unreachable for this network");
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_conditional_gap(theta, q, mid) < rho ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline HyperSample gen_hyper_dependent_raw(const LatentFactors& Z, const PairLabels& pairs,
                                           double rho_eff, double c, double beta_gen,
                                           std::vector<std::int32_t> tuples, std::uint64_t seed) {
  HyperSample out;
  out.n = Z.n;
  out.tuples = std::move(tuples);
  out.rho_eff = rho_eff;
  const std::size_t count = out.tuples.size() / 3;
  out.labels.resize(count);
  out.theta.resize(count);
  out.p_used.resize(count);
  out.clique.resize(count);
  out.p_clique.resize(count);
  out.p_non_clique.resize(count);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t e = 0; e < count; ++e) {
    const std::span<const std::int32_t> t{out.tuples.data() + 3 * e, 3};
    const double theta = hyper_theta(Z, Z, t, c, beta_gen);
    const double q = clique_prob(pairs, t);
    const bool tri = is_clique(pairs, t);
    const double p1 = clamp01(theta + rho_eff * (1.0 - q));
    const double p0 = clamp01(theta - rho_eff * q);
    out.theta[e] = theta;
    out.p_clique[e] = p1;
    out.p_non_clique[e] = p0;
    out.p_used[e] = tri ? p1 : p0;
    out.clique[e] = tri;
    out.labels[e] = static_cast<std::uint8_t>(u(rng) < out.p_used[e] ? 1 : 0);
  }
  return out;
}

}  // namespace detail

/// Hyperlinks conditionally dependent on realized pairwise cliques: given
/// clique indicator D and marginal theta, draws use p1 = theta + rho_eff(1-q)
/// and p0 = theta - rho_eff q (clamped), where q is the clique probability.
/// Unclamped this leaves the marginal at theta and separates p1 - p0 by
/// rho_eff; rho_eff itself is calibrated so the aggregate conditional gap
/// matches the requested rho.
inline HyperSample gen_hyper_dependent(const LatentFactors& Z, const PairLabels& pairs, double rho,
                                       double c, double beta_gen, std::vector<std::int32_t> tuples,
                                       std::uint64_t seed) {
  if (rho < 0.0 || rho >= 1.0) throw argument_error("gen_hyper_dependent: rho must lie in [0,1)");
  if (Z.n != pairs.n) throw argument_error("gen_hyper_dependent: Z and pair labels disagree on n");
  if (tuples.size() % 3 != 0) throw argument_error("gen_hyper_dependent: flat tuple list must be a multiple of 3");
  const double rho_eff = detail::calibrate_rho_eff(Z, pairs, rho, c, beta_gen, seed);
  return detail::gen_hyper_dependent_raw(Z, pairs, rho_eff, c, beta_gen, std::move(tuples), seed);
}

/// Monte-Carlo estimate of the conditional dependency realized by a sample:
/// for every tuple one label is drawn with the clique forced present and one
/// with it forced absent; the difference of means estimates the per-tuple
/// conditional gap averaged over tuples.
inline double estimate_rho_mc(const HyperSample& sample, std::uint64_t seed) {
  if (sample.size() == 0) throw argument_error("estimate_rho_mc: empty sample");
  if (sample.p_clique.size() != sample.size())
    throw argument_error("estimate_rho_mc: sample lacks conditional probabilities");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double forced1 = 0.0, forced0 = 0.0;
  for (std::size_t e = 0; e < sample.size(); ++e) {
    forced1 += (u(rng) < sample.p_clique[e]) ? 1.0 : 0.0;
    forced0 += (u(rng) < sample.p_non_clique[e]) ? 1.0 : 0.0;
  }
  return (forced1 - forced0) / static_cast<double>(sample.size());
}

/// Misspecified hyperlink generator: probabilities depend only on clique
/// status and shared cluster membership, not on the latent factors.
inline HyperSample gen_hyper_clique_misspecified(const std::vector<int>& cluster_labels,
                                                 const PairLabels& pairs,
                                                 std::vector<std::int32_t> tuples, std::uint64_t seed) {
  if (static_cast<int>(cluster_labels.size()) != pairs.n)
    throw argument_error("gen_hyper_clique_misspecified: label count must equal n");
  HyperSample out;
  out.n = pairs.n;
  out.tuples = std::move(tuples);
  const std::size_t count = out.tuples.size() / 3;
  out.labels.resize(count);
  out.theta.resize(count);
  out.p_used.resize(count);
  out.clique.resize(count);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t e = 0; e < count; ++e) {
    const std::span<const std::int32_t> t{out.tuples.data() + 3 * e, 3};
    const bool tri = detail::is_clique(pairs, t);
    const bool same = cluster_labels[t[0]] == cluster_labels[t[1]] &&
                      cluster_labels[t[1]] == cluster_labels[t[2]];
    const double p = tri ? (same ? 0.90 : 0.10) : 0.0;
    out.theta[e] = p;
    out.p_used[e] = p;
    out.clique[e] = tri;
    out.labels[e] = static_cast<std::uint8_t>(u(rng) < p ? 1 : 0);
  }
  return out;
}

/// Wedge-closure correlation of the observation pattern: the correlation
/// between joint observation of (i,j),(i,k) and observation of (j,k),
/// estimated over seeded random wedges.
inline double estimate_rho_obs(const PairObservations& obs, int n, std::uint64_t seed = 0x0b5e55ed,
                               std::size_t wedges = 100000) {
  if (n < 3) throw argument_error("estimate_rho_obs: n must be at least 3");
  if (wedges < 100) throw numeric_error("estimate_rho_obs: too few wedges for estimation");
  std::vector<std::uint64_t> adj(static_cast<std::size_t>(n) * ((n + 63) / 64), 0);
  const std::size_t words = (n + 63) / 64;
  auto set_bit = [&](int a, int b) { adj[a * words + b / 64] |= 1ull << (b % 64); };
  auto get_bit = [&](int a, int b) { return (adj[a * words + b / 64] >> (b % 64)) & 1ull; };
  for (const auto& e : obs.entries) {
    set_bit(e.i, e.j);
    set_bit(e.j, e.i);
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> node(0, n - 1);
  std::size_t count = 0;
  double sx = 0.0, sy = 0.0, sxy = 0.0;
  while (count < wedges) {
    const int i = node(rng);
    const int j = node(rng);
    const int k = node(rng);
    if (i == j || i == k || j == k) continue;
    ++count;
    const double x = static_cast<double>(get_bit(i, j) & get_bit(i, k));
    const double y = static_cast<double>(get_bit(j, k));
    sx += x;
    sy += y;
    sxy += x * y;
  }
  const double px = sx / count, py = sy / count;
  const double vx = px * (1.0 - px), vy = py * (1.0 - py);
  if (vx <= 0.0 || vy <= 0.0)
    throw numeric_error("estimate_rho_obs: degenerate observation pattern (zero variance)");
  return std::clamp((sxy / count - px * py) / std::sqrt(vx * vy), -1.0, 1.0);
}

namespace detail {

/// Prefix-sum tree for weighted closure sampling.
class Fenwick {
 public:
  explicit Fenwick(std::size_t size) : tree_(size + 1, 0.0), size_(size) {}

  void add(std::size_t idx, double delta) {
    for (std::size_t p = idx + 1; p <= size_; p += p & (~p + 1)) tree_[p] += delta;
    total_ += delta;
  }

  double total() const { return total_; }

  std::size_t find(double target) const {
    std::size_t pos = 0;
    std::size_t mask = 1;
    while ((mask << 1) <= size_) mask <<= 1;
    for (; mask; mask >>= 1) {
      const std::size_t next = pos + mask;
      if (next <= size_ && tree_[next] < target) {
        pos = next;
        target -= tree_[next];
      }
    }
    return pos;  // first index with positive residual weight
  }

 private:
  std::vector<double> tree_;
  double total_ = 0.0;
  std::size_t size_ = 0;
};

struct ClosureSampler {
  int n;
  const PairLabels& full;
  std::size_t quota;

  PairObservations run(double gamma, std::uint64_t seed) const {
    const std::size_t P = pair_count(n);
    std::mt19937_64 rng(seed);
    std::vector<std::uint32_t> uniform_order(P);
    std::iota(uniform_order.begin(), uniform_order.end(), 0u);
    std::shuffle(uniform_order.begin(), uniform_order.end(), rng);

    std::vector<std::uint8_t> observed(P, 0);
    std::vector<std::uint32_t> wedge_count(P, 0);
    Fenwick weights(P);
    std::vector<std::vector<std::int32_t>> nbr(n);

    // pair index <-> endpoints
    std::vector<std::pair<std::int32_t, std::int32_t>> ends(P);
    {
      std::size_t p = 0;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j, ++p) ends[p] = {i, j};
    }

    PairObservations obs(n);
    obs.entries.reserve(quota);
    std::size_t uniform_ptr = 0;
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    auto observe = [&](std::size_t p) {
      observed[p] = 1;
      if (wedge_count[p] > 0) {
        const double w = static_cast<double>(wedge_count[p]) * wedge_count[p];
        weights.add(p, -w);
      }
      const auto [i, j] = ends[p];
      obs.entries.push_back({i, j, full.labels[p]});
      // every common endpoint opens new closable wedges
      for (std::int32_t c : nbr[i]) {
        if (c == j) continue;
        const std::size_t q = pair_index(n, std::min<int>(j, c), std::max<int>(j, c));
        if (!observed[q]) {
          const double before = static_cast<double>(wedge_count[q]) * wedge_count[q];
          ++wedge_count[q];
          const double after = static_cast<double>(wedge_count[q]) * wedge_count[q];
          weights.add(q, after - before);
        } else {
          ++wedge_count[q];
        }
      }
      for (std::int32_t c : nbr[j]) {
        if (c == i) continue;
        const std::size_t q = pair_index(n, std::min<int>(i, c), std::max<int>(i, c));
        if (!observed[q]) {
          const double before = static_cast<double>(wedge_count[q]) * wedge_count[q];
          ++wedge_count[q];
          const double after = static_cast<double>(wedge_count[q]) * wedge_count[q];
          weights.add(q, after - before);
        } else {
          ++wedge_count[q];
        }
      }
      nbr[i].push_back(j);
      nbr[j].push_back(i);
    };

    auto next_uniform = [&]() -> std::size_t {
      while (uniform_ptr < P && observed[uniform_order[uniform_ptr]]) ++uniform_ptr;
      return uniform_order[uniform_ptr++];
    };

    const std::size_t seeds = std::max<std::size_t>(
        std::min<std::size_t>(quota, 8),
        static_cast<std::size_t>(std::llround((1.0 - gamma) * static_cast<double>(quota))));
    while (obs.entries.size() < quota) {
      std::size_t pick;
      if (obs.entries.size() < seeds || weights.total() <= 0.0) {
        pick = next_uniform();
      } else {
        pick = weights.find(u01(rng) * weights.total());
        if (observed[pick] || wedge_count[pick] == 0) pick = next_uniform();
      }
      observe(pick);
    }
    return obs;
  }
};

}  // namespace detail

/// Samples which pairwise statuses are observed. rho_obs == 0 draws the
/// quota uniformly; otherwise a wedge-closure booster preferentially observes
/// pairs closing many observed wedges, with the closure share bisected until
/// the measured observation dependency matches the request.
inline PairObservations sample_observations(const PairLabels& full, double target_rate, double rho_obs,
                                            std::uint64_t seed) {
  if (!(target_rate > 0.0 && target_rate <= 1.0))
    throw argument_error("sample_observations: target rate must lie in (0,1]");
  if (rho_obs < 0.0 || rho_obs >= 1.0)
    throw argument_error("sample_observations: rho_obs must lie in [0,1)");
  const int n = full.n;
  const std::size_t P = pair_count(n);
  const std::size_t quota =
      std::min<std::size_t>(P, std::max<std::size_t>(1, std::llround(target_rate * static_cast<double>(P))));

  detail::ClosureSampler sampler{n, full, quota};
  if (rho_obs == 0.0) return sampler.run(0.0, seed);

  const double measure_tol = 0.015;
  double lo = 0.0, hi = 1.0;
  PairObservations best;
  double best_err = 2.0;
  auto probe = [&](double gamma) {
    PairObservations obs = sampler.run(gamma, seed);
    const double measured = estimate_rho_obs(obs, n, seed ^ 0xabcdef12345ull);
    const double err = std::fabs(measured - rho_obs);
    if (err < best_err) {
      best_err = err;
      best = std::move(obs);
    }
    return measured;
  };
  const double at_full = probe(1.0);
  if (at_full + 0.04 < rho_obs)
    throw data_error("sample_observations: requested observation dependency unreachable at this rate");
  if (best_err > measure_tol) {
    probe(0.0);
    for (int it = 0; it < 12 && best_err > measure_tol; ++it) {
      const double mid = 0.5 * (lo + hi);
      (probe(mid) < rho_obs ? lo : hi) = mid;
    }
  }
  return best;
}

enum class HyperTrainMode { FractionOfAll, FractionOfPool, FixedCount };

struct SplitBundle {
  PairObservations train_pair, valid_pair, test_pair;
  std::vector<std::int32_t> pool;  // flat triples whose pairs are all in the training set
  std::vector<std::int32_t> hyper_train, hyper_valid, hyper_test;
};

namespace detail {

/// Triples whose three internal pairs all appear in the observation set.
inline std::vector<std::int32_t> observed_triples(const PairObservations& obs) {
  const int n = obs.n;
  const std::size_t words = (n + 63) / 64;
  std::vector<std::uint64_t> adj(static_cast<std::size_t>(n) * words, 0);
  for (const auto& e : obs.entries) {
    adj[e.i * words + e.j / 64] |= 1ull << (e.j % 64);
    adj[e.j * words + e.i / 64] |= 1ull << (e.i % 64);
  }
  std::vector<std::int32_t> out;
  for (const auto& e : obs.entries) {
    const int i = e.i, j = e.j;
    const std::uint64_t* ri = adj.data() + static_cast<std::size_t>(i) * words;
    const std::uint64_t* rj = adj.data() + static_cast<std::size_t>(j) * words;
    for (std::size_t w = j / 64; w < words; ++w) {
      std::uint64_t bits = ri[w] & rj[w];
      if (w == static_cast<std::size_t>(j / 64)) bits &= ~((2ull << (j % 64)) - 1);
      while (bits) {
        const int k = static_cast<int>(w * 64 + std::countr_zero(bits));
        bits &= bits - 1;
        out.push_back(i);
        out.push_back(j);
        out.push_back(k);
      }
    }
  }
  return out;
}

}  // namespace detail

/// Splits realized pairwise statuses into train/validation/test by the given
/// proportions, then builds the hyperlink tuple pool (all three pairs in the
/// training set) and partitions it into train/validation/test tuples.
inline SplitBundle make_splits(const PairLabels& full, double train_frac, double valid_frac,
                               double test_frac, HyperTrainMode mode, double value,
                               std::uint64_t seed) {
  if (train_frac < 0 || valid_frac < 0 || test_frac < 0 ||
      std::fabs(train_frac + valid_frac + test_frac - 1.0) > 1e-9)
    throw argument_error("make_splits: proportions must be nonnegative and sum to 1");
  const int n = full.n;
  const std::size_t P = pair_count(n);
  std::mt19937_64 rng(seed);
  std::vector<std::uint32_t> order(P);
  std::iota(order.begin(), order.end(), 0u);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t n_train = std::min<std::size_t>(P, std::llround(train_frac * static_cast<double>(P)));
  const std::size_t n_valid = std::min<std::size_t>(P - n_train, std::llround(valid_frac * static_cast<double>(P)));

  SplitBundle out;
  out.train_pair = PairObservations(n);
  out.valid_pair = PairObservations(n);
  out.test_pair = PairObservations(n);
  std::vector<std::pair<std::int32_t, std::int32_t>> ends(P);
  {
    std::size_t p = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j, ++p) ends[p] = {i, j};
  }
  for (std::size_t t = 0; t < P; ++t) {
    const std::size_t p = order[t];
    PairObservations& dst = t < n_train ? out.train_pair : (t < n_train + n_valid ? out.valid_pair : out.test_pair);
    dst.entries.push_back({ends[p].first, ends[p].second, full.labels[p]});
  }

  out.pool = detail::observed_triples(out.train_pair);
  const std::size_t pool_size = out.pool.size() / 3;
  std::size_t want = 0;
  switch (mode) {
    case HyperTrainMode::FractionOfAll: {
      const double all = static_cast<double>(n) * (n - 1) * (n - 2) / 6.0;
      want = static_cast<std::size_t>(std::llround(value * all));
      break;
    }
    case HyperTrainMode::FractionOfPool:
      want = static_cast<std::size_t>(std::llround(value * static_cast<double>(pool_size)));
      break;
    case HyperTrainMode::FixedCount:
      want = static_cast<std::size_t>(std::llround(value));
      break;
  }
  if (want > pool_size)
    throw data_error("make_splits: hyperlink pool smaller than the requested training size");

  std::vector<std::uint32_t> tuple_order(pool_size);
  std::iota(tuple_order.begin(), tuple_order.end(), 0u);
  std::shuffle(tuple_order.begin(), tuple_order.end(), rng);
  auto emit = [&](std::vector<std::int32_t>& dst, std::size_t lo, std::size_t hi) {
    for (std::size_t t = lo; t < hi; ++t) {
      const std::size_t e = tuple_order[t];
      dst.insert(dst.end(), out.pool.begin() + 3 * e, out.pool.begin() + 3 * e + 3);
    }
  };
  const std::size_t rest = pool_size - want;
  emit(out.hyper_train, 0, want);
  emit(out.hyper_valid, want, want + rest / 2);
  emit(out.hyper_test, want + rest / 2, pool_size);
  return out;
}

}  // namespace hyperembed::simgen
