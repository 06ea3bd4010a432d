#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <thread>
#include <vector>

#include "hyperembed/errors.hpp"
#include "hyperembed/types.hpp"

namespace hyperembed::model {

inline constexpr int kMaxOrder = 16;

/// Numerically stable logistic function: never exponentiates a positive
/// argument, so |x| > 30 cannot overflow.
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Sign-consistency psi over one latent coordinate: +1 iff all entries are
/// nonnegative or all are strictly negative, -1 otherwise. Zero sits on the
/// nonnegative branch.
inline int sign_consistency(std::span<const double> coords) {
  if (coords.empty()) throw argument_error("sign_consistency: empty coordinate list");
  bool all_nonneg = true, all_neg = true;
  for (double v : coords) {
    if (v >= 0.0) all_neg = false;
    else all_nonneg = false;
  }
  return (all_nonneg || all_neg) ? 1 : -1;
}

namespace detail {

/// Canonical processing order for a set of rows: indices sorted by
/// lexicographic row content, so sums and products are evaluated in an
/// input-permutation-independent order and results are bitwise stable.
inline std::array<int, kMaxOrder> canonical_order(std::span<const double* const> rows, int r) {
  const int m = static_cast<int>(rows.size());
  std::array<int, kMaxOrder> order{};
  for (int a = 0; a < m; ++a) order[a] = a;
  std::sort(order.begin(), order.begin() + m, [&](int a, int b) {
    return std::lexicographical_compare(rows[a], rows[a] + r, rows[b], rows[b] + r);
  });
  return order;
}

inline double concordance_sorted(std::span<const double* const> rows, int r, const std::array<int, kMaxOrder>& order) {
  const int m = static_cast<int>(rows.size());
  double f = 0.0;
  for (int k = 0; k < r; ++k) {
    bool all_nonneg = true, all_neg = true;
    double prod = 1.0;
    for (int a = 0; a < m; ++a) {
      const double v = rows[order[a]][k];
      if (v >= 0.0) all_neg = false;
      else all_nonneg = false;
      prod *= v;
    }
    const double psi = (all_nonneg || all_neg) ? 1.0 : -1.0;
    f += psi * std::fabs(prod);
  }
  return f;
}

inline double pair_sum_sorted(std::span<const double* const> rows, int r, const std::array<int, kMaxOrder>& order) {
  const int m = static_cast<int>(rows.size());
  double s = 0.0;
  for (int a = 0; a < m; ++a) {
    for (int b = a + 1; b < m; ++b) {
      const double* za = rows[order[a]];
      const double* zb = rows[order[b]];
      double dot = 0.0;
      for (int k = 0; k < r; ++k) dot += za[k] * zb[k];
      s += dot;
    }
  }
  return s;
}

inline void check_rows(std::span<const double* const> rows, int min_m) {
  if (static_cast<int>(rows.size()) < min_m) throw argument_error("hyperlink operation: too few rows");
  if (static_cast<int>(rows.size()) > kMaxOrder) throw argument_error("hyperlink operation: order above supported maximum");
}

/// Deterministic chunked reduction: with threads == 1 this is the plain
/// left-to-right sum; otherwise fixed contiguous chunks are reduced
/// independently and combined in chunk order.
template <typename Term>
double indexed_sum(std::size_t count, int threads, Term&& term) {
  if (threads <= 1 || count < 4096) {
    double s = 0.0;
    for (std::size_t e = 0; e < count; ++e) s += term(e);
    return s;
  }
  const int chunks = threads;
  std::vector<double> partial(chunks, 0.0);
  std::vector<std::thread> pool;
  pool.reserve(chunks);
  const std::size_t step = (count + chunks - 1) / chunks;
  for (int c = 0; c < chunks; ++c) {
    const std::size_t lo = std::min(count, c * step);
    const std::size_t hi = std::min(count, lo + step);
    pool.emplace_back([&, c, lo, hi] {
      double s = 0.0;
      for (std::size_t e = lo; e < hi; ++e) s += term(e);
      partial[c] = s;
    });
  }
  for (auto& t : pool) t.join();
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

}  // namespace detail

/// High-order concordance f: sum over coordinates of psi_k times the absolute
/// product of the m entries. Exactly invariant under permutation of the rows.
inline double concordance_f(std::span<const double* const> rows, int r) {
  detail::check_rows(rows, 3);
  if (r <= 0) throw argument_error("concordance_f: r must be positive");
  const auto order = detail::canonical_order(rows, r);
  return detail::concordance_sorted(rows, r, order);
}

inline double concordance_f(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 3) throw argument_error("concordance_f: need at least 3 rows");
  const std::size_t r = rows.front().size();
  std::vector<const double*> ptrs;
  ptrs.reserve(rows.size());
  for (const auto& row : rows) {
    if (row.size() != r) throw argument_error("concordance_f: mismatched row lengths");
    ptrs.push_back(row.data());
  }
  return concordance_f(std::span<const double* const>(ptrs), static_cast<int>(r));
}

/// Probability of a pairwise link: sigma(z_i . z_j).
inline double pair_prob(std::span<const double> zi, std::span<const double> zj) {
  if (zi.size() != zj.size()) throw argument_error("pair_prob: mismatched row lengths");
  double dot = 0.0;
  for (std::size_t k = 0; k < zi.size(); ++k) dot += zi[k] * zj[k];
  return sigmoid(dot);
}

/// Probability of an m-order hyperlink: sigma of the within-tuple pairwise
/// inner products plus beta times the high-order concordance.
inline double hyper_prob(std::span<const double* const> rows, int r, double beta) {
  detail::check_rows(rows, 3);
  if (beta < 1.0) throw argument_error("hyper_prob: beta must be >= 1");
  const auto order = detail::canonical_order(rows, r);
  return sigmoid(detail::pair_sum_sorted(rows, r, order) + beta * detail::concordance_sorted(rows, r, order));
}

inline double hyper_prob(const std::vector<std::vector<double>>& rows, double beta) {
  if (rows.size() < 3) throw argument_error("hyper_prob: need at least 3 rows");
  const std::size_t r = rows.front().size();
  std::vector<const double*> ptrs;
  for (const auto& row : rows) {
    if (row.size() != r) throw argument_error("hyper_prob: mismatched row lengths");
    ptrs.push_back(row.data());
  }
  return hyper_prob(std::span<const double* const>(ptrs), static_cast<int>(r), beta);
}

/// m-order joint-membership probability without the concordance term,
/// defined for any m >= 2.
inline double hyper_prob_generalized(std::span<const double* const> rows, int r) {
  detail::check_rows(rows, 2);
  const auto order = detail::canonical_order(rows, r);
  return sigmoid(detail::pair_sum_sorted(rows, r, order));
}

inline double hyper_prob_generalized(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2) throw argument_error("hyper_prob_generalized: need at least 2 rows");
  const std::size_t r = rows.front().size();
  std::vector<const double*> ptrs;
  for (const auto& row : rows) {
    if (row.size() != r) throw argument_error("hyper_prob_generalized: mismatched row lengths");
    ptrs.push_back(row.data());
  }
  return hyper_prob_generalized(std::span<const double* const>(ptrs), static_cast<int>(r));
}

/// Brier-score pairwise loss: mean over observed pairs of (y - sigma(zi.zj))^2.
inline double loss_pair(const LatentFactors& Z, const PairObservations& obs, int threads = 1) {
  if (obs.empty()) throw argument_error("loss_pair: no observed pairs");
  if (obs.n > Z.n) throw argument_error("loss_pair: observation indices exceed Z");
  const double inv = 1.0 / static_cast<double>(obs.size());
  const double sum = detail::indexed_sum(obs.size(), threads, [&](std::size_t e) {
    const PairEntry& p = obs.entries[e];
    const double prob = pair_prob(Z.row_span(p.i), Z.row_span(p.j));
    const double d = static_cast<double>(p.y) - prob;
    return d * d;
  });
  return sum * inv;
}

/// Weighted hyperlink loss: (1/|entries|) * sum of w * (y - hyper_prob)^2.
inline double loss_hyper(const LatentFactors& Z, const HyperObservations& obs, double beta, int threads = 1) {
  if (obs.empty()) throw argument_error("loss_hyper: no observed hyperlinks");
  if (obs.n > Z.n) throw argument_error("loss_hyper: observation indices exceed Z");
  const int r = Z.r;
  const double inv = 1.0 / static_cast<double>(obs.size());
  const double sum = detail::indexed_sum(obs.size(), threads, [&](std::size_t e) {
    std::array<const double*, kMaxOrder> rows{};
    const auto tuple = obs.tuple(e);
    for (std::size_t a = 0; a < tuple.size(); ++a) rows[a] = Z.row(tuple[a]);
    const double prob = hyper_prob(std::span<const double* const>(rows.data(), tuple.size()), r, beta);
    const double d = static_cast<double>(obs.labels[e]) - prob;
    return obs.weights[e] * d * d;
  });
  return sum * inv;
}

/// Joint objective: hyperlink loss + pairwise loss + lambda * ||Z||^2.
/// An empty observation set contributes zero; both empty is an error.
inline double loss_joint(const LatentFactors& Z, const PairObservations& pair_obs,
                         const HyperObservations& hyper_obs, const ModelConfig& config) {
  config.validate();
  if (pair_obs.empty() && hyper_obs.empty())
    throw argument_error("loss_joint: both observation sets are empty");
  double loss = 0.0;
  if (!hyper_obs.empty()) loss += loss_hyper(Z, hyper_obs, config.beta, config.optimizer.threads);
  if (!pair_obs.empty()) loss += loss_pair(Z, pair_obs, config.optimizer.threads);
  if (config.lambda != 0.0) loss += config.lambda * Z.squared_norm();
  return loss;
}

}  // namespace hyperembed::model
