#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyperembed/errors.hpp"
#include "hyperembed/model.hpp"

namespace hyperembed::eval {

/// AUC via the Mann-Whitney rank statistic with midranks for ties. The
/// doubled rank sum is an exact integer, so the result matches all-pairs
/// counting bit for bit.
inline double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw argument_error("auc: scores and labels differ in length");
  if (scores.empty()) throw argument_error("auc: empty input");
  for (double s : scores)
    if (std::isnan(s)) throw argument_error("auc: NaN score");

  const std::size_t total = scores.size();
  std::size_t positives = 0;
  for (auto y : labels) {
    if (y > 1) throw argument_error("auc: labels must be 0 or 1");
    positives += y;
  }
  const std::size_t negatives = total - positives;
  if (positives == 0 || negatives == 0) throw numeric_error("auc: both classes must be present");

  std::vector<std::uint32_t> order(total);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return scores[a] < scores[b]; });

  // doubled midrank sum over positives: for the tie group occupying 1-based
  // ranks [lo+1, hi], every member contributes (lo + 1 + hi).
  std::uint64_t twice_rank_sum = 0;
  std::size_t lo = 0;
  while (lo < total) {
    std::size_t hi = lo + 1;
    while (hi < total && scores[order[hi]] == scores[order[lo]]) ++hi;
    std::uint64_t group_pos = 0;
    for (std::size_t t = lo; t < hi; ++t) group_pos += labels[order[t]];
    twice_rank_sum += group_pos * static_cast<std::uint64_t>(lo + 1 + hi);
    lo = hi;
  }
  const std::uint64_t twice_u = twice_rank_sum - static_cast<std::uint64_t>(positives) * (positives + 1);
  return static_cast<double>(twice_u) /
         (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

inline double auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  return auc(std::span<const double>(scores), std::span<const std::uint8_t>(labels));
}

/// Splits test indices by ground-truth probability: A1 holds entries with
/// truth in [low, high], A2 the complement.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratify_by_truth(
    std::span<const double> true_prob, double low = 0.2, double high = 0.8) {
  if (low > high) throw argument_error("stratify_by_truth: low must not exceed high");
  std::vector<std::size_t> a1, a2;
  for (std::size_t e = 0; e < true_prob.size(); ++e) {
    const double p = true_prob[e];
    if (std::isnan(p)) throw argument_error("stratify_by_truth: missing truth value");
    (p >= low && p <= high ? a1 : a2).push_back(e);
  }
  return {std::move(a1), std::move(a2)};
}

/// Largest number of observed hyperlinks sharing one observed pair.
inline int overlap_degree_C0(const model::PairObservations& pair_obs,
                             const model::HyperObservations& hyper_obs) {
  if (pair_obs.empty() || hyper_obs.empty()) return 0;
  std::map<std::pair<std::int32_t, std::int32_t>, int> counts;
  for (const auto& p : pair_obs.entries) counts[{p.i, p.j}] = 0;
  const int m = hyper_obs.m;
  for (std::size_t e = 0; e < hyper_obs.size(); ++e) {
    const auto tuple = hyper_obs.tuple(e);
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b) {
        auto it = counts.find({tuple[a], tuple[b]});
        if (it != counts.end()) ++it->second;
      }
  }
  int best = 0;
  for (const auto& [key, c] : counts) best = std::max(best, c);
  return best;
}

struct EvalRow {
  std::string set;
  std::size_t count = 0;
  std::optional<double> auc;
  std::optional<double> mse;
};

/// Named per-test-set results, kept sorted by set name.
struct EvalReport {
  std::vector<EvalRow> rows;

  const EvalRow* find(const std::string& name) const {
    for (const auto& row : rows)
      if (row.set == name) return &row;
    return nullptr;
  }

  std::optional<double> auc_of(const std::string& name) const {
    const EvalRow* row = find(name);
    return row ? row->auc : std::nullopt;
  }

  void sort() {
    std::sort(rows.begin(), rows.end(), [](const EvalRow& a, const EvalRow& b) { return a.set < b.set; });
  }
};

namespace detail {

inline void add_set_rows(EvalReport& report, const std::string& name,
                         const std::vector<double>& scores, const std::vector<std::uint8_t>& labels,
                         const std::vector<double>* truth, double low, double high) {
  EvalRow overall;
  overall.set = name;
  overall.count = scores.size();
  try {
    overall.auc = auc(scores, labels);
  } catch (const numeric_error&) {
    // single-class set: recorded without an AUC value
  }
  if (truth) {
    double sq = 0.0;
    for (std::size_t e = 0; e < scores.size(); ++e) {
      const double d = scores[e] - (*truth)[e];
      sq += d * d;
    }
    overall.mse = sq / static_cast<double>(scores.size());
  }
  report.rows.push_back(overall);

  if (!truth) return;
  auto [a1, a2] = stratify_by_truth(std::span<const double>(*truth), low, high);
  const std::pair<std::string, std::vector<std::size_t>*> strata[] = {{name + "_A1", &a1}, {name + "_A2", &a2}};
  for (const auto& [suffix, idx] : strata) {
    EvalRow row;
    row.set = suffix;
    row.count = idx->size();
    if (!idx->empty()) {
      std::vector<double> s;
      std::vector<std::uint8_t> y;
      s.reserve(idx->size());
      y.reserve(idx->size());
      for (std::size_t e : *idx) {
        s.push_back(scores[e]);
        y.push_back(labels[e]);
      }
      try {
        row.auc = auc(s, y);
      } catch (const numeric_error&) {
      }
    }
    report.rows.push_back(row);
  }
}

}  // namespace detail

/// Scores every test entry with the model probabilities and reports per-set
/// AUC; with ground truth available also A1/A2-stratified AUCs and the MSE
/// of predicted probabilities.
inline EvalReport evaluate(const model::LatentFactors& Z, double beta,
                           const model::PairObservations& test_pair,
                           const model::HyperObservations& test_hyper,
                           const std::vector<double>* pair_truth = nullptr,
                           const std::vector<double>* hyper_truth = nullptr,
                           double low = 0.2, double high = 0.8) {
  if (test_pair.empty() && test_hyper.empty())
    throw argument_error("evaluate: both test sets are empty");
  if (pair_truth && pair_truth->size() != test_pair.size())
    throw argument_error("evaluate: pair truth size mismatch");
  if (hyper_truth && hyper_truth->size() != test_hyper.size())
    throw argument_error("evaluate: hyper truth size mismatch");

  EvalReport report;
  if (!test_pair.empty()) {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    scores.reserve(test_pair.size());
    for (const auto& p : test_pair.entries) {
      scores.push_back(model::pair_prob(Z.row_span(p.i), Z.row_span(p.j)));
      labels.push_back(p.y);
    }
    detail::add_set_rows(report, "pair", scores, labels, pair_truth, low, high);
  }
  if (!test_hyper.empty()) {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    scores.reserve(test_hyper.size());
    std::array<const double*, model::kMaxOrder> rows{};
    for (std::size_t e = 0; e < test_hyper.size(); ++e) {
      const auto tuple = test_hyper.tuple(e);
      for (std::size_t a = 0; a < tuple.size(); ++a) rows[a] = Z.row(tuple[a]);
      scores.push_back(model::hyper_prob(std::span<const double* const>(rows.data(), tuple.size()), Z.r, beta));
      labels.push_back(test_hyper.labels[e]);
    }
    detail::add_set_rows(report, "hyper", scores, labels, hyper_truth, low, high);
  }
  report.sort();
  return report;
}

}  // namespace hyperembed::eval
