#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "hyperembed/eval.hpp"

#include "helpers.hpp"

using namespace hyperembed;
using namespace hyperembed::eval;
using hyperembed::model::HyperObservations;
using hyperembed::model::LatentFactors;
using hyperembed::model::PairObservations;

namespace {

// all-pairs counting oracle, ties worth one half
double auc_brute_force(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
  std::uint64_t wins2 = 0, pairs = 0;
  for (std::size_t p = 0; p < scores.size(); ++p) {
    if (!labels[p]) continue;
    for (std::size_t q = 0; q < scores.size(); ++q) {
      if (labels[q]) continue;
      ++pairs;
      if (scores[p] > scores[q]) wins2 += 2;
      else if (scores[p] == scores[q]) wins2 += 1;
    }
  }
  return static_cast<double>(wins2) / (2.0 * static_cast<double>(pairs));
}

}  // namespace

TEST_CASE("auc basic values") {
  CHECK(auc({0.9, 0.1}, {1, 0}) == 1.0);
  CHECK(auc({0.5, 0.5}, {1, 0}) == 0.5);
  CHECK(auc({0.1, 0.9}, {1, 0}) == 0.0);
  CHECK_THROWS_AS(auc({0.1, 0.9}, {1, 1}), numeric_error);
  CHECK_THROWS_AS(auc({0.1}, {1, 0}), argument_error);
}

TEST_CASE("auc matches the all-pairs oracle exactly") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> quantize(0, 8);
  for (int trial = 0; trial < 100; ++trial) {
    const int len = 20 + static_cast<int>(rng() % 300);
    std::vector<double> scores(len);
    std::vector<std::uint8_t> labels(len);
    const bool with_ties = (trial % 2) == 0;
    bool has0 = false, has1 = false;
    for (int e = 0; e < len; ++e) {
      scores[e] = with_ties ? quantize(rng) / 8.0 : u(rng);
      labels[e] = static_cast<std::uint8_t>(rng() % 2);
      (labels[e] ? has1 : has0) = true;
    }
    if (!has0 || !has1) {
      labels[0] = 0;
      labels[1] = 1;
    }
    const double fast = auc(scores, labels);
    const double brute = auc_brute_force(scores, labels);
    CHECK(std::fabs(fast - brute) <= 1e-12);
  }
}

TEST_CASE("auc invariances") {
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int len = 30;
    std::vector<double> scores(len);
    std::vector<std::uint8_t> labels(len), flipped(len);
    for (int e = 0; e < len; ++e) {
      scores[e] = u(rng);
      labels[e] = static_cast<std::uint8_t>(rng() % 2);
      flipped[e] = static_cast<std::uint8_t>(1 - labels[e]);
    }
    labels[0] = 0;
    labels[1] = 1;
    flipped[0] = 1;
    flipped[1] = 0;

    std::vector<double> transformed(len);
    for (int e = 0; e < len; ++e) transformed[e] = std::exp(scores[e]);  // strictly increasing
    CHECK(auc(transformed, labels) == auc(scores, labels));
    CHECK(auc(scores, labels) + auc(scores, flipped) == 1.0);
  }
}

TEST_CASE("stratify_by_truth partitions") {
  std::vector<double> truth{0.5, 0.9, 0.2, 0.8, 0.05};
  auto [a1, a2] = stratify_by_truth(truth);
  CHECK(a1 == std::vector<std::size_t>{0, 2, 3});
  CHECK(a2 == std::vector<std::size_t>{1, 4});
  CHECK(a1.size() + a2.size() == truth.size());

  std::vector<double> with_nan{0.5, std::nan("")};
  CHECK_THROWS_AS(stratify_by_truth(with_nan), argument_error);
  CHECK_THROWS_AS(stratify_by_truth(truth, 0.9, 0.1), argument_error);
}

TEST_CASE("overlap_degree_C0") {
  auto pairs = PairObservations::from_entries(6, {{1, 2, 1}, {0, 1, 0}, {3, 4, 1}});
  HyperObservations empty(6, 3);
  CHECK(overlap_degree_C0(pairs, empty) == 0);

  HyperObservations hyper(6, 3);
  hyper.add(std::vector<std::int32_t>{1, 2, 3}, 1);
  hyper.add(std::vector<std::int32_t>{1, 2, 4}, 0);
  CHECK(overlap_degree_C0(pairs, hyper) == 2);
}

TEST_CASE("overlap_degree_C0 vs exhaustive oracle, bound, monotonicity") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 6 + static_cast<int>(rng() % 6);
    auto pairs = testutil::random_pairs(n, 2 * n, rng);
    auto hyper = testutil::random_hyper(n, 3, n, rng);

    // oracle: count per observed pair by scanning every tuple
    int oracle = 0;
    for (const auto& p : pairs.entries) {
      int c = 0;
      for (std::size_t e = 0; e < hyper.size(); ++e) {
        const auto t = hyper.tuple(e);
        bool has_i = false, has_j = false;
        for (auto v : t) {
          has_i |= (v == p.i);
          has_j |= (v == p.j);
        }
        if (has_i && has_j) ++c;
      }
      oracle = std::max(oracle, c);
    }
    const int got = overlap_degree_C0(pairs, hyper);
    CHECK(got == oracle);

    const long bound = std::min<long>((static_cast<long>(n) - 2), static_cast<long>(hyper.size()));
    CHECK(got >= 0);
    CHECK(got <= bound);

    // monotone under adding hyper observations
    HyperObservations partial(n, 3);
    for (std::size_t e = 0; e + 1 < hyper.size(); ++e)
      partial.add(hyper.tuple(e), hyper.labels[e], hyper.weights[e]);
    if (!partial.empty()) CHECK(overlap_degree_C0(pairs, partial) <= got);
  }
}

TEST_CASE("evaluate reports per-set rows") {
  std::mt19937_64 rng(53);
  auto Z = testutil::random_factors(8, 2, rng);

  auto pairs = testutil::random_pairs(8, 10, rng);
  HyperObservations empty(8, 3);
  auto report = evaluate(Z, 2.0, pairs, empty);
  CHECK(report.rows.size() == 1);
  CHECK(report.rows[0].set == "pair");
  CHECK(report.rows[0].count == pairs.size());

  // scores equal to truth: reported MSE is zero and stratified rows appear
  std::vector<double> truth;
  for (const auto& p : pairs.entries)
    truth.push_back(hyperembed::model::pair_prob(Z.row_span(p.i), Z.row_span(p.j)));
  report = evaluate(Z, 2.0, pairs, empty, &truth);
  REQUIRE(report.rows.size() == 3);
  CHECK(report.find("pair") != nullptr);
  CHECK(report.find("pair_A1") != nullptr);
  CHECK(report.find("pair_A2") != nullptr);
  CHECK(report.find("pair")->mse.has_value());
  CHECK(*report.find("pair")->mse == 0.0);

  // single-class set: row recorded without AUC
  auto single = PairObservations::from_entries(8, {{0, 1, 1}, {2, 3, 1}});
  report = evaluate(Z, 2.0, single, empty);
  CHECK(report.rows[0].count == 2);
  CHECK_FALSE(report.rows[0].auc.has_value());

  PairObservations no_pairs(8);
  CHECK_THROWS_AS(evaluate(Z, 2.0, no_pairs, empty), argument_error);
}
