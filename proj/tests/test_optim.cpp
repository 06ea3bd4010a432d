#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "hyperembed/optim.hpp"

#include "helpers.hpp"

using namespace hyperembed;
using namespace hyperembed::optim;
using hyperembed::model::HyperObservations;
using hyperembed::model::LatentFactors;
using hyperembed::model::ModelConfig;
using hyperembed::model::PairObservations;

namespace {

std::vector<double> central_difference_grad(const LatentFactors& Z, const PairObservations& pairs,
                                            const HyperObservations& hyper, const ModelConfig& cfg,
                                            const ObjectiveSpec& spec, double h) {
  std::vector<double> grad(Z.values.size());
  LatentFactors probe = Z;
  for (std::size_t k = 0; k < Z.values.size(); ++k) {
    probe.values[k] = Z.values[k] + h;
    const double fp = joint_objective(probe, pairs, hyper, cfg, spec);
    probe.values[k] = Z.values[k] - h;
    const double fm = joint_objective(probe, pairs, hyper, cfg, spec);
    probe.values[k] = Z.values[k];
    grad[k] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace

TEST_CASE("grad_joint matches central finite differences") {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 5 + static_cast<int>(rng() % 4);
    const int r = 1 + static_cast<int>(rng() % 3);
    auto Z = testutil::random_factors(n, r, rng);
    auto pairs = testutil::random_pairs(n, 5, rng);
    auto hyper = testutil::random_hyper(n, 3, 2, rng);

    ModelConfig cfg;
    cfg.r = r;
    cfg.beta = 1.0 + 2.0 * std::abs(u(rng));
    cfg.lambda = (trial % 2) ? 0.1 : 0.0;

    for (const ObjectiveSpec spec : {ObjectiveSpec{}, ObjectiveSpec{false, true, true}}) {
      const auto analytic = grad_objective(Z, pairs, hyper, cfg, spec);
      const auto numeric = central_difference_grad(Z, pairs, hyper, cfg, spec, 1e-5);
      for (std::size_t k = 0; k < analytic.size(); ++k) {
        if (std::fabs(Z.values[k]) <= 1e-3) continue;
        CHECK(std::fabs(analytic[k] - numeric[k]) <= 1e-8 + 1e-5 * std::fabs(numeric[k]));
      }
    }
  }
}

TEST_CASE("gradient at the symmetric zero point vanishes") {
  LatentFactors Z(6, 2);
  std::mt19937_64 rng(67);
  auto pairs = testutil::random_pairs(6, 5, rng);
  auto hyper = testutil::random_hyper(6, 3, 2, rng);
  ModelConfig cfg;
  cfg.r = 2;
  cfg.lambda = 0.0;
  for (double g : grad_joint(Z, pairs, hyper, cfg)) CHECK(g == 0.0);
}

TEST_CASE("ridge-only gradient on untouched rows") {
  std::mt19937_64 rng(71);
  auto Z = testutil::random_factors(4, 2, rng);
  // a single saturated pair: the residual and the logistic slope both vanish
  Z.at(0, 0) = 8.0;
  Z.at(1, 0) = 8.0;
  Z.at(0, 1) = 0.0;
  Z.at(1, 1) = 0.0;
  auto pairs = PairObservations::from_entries(4, {{0, 1, 1}});
  HyperObservations no_hyper(4, 3);
  ModelConfig cfg;
  cfg.r = 2;
  cfg.lambda = 0.3;
  const auto grad = grad_joint(Z, pairs, no_hyper, cfg);
  for (int i : {2, 3})
    for (int k : {0, 1})
      CHECK(grad[i * 2 + k] == 2.0 * cfg.lambda * Z.at(i, k));
  for (int i : {0, 1})
    for (int k : {0, 1})
      CHECK(grad[i * 2 + k] == Catch::Approx(2.0 * cfg.lambda * Z.at(i, k)).margin(1e-9));
}

TEST_CASE("fit drives a single pair to low loss") {
  auto pairs = PairObservations::from_entries(4, {{0, 1, 1}});
  HyperObservations no_hyper(4, 3);
  ModelConfig cfg;
  cfg.r = 1;
  cfg.lambda = 0.0;
  cfg.optimizer.max_iters = 2000;
  auto [Z, report] = fit(pairs, no_hyper, cfg);
  CHECK(report.loss_trajectory.back() < 0.01);
  CHECK(report.loss_trajectory.back() ==
        Catch::Approx(joint_objective(Z, pairs, no_hyper, cfg)).margin(1e-10));
}

TEST_CASE("fit rejects empty observations") {
  PairObservations no_pairs(4);
  HyperObservations no_hyper(4, 3);
  ModelConfig cfg;
  CHECK_THROWS_AS(fit(no_pairs, no_hyper, cfg), argument_error);
  CHECK_THROWS_AS(fit_variant(Variant::PLE, no_pairs, no_hyper, cfg), argument_error);
  CHECK_THROWS_AS(fit_variant(Variant::HLE, no_pairs, no_hyper, cfg), argument_error);
}

TEST_CASE("fit is deterministic under a fixed seed") {
  std::mt19937_64 rng(73);
  auto pairs = testutil::random_pairs(8, 12, rng);
  auto hyper = testutil::random_hyper(8, 3, 4, rng);
  ModelConfig cfg;
  cfg.r = 2;
  cfg.optimizer.max_iters = 200;
  cfg.optimizer.seed = 99;
  auto [Z1, r1] = fit(pairs, hyper, cfg);
  auto [Z2, r2] = fit(pairs, hyper, cfg);
  CHECK(Z1.values == Z2.values);
  CHECK(r1.loss_trajectory == r2.loss_trajectory);
  CHECK(r1.iterations == r2.iterations);
  CHECK(r1.final_grad_norm == r2.final_grad_norm);
  CHECK(r1.converged == r2.converged);
}

TEST_CASE("divergence raises fit_error with the last finite state") {
  std::mt19937_64 rng(79);
  auto pairs = testutil::random_pairs(4, 3, rng);
  HyperObservations no_hyper(4, 3);
  ModelConfig cfg;
  cfg.r = 2;
  cfg.lambda = 1.0;
  cfg.cap = 1e200;
  cfg.optimizer.init_scale = 1e160;  // ||Z||^2 overflows immediately
  try {
    fit(pairs, no_hyper, cfg);
    FAIL("expected fit_error");
  } catch (const fit_error& e) {
    CHECK(e.last_finite.n == 4);
    CHECK_FALSE(e.report.loss_trajectory.empty());
  }
}

TEST_CASE("JLE with no hyperlinks reproduces PLE exactly") {
  std::mt19937_64 rng(83);
  auto pairs = testutil::random_pairs(7, 10, rng);
  HyperObservations no_hyper(7, 3);
  ModelConfig cfg;
  cfg.r = 2;
  cfg.lambda = 0.0;
  cfg.optimizer.max_iters = 150;
  auto [Zj, rj] = fit_variant(Variant::JLE, pairs, no_hyper, cfg);
  auto [Zp, rp] = fit_variant(Variant::PLE, pairs, no_hyper, cfg);
  CHECK(Zj.values == Zp.values);
  CHECK(rj.loss_trajectory == rp.loss_trajectory);
}

TEST_CASE("HLE objective equals the hyper loss under sign agreement") {
  std::mt19937_64 rng(89);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  LatentFactors Z(6, 2);
  for (double& v : Z.values) v = u(rng);  // all positive: CP == signed f
  auto hyper = testutil::random_hyper(6, 3, 5, rng);
  PairObservations no_pairs(6);
  ModelConfig cfg;
  cfg.r = 2;
  cfg.beta = 2.0;
  cfg.lambda = 0.0;
  const ObjectiveSpec hle{false, true, true};
  CHECK(joint_objective(Z, no_pairs, hyper, cfg, hle) ==
        Catch::Approx(model::loss_hyper(Z, hyper, cfg.beta)).epsilon(1e-13));
}

TEST_CASE("returned factors satisfy the projection bound") {
  std::mt19937_64 rng(97);
  auto pairs = testutil::random_pairs(6, 9, rng);
  auto hyper = testutil::random_hyper(6, 3, 3, rng);
  ModelConfig cfg;
  cfg.r = 2;
  cfg.cap = 0.3;
  cfg.optimizer.max_iters = 300;
  auto [Z, report] = fit(pairs, hyper, cfg);
  for (double v : Z.values) CHECK(std::fabs(v) <= 0.3);
}

TEST_CASE("objective decreases on successful fits") {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 6 + static_cast<int>(rng() % 4);
    auto pairs = testutil::random_pairs(n, 2 * n, rng);
    auto hyper = testutil::random_hyper(n, 3, n / 2, rng);
    ModelConfig cfg;
    cfg.r = 2;
    cfg.optimizer.max_iters = 400;
    cfg.optimizer.seed = 1000 + trial;
    auto [Z, report] = fit(pairs, hyper, cfg);
    const auto& tr = report.loss_trajectory;
    REQUIRE(tr.size() >= 20);
    double head = 0.0, tail = 0.0;
    for (int k = 0; k < 10; ++k) {
      head += tr[k];
      tail += tr[tr.size() - 1 - k];
    }
    CHECK(tail <= head);
  }
}

TEST_CASE("tune_lambda grid behavior") {
  std::mt19937_64 rng(103);
  auto train_pairs = testutil::random_pairs(10, 20, rng);
  auto train_hyper = testutil::random_hyper(10, 3, 5, rng);
  auto valid_pairs = testutil::random_pairs(10, 12, rng);
  auto valid_hyper = testutil::random_hyper(10, 3, 4, rng);
  ModelConfig cfg;
  cfg.r = 2;
  cfg.optimizer.max_iters = 120;

  auto single = tune_lambda({0.25}, train_pairs, train_hyper, valid_pairs, valid_hyper, cfg);
  CHECK(single.best_lambda == 0.25);
  CHECK(single.table.size() == 1);

  auto dup = tune_lambda({0.1, 0.1, 0.4}, train_pairs, train_hyper, valid_pairs, valid_hyper, cfg);
  auto dedup = tune_lambda({0.1, 0.4}, train_pairs, train_hyper, valid_pairs, valid_hyper, cfg);
  CHECK(dup.best_lambda == dedup.best_lambda);
  CHECK(dup.table == dedup.table);

  auto grid = tune_lambda({0.0, 0.2, 1.0}, train_pairs, train_hyper, valid_pairs, valid_hyper, cfg);
  double best_score = -1.0;
  for (const auto& [lam, score] : grid.table)
    if (lam == grid.best_lambda) best_score = score;
  for (const auto& [lam, score] : grid.table) CHECK(best_score >= score);

  CHECK_THROWS_AS(tune_lambda({}, train_pairs, train_hyper, valid_pairs, valid_hyper, cfg),
                  argument_error);
  CHECK_THROWS_AS(tune_lambda({1.5}, train_pairs, train_hyper, valid_pairs, valid_hyper, cfg),
                  argument_error);
}
