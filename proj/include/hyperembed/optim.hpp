#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <random>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "hyperembed/errors.hpp"
#include "hyperembed/eval.hpp"
#include "hyperembed/model.hpp"
#include "hyperembed/types.hpp"

namespace hyperembed::optim {

using model::HyperObservations;
using model::LatentFactors;
using model::ModelConfig;
using model::PairObservations;

struct FitReport {
  int iterations = 0;
  std::vector<double> loss_trajectory;
  double final_grad_norm = 0.0;
  bool converged = false;
  double elapsed_seconds = 0.0;
};

/// Divergence carries the last finite iterate so callers can salvage it.
class fit_error : public numeric_error {
 public:
  fit_error(std::string msg, LatentFactors last, FitReport report)
      : numeric_error(std::move(msg)), last_finite(std::move(last)), report(std::move(report)) {}
  LatentFactors last_finite;
  FitReport report;
};

enum class Variant { PLE, HLE, JLE };

/// Which loss terms are active and which concordance the hyper logit uses.
/// HLE swaps the sign-adjusted f for the plain symmetric CP product.
struct ObjectiveSpec {
  bool use_pair = true;
  bool use_hyper = true;
  bool cp_concordance = false;

  static ObjectiveSpec for_variant(Variant v) {
    switch (v) {
      case Variant::PLE: return {true, false, false};
      case Variant::HLE: return {false, true, true};
      default: return {true, true, false};
    }
  }
};

namespace detail {

inline double hyper_logit(const LatentFactors& Z, std::span<const std::int32_t> tuple, double beta,
                          bool cp) {
  const int m = static_cast<int>(tuple.size());
  const int r = Z.r;
  double pair_sum = 0.0;
  for (int a = 0; a < m; ++a) {
    const double* za = Z.row(tuple[a]);
    for (int b = a + 1; b < m; ++b) {
      const double* zb = Z.row(tuple[b]);
      double dot = 0.0;
      for (int k = 0; k < r; ++k) dot += za[k] * zb[k];
      pair_sum += dot;
    }
  }
  double conc = 0.0;
  for (int k = 0; k < r; ++k) {
    bool all_nonneg = true, all_neg = true;
    double prod = 1.0;
    for (int a = 0; a < m; ++a) {
      const double v = Z.at(tuple[a], k);
      if (v >= 0.0) all_neg = false;
      else all_nonneg = false;
      prod *= v;
    }
    if (cp) conc += prod;
    else conc += (all_nonneg || all_neg) ? std::fabs(prod) : -std::fabs(prod);
  }
  return pair_sum + beta * conc;
}

/// Accumulates the gradient of one hyper entry into grad. scale already
/// carries the loss derivative d/dlogit times the entry weight.
inline void accumulate_hyper_grad(const LatentFactors& Z, std::span<const std::int32_t> tuple,
                                  double beta, bool cp, double scale, double* grad) {
  const int m = static_cast<int>(tuple.size());
  const int r = Z.r;
  std::array<double, model::kMaxOrder> coord_vals{};
  for (int k = 0; k < r; ++k) {
    double coord_sum = 0.0;
    bool all_nonneg = true, all_neg = true;
    int zero_count = 0;
    double nonzero_prod = 1.0;
    for (int a = 0; a < m; ++a) {
      const double v = Z.at(tuple[a], k);
      coord_vals[a] = v;
      coord_sum += v;
      if (v >= 0.0) all_neg = false;
      else all_nonneg = false;
      if (v == 0.0) ++zero_count;
      else nonzero_prod *= v;
    }
    const double psi = (all_nonneg || all_neg) ? 1.0 : -1.0;
    for (int a = 0; a < m; ++a) {
      const double v = coord_vals[a];
      // pairwise part: sum of the other rows' k-th entries
      double g = coord_sum - v;
      if (cp) {
        double others;
        if (zero_count == 0) others = nonzero_prod / v;
        else if (zero_count == 1 && v == 0.0) others = nonzero_prod;
        else others = 0.0;
        g += beta * others;
      } else {
        // d/dv of psi*|prod|: sign(v) times the absolute product of the other
        // entries; the subgradient at v == 0 (and with any other zero) is 0
        if (v != 0.0 && zero_count == 0) {
          const double abs_others = std::fabs(nonzero_prod / v);
          g += beta * psi * ((v > 0.0) ? abs_others : -abs_others);
        }
      }
      grad[static_cast<std::size_t>(tuple[a]) * r + k] += scale * g;
    }
  }
}

template <typename PerEntry>
void indexed_grad_accumulate(std::size_t count, int threads, std::size_t grad_len,
                             std::vector<double>& grad, PerEntry&& per_entry) {
  if (threads <= 1 || count < 2048) {
    for (std::size_t e = 0; e < count; ++e) per_entry(e, grad.data());
    return;
  }
  const int chunks = threads;
  const std::size_t step = (count + chunks - 1) / chunks;
  std::vector<std::vector<double>> partial(chunks);
  std::vector<std::thread> pool;
  pool.reserve(chunks);
  for (int c = 0; c < chunks; ++c) {
    const std::size_t lo = std::min(count, c * step);
    const std::size_t hi = std::min(count, lo + step);
    pool.emplace_back([&, c, lo, hi] {
      partial[c].assign(grad_len, 0.0);
      for (std::size_t e = lo; e < hi; ++e) per_entry(e, partial[c].data());
    });
  }
  for (auto& t : pool) t.join();
  for (int c = 0; c < chunks; ++c)
    for (std::size_t k = 0; k < grad_len; ++k) grad[k] += partial[c][k];
}

}  // namespace detail

/// Objective value for a variant; the JLE spec reproduces loss_joint.
inline double joint_objective(const LatentFactors& Z, const PairObservations& pair_obs,
                              const HyperObservations& hyper_obs, const ModelConfig& config,
                              const ObjectiveSpec& spec = {}) {
  config.validate();
  const bool pair_active = spec.use_pair && !pair_obs.empty();
  const bool hyper_active = spec.use_hyper && !hyper_obs.empty();
  if (!pair_active && !hyper_active) throw argument_error("joint_objective: no active observations");
  double loss = 0.0;
  if (hyper_active) {
    if (spec.cp_concordance) {
      const double inv = 1.0 / static_cast<double>(hyper_obs.size());
      loss += inv * model::detail::indexed_sum(hyper_obs.size(), config.optimizer.threads, [&](std::size_t e) {
        const double p = model::sigmoid(detail::hyper_logit(Z, hyper_obs.tuple(e), config.beta, true));
        const double d = static_cast<double>(hyper_obs.labels[e]) - p;
        return hyper_obs.weights[e] * d * d;
      });
    } else {
      loss += model::loss_hyper(Z, hyper_obs, config.beta, config.optimizer.threads);
    }
  }
  if (pair_active) loss += model::loss_pair(Z, pair_obs, config.optimizer.threads);
  if (config.lambda != 0.0) loss += config.lambda * Z.squared_norm();
  return loss;
}

/// Analytic gradient of the variant objective, flattened row-major n x r.
/// At coordinates where the absolute-value concordance is kinked the
/// subgradient value 0 is used.
inline std::vector<double> grad_objective(const LatentFactors& Z, const PairObservations& pair_obs,
                                          const HyperObservations& hyper_obs, const ModelConfig& config,
                                          const ObjectiveSpec& spec = {}) {
  config.validate();
  const bool pair_active = spec.use_pair && !pair_obs.empty();
  const bool hyper_active = spec.use_hyper && !hyper_obs.empty();
  if (!pair_active && !hyper_active) throw argument_error("grad_objective: no active observations");

  const int r = Z.r;
  const std::size_t len = Z.values.size();
  std::vector<double> grad(len, 0.0);
  const int threads = config.optimizer.threads;

  if (pair_active) {
    const double inv = 1.0 / static_cast<double>(pair_obs.size());
    detail::indexed_grad_accumulate(pair_obs.size(), threads, len, grad, [&](std::size_t e, double* g) {
      const auto& p = pair_obs.entries[e];
      const double* zi = Z.row(p.i);
      const double* zj = Z.row(p.j);
      double dot = 0.0;
      for (int k = 0; k < r; ++k) dot += zi[k] * zj[k];
      const double prob = model::sigmoid(dot);
      const double coef = -2.0 * inv * (static_cast<double>(p.y) - prob) * prob * (1.0 - prob);
      double* gi = g + static_cast<std::size_t>(p.i) * r;
      double* gj = g + static_cast<std::size_t>(p.j) * r;
      for (int k = 0; k < r; ++k) {
        gi[k] += coef * zj[k];
        gj[k] += coef * zi[k];
      }
    });
  }
  if (hyper_active) {
    const double inv = 1.0 / static_cast<double>(hyper_obs.size());
    detail::indexed_grad_accumulate(hyper_obs.size(), threads, len, grad, [&](std::size_t e, double* g) {
      const auto tuple = hyper_obs.tuple(e);
      const double logit = detail::hyper_logit(Z, tuple, config.beta, spec.cp_concordance);
      const double prob = model::sigmoid(logit);
      const double scale = -2.0 * inv * hyper_obs.weights[e] *
                           (static_cast<double>(hyper_obs.labels[e]) - prob) * prob * (1.0 - prob);
      detail::accumulate_hyper_grad(Z, tuple, config.beta, spec.cp_concordance, scale, g);
    });
  }
  if (config.lambda != 0.0) {
    for (std::size_t k = 0; k < len; ++k) grad[k] += 2.0 * config.lambda * Z.values[k];
  }
  return grad;
}

/// Gradient of the full joint loss (JLE objective).
inline std::vector<double> grad_joint(const LatentFactors& Z, const PairObservations& pair_obs,
                                      const HyperObservations& hyper_obs, const ModelConfig& config) {
  return grad_objective(Z, pair_obs, hyper_obs, config, {});
}

namespace detail {

inline int resolve_node_count(const PairObservations& pair_obs, const HyperObservations& hyper_obs,
                              const ObjectiveSpec& spec) {
  const bool pair_active = spec.use_pair && !pair_obs.empty();
  const bool hyper_active = spec.use_hyper && !hyper_obs.empty();
  if (pair_active && hyper_active && pair_obs.n != hyper_obs.n)
    throw argument_error("fit: pair and hyper observations disagree on node count");
  if (pair_active) return pair_obs.n;
  if (hyper_active) return hyper_obs.n;
  throw argument_error("fit: no active observations");
}

inline std::pair<LatentFactors, FitReport> fit_loop(LatentFactors Z, const PairObservations& pair_obs,
                                                    const HyperObservations& hyper_obs,
                                                    const ModelConfig& config, const ObjectiveSpec& spec) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& opt = config.optimizer;
  const std::size_t len = Z.values.size();

  FitReport report;
  Z.clamp_entries(config.cap);
  double loss = joint_objective(Z, pair_obs, hyper_obs, config, spec);
  report.loss_trajectory.push_back(loss);
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  if (!std::isfinite(loss)) {
    report.elapsed_seconds = elapsed();
    throw fit_error("fit: non-finite loss at initialization", Z, report);
  }

  std::vector<double> m1(len, 0.0), m2(len, 0.0);
  LatentFactors previous = Z;
  double pow1 = 1.0, pow2 = 1.0;
  for (int t = 1; t <= opt.max_iters; ++t) {
    const std::vector<double> grad = grad_objective(Z, pair_obs, hyper_obs, config, spec);
    double sq = 0.0;
    for (double g : grad) sq += g * g;
    report.final_grad_norm = std::sqrt(sq);
    if (report.final_grad_norm < opt.tol) {
      report.converged = true;
      break;
    }

    previous = Z;
    pow1 *= opt.decay1;
    pow2 *= opt.decay2;
    const double corr1 = 1.0 - pow1;
    const double corr2 = 1.0 - pow2;
    for (std::size_t k = 0; k < len; ++k) {
      m1[k] = opt.decay1 * m1[k] + (1.0 - opt.decay1) * grad[k];
      m2[k] = opt.decay2 * m2[k] + (1.0 - opt.decay2) * grad[k] * grad[k];
      const double mhat = m1[k] / corr1;
      const double vhat = m2[k] / corr2;
      Z.values[k] -= opt.step * mhat / (std::sqrt(vhat) + opt.eps);
    }
    Z.clamp_entries(config.cap);

    loss = joint_objective(Z, pair_obs, hyper_obs, config, spec);
    report.iterations = t;
    report.loss_trajectory.push_back(loss);
    if (!std::isfinite(loss)) {
      report.elapsed_seconds = elapsed();
      throw fit_error("fit: loss diverged to a non-finite value", previous, report);
    }
  }
  report.elapsed_seconds = elapsed();
  return {std::move(Z), std::move(report)};
}

}  // namespace detail

/// Warm-started fit: continues descent from the supplied factors.
inline std::pair<LatentFactors, FitReport> fit_from(const LatentFactors& initial,
                                                    const PairObservations& pair_obs,
                                                    const HyperObservations& hyper_obs,
                                                    const ModelConfig& config,
                                                    const ObjectiveSpec& spec = {}) {
  config.validate();
  const int n = detail::resolve_node_count(pair_obs, hyper_obs, spec);
  if (initial.n != n || initial.r != config.r)
    throw argument_error("fit_from: initial factors have the wrong shape");
  return detail::fit_loop(initial, pair_obs, hyper_obs, config, spec);
}

/// Seeded fit: initializes Z i.i.d. uniform on [-init_scale, +init_scale]
/// and runs bias-corrected adaptive descent with projection onto the cap.
inline std::pair<LatentFactors, FitReport> fit_with_spec(const PairObservations& pair_obs,
                                                         const HyperObservations& hyper_obs,
                                                         const ModelConfig& config,
                                                         const ObjectiveSpec& spec) {
  config.validate();
  const int n = detail::resolve_node_count(pair_obs, hyper_obs, spec);
  LatentFactors Z(n, config.r);
  std::mt19937_64 rng(config.optimizer.seed);
  std::uniform_real_distribution<double> u(-config.optimizer.init_scale, config.optimizer.init_scale);
  for (double& v : Z.values) v = u(rng);
  return detail::fit_loop(std::move(Z), pair_obs, hyper_obs, config, spec);
}

inline std::pair<LatentFactors, FitReport> fit(const PairObservations& pair_obs,
                                               const HyperObservations& hyper_obs,
                                               const ModelConfig& config) {
  return fit_with_spec(pair_obs, hyper_obs, config, {});
}

/// PLE drops the hyper loss, HLE drops the pair loss and uses the CP
/// concordance, JLE fits the full joint objective.
inline std::pair<LatentFactors, FitReport> fit_variant(Variant variant,
                                                       const PairObservations& pair_obs,
                                                       const HyperObservations& hyper_obs,
                                                       const ModelConfig& config) {
  if (variant == Variant::PLE && pair_obs.empty())
    throw argument_error("fit_variant: PLE requires pairwise observations");
  if (variant == Variant::HLE && hyper_obs.empty())
    throw argument_error("fit_variant: HLE requires hyperlink observations");
  return fit_with_spec(pair_obs, hyper_obs, config, ObjectiveSpec::for_variant(variant));
}

/// Mean of the available validation AUCs (pairwise and hyperlink).
inline double combined_validation_auc(const LatentFactors& Z, double beta,
                                      const PairObservations& valid_pair,
                                      const HyperObservations& valid_hyper) {
  const auto report = eval::evaluate(Z, beta, valid_pair, valid_hyper);
  double sum = 0.0;
  int terms = 0;
  for (const char* name : {"pair", "hyper"}) {
    if (auto a = report.auc_of(name)) {
      sum += *a;
      ++terms;
    }
  }
  if (terms == 0) throw numeric_error("validation AUC undefined: single-class sets");
  return sum / terms;
}

struct LambdaTable {
  double best_lambda = 0.0;
  std::vector<std::pair<double, double>> table;  // lambda -> validation AUC
};

/// Grid search for the ridge penalty: one JLE fit per grid value, scored by
/// combined validation AUC; ties break toward the smaller lambda.
inline LambdaTable tune_lambda(std::vector<double> grid, const PairObservations& train_pair,
                               const HyperObservations& train_hyper,
                               const PairObservations& valid_pair,
                               const HyperObservations& valid_hyper, const ModelConfig& config) {
  if (grid.empty()) throw argument_error("tune_lambda: empty grid");
  if (valid_pair.empty() && valid_hyper.empty())
    throw argument_error("tune_lambda: empty validation sets");
  for (double v : grid)
    if (!(v >= 0.0 && v <= 1.0)) throw argument_error("tune_lambda: grid values must lie in [0,1]");
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  LambdaTable out;
  bool any = false;
  double best_auc = -1.0;
  for (double lam : grid) {
    ModelConfig cfg = config;
    cfg.lambda = lam;
    try {
      auto [Z, report] = fit_variant(Variant::JLE, train_pair, train_hyper, cfg);
      const double score = combined_validation_auc(Z, cfg.beta, valid_pair, valid_hyper);
      out.table.emplace_back(lam, score);
      if (!any || score > best_auc) {
        any = true;
        best_auc = score;
        out.best_lambda = lam;
      }
    } catch (const numeric_error&) {
      // diverged or unscoreable at this lambda; skip
    }
  }
  if (!any) throw numeric_error("tune_lambda: every grid point failed");
  return out;
}

}  // namespace hyperembed::optim
