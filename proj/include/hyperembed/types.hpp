#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hyperembed/errors.hpp"

namespace hyperembed::model {

/// Node embeddings Z: an n x r row-major matrix, row i is the latent vector
/// of node i. Entries are kept finite; the fitting loop additionally projects
/// them onto [-cap, +cap].
struct LatentFactors {
  int n = 0;
  int r = 0;
  std::vector<double> values;

  LatentFactors() = default;
  LatentFactors(int n_, int r_) : n(n_), r(r_) {
    if (n_ <= 0 || r_ <= 0) throw argument_error("LatentFactors: n and r must be positive");
    values.assign(static_cast<std::size_t>(n_) * r_, 0.0);
  }

  double* row(int i) { return values.data() + static_cast<std::size_t>(i) * r; }
  const double* row(int i) const { return values.data() + static_cast<std::size_t>(i) * r; }
  std::span<const double> row_span(int i) const { return {row(i), static_cast<std::size_t>(r)}; }

  double& at(int i, int k) { return values[static_cast<std::size_t>(i) * r + k]; }
  double at(int i, int k) const { return values[static_cast<std::size_t>(i) * r + k]; }

  bool all_finite() const {
    for (double v : values)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double squared_norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return s;
  }

  void clamp_entries(double cap) {
    for (double& v : values) v = std::clamp(v, -cap, cap);
  }
};

struct PairEntry {
  std::int32_t i = 0;
  std::int32_t j = 0;
  std::uint8_t y = 0;
};

/// Observed pairwise link statuses. Absence of a pair from `entries` encodes
/// the unobserved state; only observed statuses are stored.
struct PairObservations {
  int n = 0;
  std::vector<PairEntry> entries;

  PairObservations() = default;
  explicit PairObservations(int n_) : n(n_) {
    if (n_ <= 0) throw argument_error("PairObservations: n must be positive");
  }

  /// Validating constructor: canonicalizes each entry to i < j, rejects
  /// self-loops, out-of-range indices, labels outside {0,1} and duplicates.
  static PairObservations from_entries(int n, std::vector<PairEntry> raw) {
    PairObservations obs(n);
    obs.entries.reserve(raw.size());
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(raw.size() * 2);
    for (PairEntry e : raw) {
      if (e.i == e.j) throw argument_error("PairObservations: self-loop");
      if (e.i > e.j) std::swap(e.i, e.j);
      if (e.i < 0 || e.j >= n) throw argument_error("PairObservations: index out of range");
      if (e.y > 1) throw argument_error("PairObservations: label must be 0 or 1");
      const std::uint64_t key = (static_cast<std::uint64_t>(e.i) << 32) | static_cast<std::uint32_t>(e.j);
      if (!seen.insert(key).second) throw argument_error("PairObservations: duplicate pair");
      obs.entries.push_back(e);
    }
    return obs;
  }

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

namespace detail {

/// Exact duplicate detection for node tuples of arbitrary order: hash bucket
/// plus full comparison on collision.
class TupleKeySet {
 public:
  bool insert(std::span<const std::int32_t> tuple, const std::vector<std::int32_t>& store,
              std::size_t offset) {
    const std::uint64_t h = hash(tuple);
    auto [it, fresh] = buckets_.try_emplace(h);
    if (!fresh) {
      for (std::size_t off : it->second) {
        if (std::equal(tuple.begin(), tuple.end(), store.begin() + off)) return false;
      }
    }
    it->second.push_back(offset);
    return true;
  }

  bool contains(std::span<const std::int32_t> tuple, const std::vector<std::int32_t>& store) const {
    auto it = buckets_.find(hash(tuple));
    if (it == buckets_.end()) return false;
    for (std::size_t off : it->second) {
      if (std::equal(tuple.begin(), tuple.end(), store.begin() + off)) return true;
    }
    return false;
  }

  void clear() { buckets_.clear(); }

 private:
  static std::uint64_t hash(std::span<const std::int32_t> tuple) {
    std::uint64_t h = 1469598103934665603ull;
    for (std::int32_t v : tuple) {
      h ^= static_cast<std::uint32_t>(v);
      h *= 1099511628211ull;
    }
    return h;
  }

  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets_;
};

}  // namespace detail

/// Observed m-order hyperlink statuses, stored flat: `nodes` holds m sorted
/// indices per entry. Tuples are canonicalized ascending on insertion.
struct HyperObservations {
  int n = 0;
  int m = 0;
  std::vector<std::int32_t> nodes;
  std::vector<std::uint8_t> labels;
  std::vector<double> weights;

  HyperObservations() = default;
  HyperObservations(int n_, int m_) : n(n_), m(m_) {
    if (n_ <= 0) throw argument_error("HyperObservations: n must be positive");
    if (m_ < 3) throw argument_error("HyperObservations: order m must be at least 3");
  }

  void add(std::span<const std::int32_t> tuple, int y, double w = 1.0) {
    if (static_cast<int>(tuple.size()) != m) throw argument_error("HyperObservations: wrong tuple arity");
    if (y != 0 && y != 1) throw argument_error("HyperObservations: label must be 0 or 1");
    if (!(w > 0.0)) throw argument_error("HyperObservations: weight must be positive");
    const std::size_t base = nodes.size();
    nodes.insert(nodes.end(), tuple.begin(), tuple.end());
    std::sort(nodes.begin() + base, nodes.end());
    for (int k = 0; k < m; ++k) {
      const std::int32_t v = nodes[base + k];
      if (v < 0 || v >= n) {
        nodes.resize(base);
        throw argument_error("HyperObservations: index out of range");
      }
      if (k > 0 && nodes[base + k - 1] == v) {
        nodes.resize(base);
        throw argument_error("HyperObservations: repeated index inside tuple");
      }
    }
    if (!key_set_.insert({nodes.data() + base, static_cast<std::size_t>(m)}, nodes, base)) {
      nodes.resize(base);
      throw argument_error("HyperObservations: duplicate tuple");
    }
    labels.push_back(static_cast<std::uint8_t>(y));
    weights.push_back(w);
  }

  bool contains(std::span<const std::int32_t> sorted_tuple) const {
    return key_set_.contains(sorted_tuple, nodes);
  }

  std::span<const std::int32_t> tuple(std::size_t e) const {
    return {nodes.data() + e * m, static_cast<std::size_t>(m)};
  }

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }

 private:
  detail::TupleKeySet key_set_;
};

/// Optimizer settings for the adaptive first-order fitting loop.
struct OptimizerOptions {
  double step = 0.01;
  double decay1 = 0.9;
  double decay2 = 0.999;
  double eps = 1e-8;
  int max_iters = 5000;
  double tol = 1e-5;
  std::uint64_t seed = 1;
  double init_scale = 0.5;
  int threads = 1;
};

struct ModelConfig {
  int r = 5;
  double beta = 3.0;   // concordance weight in the hyperlink logit
  double lambda = 0.0; // ridge penalty on ||Z||^2
  double cap = 10.0;   // entry bound enforced by projection
  OptimizerOptions optimizer;

  void validate() const {
    if (r <= 0) throw argument_error("ModelConfig: r must be positive");
    if (beta < 1.0) throw argument_error("ModelConfig: beta must be >= 1");
    if (lambda < 0.0) throw argument_error("ModelConfig: lambda must be >= 0");
    if (!(cap > 0.0)) throw argument_error("ModelConfig: cap must be positive");
    if (optimizer.threads < 1) throw argument_error("ModelConfig: threads must be >= 1");
    if (optimizer.max_iters < 0) throw argument_error("ModelConfig: max_iters must be >= 0");
  }
};

}  // namespace hyperembed::model
