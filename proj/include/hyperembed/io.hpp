#pragma once

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hyperembed/errors.hpp"
#include "hyperembed/eval.hpp"
#include "hyperembed/types.hpp"

namespace hyperembed::io {

using model::HyperObservations;
using model::LatentFactors;
using model::ModelConfig;
using model::PairObservations;

namespace detail {

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

[[noreturn]] inline void fail(const std::string& path, std::size_t line_no, const std::string& what) {
  throw data_error(path + ":" + std::to_string(line_no) + ": " + what);
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open for writing: " + path);
  return out;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open for reading: " + path);
  return in;
}

template <typename Int>
Int parse_int(std::string_view token, const std::string& path, std::size_t line_no) {
  Int value{};
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) fail(path, line_no, "expected an integer, got '" + std::string(token) + "'");
  return value;
}

inline double parse_double(std::string_view token, const std::string& path, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const std::string s(token);
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    fail(path, line_no, "expected a number, got '" + std::string(token) + "'");
  }
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    const std::size_t start = pos;
    while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') ++pos;
    if (pos > start) fields.push_back(line.substr(start, pos - start));
  }
  return fields;
}

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

/// Reads lines, skipping '#' comments; returns false at EOF.
class LineReader {
 public:
  LineReader(std::ifstream& in, const std::string& path) : in_(in), path_(path) {}

  bool next(std::string_view& out) {
    while (std::getline(in_, buffer_)) {
      ++line_no_;
      std::string_view line = strip_cr(buffer_);
      if (!line.empty() && line.front() == '#') continue;
      out = line;
      return true;
    }
    return false;
  }

  std::size_t line_no() const { return line_no_; }
  const std::string& path() const { return path_; }

 private:
  std::ifstream& in_;
  std::string path_;
  std::string buffer_;
  std::size_t line_no_ = 0;
};

inline long expect_header_field(std::string_view field, std::string_view key, const std::string& path,
                                std::size_t line_no) {
  if (field.substr(0, key.size()) != key) fail(path, line_no, "expected header field '" + std::string(key) + "'");
  return parse_int<long>(field.substr(key.size()), path, line_no);
}

}  // namespace detail

/// Pairs file: header `n=<count>`, then `i<TAB>j<TAB>y` records. Comment
/// lines start with '#'. Round trips are lossless.
inline void save_pairs(const std::string& path, const PairObservations& obs) {
  auto out = detail::open_out(path);
  out << "n=" << obs.n << "\n";
  for (const auto& e : obs.entries)
    out << e.i << "\t" << e.j << "\t" << int(e.y) << "\n";
  if (!out) throw data_error("write failed: " + path);
}

inline PairObservations load_pairs(const std::string& path) {
  auto in = detail::open_in(path);
  detail::LineReader reader(in, path);
  std::string_view line;
  if (!reader.next(line)) throw data_error(path + ": missing 'n=' header");
  const long n = detail::expect_header_field(line, "n=", path, reader.line_no());
  if (n <= 0) detail::fail(path, reader.line_no(), "node count must be positive");

  PairObservations obs(static_cast<int>(n));
  std::set<std::pair<int, int>> seen;
  while (reader.next(line)) {
    if (line.empty()) detail::fail(path, reader.line_no(), "blank line");
    const auto fields = detail::split(line, '\t');
    if (fields.size() != 3) detail::fail(path, reader.line_no(), "expected 'i<TAB>j<TAB>y'");
    int i = detail::parse_int<int>(fields[0], path, reader.line_no());
    int j = detail::parse_int<int>(fields[1], path, reader.line_no());
    const int y = detail::parse_int<int>(fields[2], path, reader.line_no());
    if (i == j) detail::fail(path, reader.line_no(), "self-loop");
    if (i > j) std::swap(i, j);
    if (i < 0 || j >= n) detail::fail(path, reader.line_no(), "node index out of range");
    if (y != 0 && y != 1) detail::fail(path, reader.line_no(), "label must be 0 or 1");
    if (!seen.emplace(i, j).second) detail::fail(path, reader.line_no(), "duplicate pair");
    obs.entries.push_back({i, j, static_cast<std::uint8_t>(y)});
  }
  return obs;
}

/// Hyperlinks file: header `n=<count> m=<order>`, then
/// `i1 i2 ... im<TAB>y<TAB>w` with w optional (default 1).
inline void save_hyper(const std::string& path, const HyperObservations& obs) {
  auto out = detail::open_out(path);
  out << "n=" << obs.n << " m=" << obs.m << "\n";
  for (std::size_t e = 0; e < obs.size(); ++e) {
    const auto tuple = obs.tuple(e);
    for (int a = 0; a < obs.m; ++a) {
      if (a) out << ' ';
      out << tuple[a];
    }
    out << "\t" << int(obs.labels[e]) << "\t" << detail::fmt17(obs.weights[e]) << "\n";
  }
  if (!out) throw data_error("write failed: " + path);
}

inline HyperObservations load_hyper(const std::string& path) {
  auto in = detail::open_in(path);
  detail::LineReader reader(in, path);
  std::string_view line;
  if (!reader.next(line)) throw data_error(path + ": missing 'n= m=' header");
  const auto head = detail::split_ws(line);
  if (head.size() != 2) detail::fail(path, reader.line_no(), "expected header 'n=<count> m=<order>'");
  const long n = detail::expect_header_field(head[0], "n=", path, reader.line_no());
  const long m = detail::expect_header_field(head[1], "m=", path, reader.line_no());
  if (n <= 0) detail::fail(path, reader.line_no(), "node count must be positive");
  if (m < 3) detail::fail(path, reader.line_no(), "order must be at least 3");

  HyperObservations obs(static_cast<int>(n), static_cast<int>(m));
  while (reader.next(line)) {
    if (line.empty()) detail::fail(path, reader.line_no(), "blank line");
    const auto fields = detail::split(line, '\t');
    if (fields.size() != 2 && fields.size() != 3)
      detail::fail(path, reader.line_no(), "expected 'i1 i2 ... im<TAB>y[<TAB>w]'");
    const auto idx = detail::split_ws(fields[0]);
    if (static_cast<long>(idx.size()) != m) detail::fail(path, reader.line_no(), "wrong tuple arity");
    std::vector<std::int32_t> tuple;
    tuple.reserve(idx.size());
    for (const auto& tok : idx) tuple.push_back(detail::parse_int<std::int32_t>(tok, path, reader.line_no()));
    const int y = detail::parse_int<int>(fields[1], path, reader.line_no());
    const double w = fields.size() == 3 ? detail::parse_double(fields[2], path, reader.line_no()) : 1.0;
    try {
      obs.add(tuple, y, w);
    } catch (const argument_error& e) {
      detail::fail(path, reader.line_no(), e.what());
    }
  }
  return obs;
}

/// Social circles: possibly overlapping named node groups over a densely
/// reindexed node set; raw_ids maps dense index -> original id.
struct CirclesData {
  int n = 0;
  std::vector<std::pair<std::string, std::vector<int>>> circles;
  std::vector<long long> raw_ids;
};

/// Circles file: `circleName<TAB>node node ...` per line (the public
/// ego-network convention). Node ids are remapped to dense 0-based indices.
inline CirclesData load_circles(const std::string& path) {
  auto in = detail::open_in(path);
  detail::LineReader reader(in, path);
  std::string_view line;

  std::vector<std::pair<std::string, std::vector<long long>>> raw_circles;
  std::set<std::string> names;
  std::set<long long> ids;
  while (reader.next(line)) {
    if (line.empty()) detail::fail(path, reader.line_no(), "blank line");
    const auto fields = detail::split(line, '\t');
    if (fields.size() < 2) detail::fail(path, reader.line_no(), "empty circle");
    std::string name(fields[0]);
    if (name.empty()) detail::fail(path, reader.line_no(), "missing circle name");
    if (!names.insert(name).second) detail::fail(path, reader.line_no(), "duplicate circle name");
    std::vector<long long> members;
    for (std::size_t f = 1; f < fields.size(); ++f) {
      for (const auto& tok : detail::split_ws(fields[f])) {
        const long long id = detail::parse_int<long long>(tok, path, reader.line_no());
        members.push_back(id);
        ids.insert(id);
      }
    }
    if (members.empty()) detail::fail(path, reader.line_no(), "empty circle");
    raw_circles.emplace_back(std::move(name), std::move(members));
  }
  if (raw_circles.empty()) throw data_error(path + ": no circles found");

  CirclesData data;
  data.raw_ids.assign(ids.begin(), ids.end());
  data.n = static_cast<int>(data.raw_ids.size());
  std::map<long long, int> dense;
  for (int k = 0; k < data.n; ++k) dense[data.raw_ids[k]] = k;
  for (auto& [name, members] : raw_circles) {
    std::vector<int> mapped;
    mapped.reserve(members.size());
    for (long long id : members) mapped.push_back(dense.at(id));
    std::sort(mapped.begin(), mapped.end());
    mapped.erase(std::unique(mapped.begin(), mapped.end()), mapped.end());
    data.circles.emplace_back(name, std::move(mapped));
  }
  return data;
}

namespace detail {

inline std::vector<std::vector<std::uint64_t>> circle_masks(const CirclesData& circles) {
  const std::size_t blocks = (circles.circles.size() + 63) / 64;
  std::vector<std::vector<std::uint64_t>> masks(circles.n, std::vector<std::uint64_t>(blocks, 0));
  for (std::size_t c = 0; c < circles.circles.size(); ++c)
    for (int v : circles.circles[c].second) masks[v][c / 64] |= (1ull << (c % 64));
  return masks;
}

inline bool share_circle(const std::vector<std::vector<std::uint64_t>>& masks,
                         std::span<const std::int32_t> tuple) {
  const auto& first = masks[tuple[0]];
  for (std::size_t b = 0; b < first.size(); ++b) {
    std::uint64_t acc = first[b];
    for (std::size_t a = 1; a < tuple.size() && acc; ++a) acc &= masks[tuple[a]][b];
    if (acc) return true;
  }
  return false;
}

}  // namespace detail

/// Decomposes circles into 3-order hyperlink statuses: a triple is labeled 1
/// iff some circle contains all three nodes. sample_size == 0 enumerates all
/// triples; otherwise a seeded uniform sample is drawn, optionally balanced
/// between labels by rejection capped at 100x the requested size.
inline HyperObservations circles_to_hyperlinks(const CirclesData& circles, std::size_t sample_size,
                                               bool balance, std::uint64_t seed) {
  if (circles.n < 3) throw argument_error("circles_to_hyperlinks: need at least 3 nodes");
  const auto masks = detail::circle_masks(circles);
  HyperObservations obs(circles.n, 3);

  if (sample_size == 0) {
    for (std::int32_t i = 0; i < circles.n; ++i)
      for (std::int32_t j = i + 1; j < circles.n; ++j)
        for (std::int32_t k = j + 1; k < circles.n; ++k) {
          const std::int32_t t[3] = {i, j, k};
          obs.add(std::span<const std::int32_t>(t, 3), detail::share_circle(masks, {t, 3}) ? 1 : 0);
        }
    return obs;
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int32_t> node(0, circles.n - 1);
  const std::size_t want_pos = balance ? (sample_size + 1) / 2 : 0;
  const std::size_t want_neg = balance ? sample_size - want_pos : 0;
  std::size_t got_pos = 0, got_neg = 0;
  const std::size_t max_attempts = 100 * sample_size;
  std::size_t attempts = 0;
  while (obs.size() < sample_size) {
    if (++attempts > max_attempts)
      throw data_error("circles_to_hyperlinks: sample quota unreachable within the rejection cap");
    std::int32_t t[3] = {node(rng), node(rng), node(rng)};
    std::sort(std::begin(t), std::end(t));
    if (t[0] == t[1] || t[1] == t[2]) continue;
    if (obs.contains({t, 3})) continue;
    const int label = detail::share_circle(masks, {t, 3}) ? 1 : 0;
    if (balance) {
      if (label == 1 && got_pos >= want_pos) continue;
      if (label == 0 && got_neg >= want_neg) continue;
      (label ? got_pos : got_neg) += 1;
    }
    obs.add(std::span<const std::int32_t>(t, 3), label);
  }
  return obs;
}

/// Model file: five header lines (n=, r=, beta=, lambda=, cap=) then n rows
/// of r decimal values at 17 significant digits, so doubles round trip.
inline void save_model(const std::string& path, const LatentFactors& Z, const ModelConfig& config) {
  auto out = detail::open_out(path);
  out << "n=" << Z.n << "\n";
  out << "r=" << Z.r << "\n";
  out << "beta=" << detail::fmt17(config.beta) << "\n";
  out << "lambda=" << detail::fmt17(config.lambda) << "\n";
  out << "cap=" << detail::fmt17(config.cap) << "\n";
  for (int i = 0; i < Z.n; ++i) {
    for (int k = 0; k < Z.r; ++k) {
      if (k) out << ' ';
      out << detail::fmt17(Z.at(i, k));
    }
    out << "\n";
  }
  if (!out) throw data_error("write failed: " + path);
}

inline std::pair<LatentFactors, ModelConfig> load_model(const std::string& path) {
  auto in = detail::open_in(path);
  detail::LineReader reader(in, path);
  std::string_view line;

  auto read_header = [&](std::string_view key) -> std::string_view {
    if (!reader.next(line)) throw data_error(path + ": truncated header, expected " + std::string(key));
    if (line.substr(0, key.size()) != key)
      detail::fail(path, reader.line_no(), "expected header '" + std::string(key) + "'");
    return line.substr(key.size());
  };

  const long n = detail::parse_int<long>(read_header("n="), path, reader.line_no());
  const long r = detail::parse_int<long>(read_header("r="), path, reader.line_no());
  ModelConfig config;
  config.beta = detail::parse_double(read_header("beta="), path, reader.line_no());
  config.lambda = detail::parse_double(read_header("lambda="), path, reader.line_no());
  config.cap = detail::parse_double(read_header("cap="), path, reader.line_no());
  if (n <= 0 || r <= 0) detail::fail(path, reader.line_no(), "n and r must be positive");
  config.r = static_cast<int>(r);

  LatentFactors Z(static_cast<int>(n), static_cast<int>(r));
  for (long i = 0; i < n; ++i) {
    if (!reader.next(line)) throw data_error(path + ": truncated at row " + std::to_string(i));
    const auto fields = detail::split_ws(line);
    if (static_cast<long>(fields.size()) != r)
      detail::fail(path, reader.line_no(), "row width disagrees with header r");
    for (long k = 0; k < r; ++k)
      Z.at(static_cast<int>(i), static_cast<int>(k)) = detail::parse_double(fields[k], path, reader.line_no());
  }
  if (reader.next(line) && !line.empty()) detail::fail(path, reader.line_no(), "unexpected trailing content");
  if (!Z.all_finite()) throw data_error(path + ": non-finite entries");
  return {std::move(Z), config};
}

/// Report CSV: `set,auc,count,mse` with rows in lexicographic set order;
/// missing values are left empty.
inline void save_report(const std::string& path, const eval::EvalReport& report) {
  eval::EvalReport sorted = report;
  sorted.sort();
  auto out = detail::open_out(path);
  out << "set,auc,count,mse\n";
  for (const auto& row : sorted.rows) {
    out << row.set << ',';
    if (row.auc) out << detail::fmt17(*row.auc);
    out << ',' << row.count << ',';
    if (row.mse) out << detail::fmt17(*row.mse);
    out << "\n";
  }
  if (!out) throw data_error("write failed: " + path);
}

/// Ground-truth pair probabilities: `n=<count>` then `i<TAB>j<TAB>p`.
inline void save_pair_probs(const std::string& path, int n,
                            const std::vector<std::tuple<int, int, double>>& probs) {
  auto out = detail::open_out(path);
  out << "n=" << n << "\n";
  for (const auto& [i, j, p] : probs) out << i << "\t" << j << "\t" << detail::fmt17(p) << "\n";
  if (!out) throw data_error("write failed: " + path);
}

inline std::map<std::pair<int, int>, double> load_pair_probs(const std::string& path) {
  auto in = detail::open_in(path);
  detail::LineReader reader(in, path);
  std::string_view line;
  if (!reader.next(line)) throw data_error(path + ": missing 'n=' header");
  const long n = detail::expect_header_field(line, "n=", path, reader.line_no());
  std::map<std::pair<int, int>, double> probs;
  while (reader.next(line)) {
    const auto fields = detail::split(line, '\t');
    if (fields.size() != 3) detail::fail(path, reader.line_no(), "expected 'i<TAB>j<TAB>p'");
    int i = detail::parse_int<int>(fields[0], path, reader.line_no());
    int j = detail::parse_int<int>(fields[1], path, reader.line_no());
    if (i > j) std::swap(i, j);
    if (i < 0 || j >= n || i == j) detail::fail(path, reader.line_no(), "bad pair");
    probs[{i, j}] = detail::parse_double(fields[2], path, reader.line_no());
  }
  return probs;
}

/// Ground-truth tuple probabilities: `n=<count> m=<order>` then
/// `i1 i2 ... im<TAB>p`.
inline void save_tuple_probs(const std::string& path, int n, int m,
                             const std::vector<std::int32_t>& tuples, const std::vector<double>& probs) {
  if (tuples.size() != probs.size() * m) throw argument_error("save_tuple_probs: size mismatch");
  auto out = detail::open_out(path);
  out << "n=" << n << " m=" << m << "\n";
  for (std::size_t e = 0; e < probs.size(); ++e) {
    for (int a = 0; a < m; ++a) {
      if (a) out << ' ';
      out << tuples[e * m + a];
    }
    out << "\t" << detail::fmt17(probs[e]) << "\n";
  }
  if (!out) throw data_error("write failed: " + path);
}

struct TupleProbs {
  int n = 0;
  int m = 0;
  std::vector<std::int32_t> tuples;
  std::vector<double> probs;
};

inline TupleProbs load_tuple_probs(const std::string& path) {
  auto in = detail::open_in(path);
  detail::LineReader reader(in, path);
  std::string_view line;
  if (!reader.next(line)) throw data_error(path + ": missing header");
  const auto head = detail::split_ws(line);
  if (head.size() != 2) detail::fail(path, reader.line_no(), "expected 'n=<count> m=<order>'");
  TupleProbs out;
  out.n = static_cast<int>(detail::expect_header_field(head[0], "n=", path, reader.line_no()));
  out.m = static_cast<int>(detail::expect_header_field(head[1], "m=", path, reader.line_no()));
  while (reader.next(line)) {
    const auto fields = detail::split(line, '\t');
    if (fields.size() != 2) detail::fail(path, reader.line_no(), "expected tuple<TAB>p");
    const auto idx = detail::split_ws(fields[0]);
    if (static_cast<int>(idx.size()) != out.m) detail::fail(path, reader.line_no(), "wrong tuple arity");
    std::vector<std::int32_t> tuple;
    for (const auto& tok : idx) tuple.push_back(detail::parse_int<std::int32_t>(tok, path, reader.line_no()));
    std::sort(tuple.begin(), tuple.end());
    out.tuples.insert(out.tuples.end(), tuple.begin(), tuple.end());
    out.probs.push_back(detail::parse_double(fields[1], path, reader.line_no()));
  }
  return out;
}

/// Edge list with raw ids (`a b` per line); used together with a circles
/// file, sharing one dense id map built over the union of ids.
struct EgoDataset {
  CirclesData circles;
  PairObservations pairs;  // fully observed: absent edges are labeled 0
};

inline EgoDataset load_ego_dataset(const std::string& edges_path, const std::string& circles_path) {
  auto in = detail::open_in(edges_path);
  detail::LineReader reader(in, edges_path);
  std::string_view line;
  std::vector<std::pair<long long, long long>> raw_edges;
  std::set<long long> ids;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto fields = detail::split_ws(line);
    if (fields.size() != 2) detail::fail(edges_path, reader.line_no(), "expected 'a b'");
    const long long a = detail::parse_int<long long>(fields[0], edges_path, reader.line_no());
    const long long b = detail::parse_int<long long>(fields[1], edges_path, reader.line_no());
    if (a == b) detail::fail(edges_path, reader.line_no(), "self-loop");
    raw_edges.emplace_back(a, b);
    ids.insert(a);
    ids.insert(b);
  }

  CirclesData circles = load_circles(circles_path);
  for (long long id : circles.raw_ids) ids.insert(id);

  EgoDataset data;
  data.circles.raw_ids.assign(ids.begin(), ids.end());
  data.circles.n = static_cast<int>(data.circles.raw_ids.size());
  std::map<long long, int> dense;
  for (int k = 0; k < data.circles.n; ++k) dense[data.circles.raw_ids[k]] = k;
  for (const auto& [name, members] : circles.circles) {
    std::vector<int> mapped;
    for (int v : members) mapped.push_back(dense.at(circles.raw_ids[v]));
    std::sort(mapped.begin(), mapped.end());
    data.circles.circles.emplace_back(name, std::move(mapped));
  }

  const int n = data.circles.n;
  std::set<std::pair<int, int>> edge_set;
  for (const auto& [a, b] : raw_edges) {
    int i = dense.at(a), j = dense.at(b);
    if (i > j) std::swap(i, j);
    edge_set.emplace(i, j);
  }
  data.pairs = PairObservations(n);
  data.pairs.entries.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      data.pairs.entries.push_back({i, j, static_cast<std::uint8_t>(edge_set.count({i, j}) ? 1 : 0)});
  return data;
}

}  // namespace hyperembed::io
