#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "hyperembed/io.hpp"
#include "hyperembed/optim.hpp"

#include "helpers.hpp"

using namespace hyperembed;
using namespace hyperembed::io;
using hyperembed::model::HyperObservations;
using hyperembed::model::LatentFactors;
using hyperembed::model::ModelConfig;
using hyperembed::model::PairObservations;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("hyperembed_io_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("pairs round trip and canonicalization") {
  TempDir tmp;
  std::mt19937_64 rng(107);
  auto obs = testutil::random_pairs(9, 17, rng);
  const auto path = tmp.file("pairs.tsv");
  save_pairs(path, obs);
  auto back = load_pairs(path);
  CHECK(back.n == obs.n);
  REQUIRE(back.size() == obs.size());
  for (std::size_t e = 0; e < obs.size(); ++e) {
    CHECK(back.entries[e].i == obs.entries[e].i);
    CHECK(back.entries[e].j == obs.entries[e].j);
    CHECK(back.entries[e].y == obs.entries[e].y);
  }

  write_text(tmp.file("swap.tsv"), "n=4\n# comment\n2\t1\t1\n");
  auto swapped = load_pairs(tmp.file("swap.tsv"));
  CHECK(swapped.entries[0].i == 1);
  CHECK(swapped.entries[0].j == 2);

  write_text(tmp.file("loop.tsv"), "n=4\n1\t1\t1\n");
  CHECK_THROWS_AS(load_pairs(tmp.file("loop.tsv")), data_error);
  write_text(tmp.file("dup.tsv"), "n=4\n0\t1\t1\n1\t0\t0\n");
  CHECK_THROWS_AS(load_pairs(tmp.file("dup.tsv")), data_error);
  write_text(tmp.file("nohdr.tsv"), "0\t1\t1\n");
  CHECK_THROWS_AS(load_pairs(tmp.file("nohdr.tsv")), data_error);
  write_text(tmp.file("badtok.tsv"), "n=4\n0\tx\t1\n");
  CHECK_THROWS_AS(load_pairs(tmp.file("badtok.tsv")), data_error);
  CHECK_THROWS_AS(load_pairs(tmp.file("missing.tsv")), data_error);
}

TEST_CASE("hyper round trip, canonicalization and rejects") {
  TempDir tmp;
  std::mt19937_64 rng(109);
  auto obs = testutil::random_hyper(9, 3, 11, rng);
  const auto path = tmp.file("hyper.tsv");
  save_hyper(path, obs);
  auto back = load_hyper(path);
  REQUIRE(back.size() == obs.size());
  CHECK(back.nodes == obs.nodes);
  CHECK(back.labels == obs.labels);
  CHECK(back.weights == obs.weights);

  write_text(tmp.file("canon.tsv"), "n=5 m=3\n3 1 2\t1\n");
  auto canon = load_hyper(tmp.file("canon.tsv"));
  CHECK(canon.tuple(0)[0] == 1);
  CHECK(canon.tuple(0)[2] == 3);
  CHECK(canon.weights[0] == 1.0);

  write_text(tmp.file("repeat.tsv"), "n=5 m=3\n1 1 2\t0\n");
  CHECK_THROWS_AS(load_hyper(tmp.file("repeat.tsv")), data_error);
  write_text(tmp.file("arity.tsv"), "n=5 m=3\n1 2\t0\n");
  CHECK_THROWS_AS(load_hyper(tmp.file("arity.tsv")), data_error);
  write_text(tmp.file("dup2.tsv"), "n=5 m=3\n1 2 3\t0\n3 2 1\t1\n");
  CHECK_THROWS_AS(load_hyper(tmp.file("dup2.tsv")), data_error);
}

TEST_CASE("circles parsing") {
  TempDir tmp;
  write_text(tmp.file("circles.txt"), "circleA\t1 2 3\ncircleB\t4 5\n");
  auto data = load_circles(tmp.file("circles.txt"));
  CHECK(data.n == 5);
  REQUIRE(data.circles.size() == 2);
  CHECK(data.circles[0].second.size() == 3);
  CHECK(data.circles[1].second.size() == 2);

  // overlapping membership is allowed
  write_text(tmp.file("overlap.txt"), "a\t1 2 3\nb\t3 4\n");
  CHECK_NOTHROW(load_circles(tmp.file("overlap.txt")));

  write_text(tmp.file("dupname.txt"), "a\t1 2\na\t3 4\n");
  CHECK_THROWS_AS(load_circles(tmp.file("dupname.txt")), data_error);
  write_text(tmp.file("emptycircle.txt"), "a\n");
  CHECK_THROWS_AS(load_circles(tmp.file("emptycircle.txt")), data_error);

  // tab-separated members, as in the public ego-network files
  write_text(tmp.file("tabs.txt"), "a\t10\t20\t30\nb\t20\t40\n");
  auto tabs = load_circles(tmp.file("tabs.txt"));
  CHECK(tabs.n == 4);
  CHECK(tabs.circles[0].second.size() == 3);
}

TEST_CASE("circles_to_hyperlinks follows the membership rule") {
  TempDir tmp;
  write_text(tmp.file("c.txt"), "a\t0 1 2\nb\t3 4 5\n");
  auto circles = load_circles(tmp.file("c.txt"));

  auto all = circles_to_hyperlinks(circles, 0, false, 7);
  CHECK(all.size() == 20);  // C(6,3)
  for (std::size_t e = 0; e < all.size(); ++e) {
    const auto t = all.tuple(e);
    const bool in_a = t[2] <= 2;
    const bool in_b = t[0] >= 3;
    CHECK(int(all.labels[e]) == ((in_a || in_b) ? 1 : 0));
  }

  // a triple present in two circles still labels 1
  write_text(tmp.file("two.txt"), "a\t0 1 2\nb\t0 1 2 3\n");
  auto two = circles_to_hyperlinks(load_circles(tmp.file("two.txt")), 0, false, 7);
  bool found = false;
  for (std::size_t e = 0; e < two.size(); ++e) {
    const auto t = two.tuple(e);
    if (t[0] == 0 && t[1] == 1 && t[2] == 2) {
      CHECK(two.labels[e] == 1);
      found = true;
    }
  }
  CHECK(found);

  auto balanced = circles_to_hyperlinks(circles, 4, true, 11);
  std::size_t pos = 0;
  for (auto y : balanced.labels) pos += y;
  CHECK(balanced.size() == 4);
  CHECK(pos == 2);

  // only 2 positive triples exist in total; a balanced sample of 40 cannot fill
  CHECK_THROWS_AS(circles_to_hyperlinks(circles, 40, true, 11), data_error);

  // deterministic under a fixed seed
  auto again = circles_to_hyperlinks(circles, 4, true, 11);
  CHECK(again.nodes == balanced.nodes);
  CHECK(again.labels == balanced.labels);
}

TEST_CASE("model round trip preserves losses") {
  TempDir tmp;
  std::mt19937_64 rng(113);
  auto Z = testutil::random_factors(7, 3, rng);
  ModelConfig cfg;
  cfg.r = 3;
  cfg.beta = 2.5;
  cfg.lambda = 0.125;
  cfg.cap = 8.0;

  const auto path = tmp.file("model.txt");
  save_model(path, Z, cfg);
  auto [Z2, cfg2] = load_model(path);
  CHECK(Z2.values == Z.values);  // 17 significant digits round-trip doubles
  CHECK(cfg2.beta == cfg.beta);
  CHECK(cfg2.lambda == cfg.lambda);
  CHECK(cfg2.cap == cfg.cap);

  auto pairs = testutil::random_pairs(7, 9, rng);
  auto hyper = testutil::random_hyper(7, 3, 4, rng);
  const double before = model::loss_joint(Z, pairs, hyper, cfg);
  const double after = model::loss_joint(Z2, pairs, hyper, cfg2);
  CHECK(after == Catch::Approx(before).epsilon(1e-12));

  // truncated file
  write_text(tmp.file("trunc.txt"), "n=3\nr=2\nbeta=2\nlambda=0\ncap=10\n0.5 0.5\n");
  CHECK_THROWS_AS(load_model(tmp.file("trunc.txt")), data_error);
  // row width inconsistent with header
  write_text(tmp.file("width.txt"), "n=1\nr=3\nbeta=2\nlambda=0\ncap=10\n0.5 0.5\n");
  CHECK_THROWS_AS(load_model(tmp.file("width.txt")), data_error);
}

TEST_CASE("report CSV output") {
  TempDir tmp;
  eval::EvalReport report;
  report.rows.push_back({"pair", 10, 0.75, std::nullopt});
  report.rows.push_back({"hyper", 4, 0.5, 0.001});
  const auto path = tmp.file("report.csv");
  save_report(path, report);
  const std::string text = read_text(path);
  CHECK(text == "set,auc,count,mse\nhyper,0.5,4,0.001\npair,0.75,10,\n");

  save_report(path, report);
  CHECK(read_text(path) == text);  // byte-identical on re-save
}

TEST_CASE("probability tables round trip") {
  TempDir tmp;
  std::vector<std::tuple<int, int, double>> pp{{0, 1, 0.25}, {1, 2, 0.75}};
  save_pair_probs(tmp.file("pp.tsv"), 4, pp);
  auto loaded = load_pair_probs(tmp.file("pp.tsv"));
  CHECK(loaded.at({0, 1}) == 0.25);
  CHECK(loaded.at({1, 2}) == 0.75);

  std::vector<std::int32_t> tuples{0, 1, 2, 1, 2, 3};
  std::vector<double> probs{0.5, 0.125};
  save_tuple_probs(tmp.file("tp.tsv"), 4, 3, tuples, probs);
  auto tp = load_tuple_probs(tmp.file("tp.tsv"));
  CHECK(tp.n == 4);
  CHECK(tp.m == 3);
  CHECK(tp.tuples == tuples);
  CHECK(tp.probs == probs);
}

TEST_CASE("ego dataset loader shares one id map") {
  TempDir tmp;
  write_text(tmp.file("g.edges"), "10 20\n20 30\n");
  write_text(tmp.file("g.circles"), "c0\t10 20\nc1\t40\n");
  auto data = load_ego_dataset(tmp.file("g.edges"), tmp.file("g.circles"));
  CHECK(data.circles.n == 4);  // ids 10,20,30,40
  CHECK(data.pairs.size() == 6);
  std::size_t ones = 0;
  for (const auto& e : data.pairs.entries) ones += e.y;
  CHECK(ones == 2);
}
