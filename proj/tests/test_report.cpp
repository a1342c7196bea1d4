// Copyright 2026 The cissl-lab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "doctest.h"

#include "cissl/common.hpp"
#include "cissl/report.hpp"
#include "cissl/trainers.hpp"

using namespace cissl;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

GroupErrors ge(double a, double b, double c) { return {a, b, c}; }

}  // namespace

TEST_CASE("group errors examples") {
  CHECK(group_errors({0.3, 0.3, 0.3}, ClassCounts({5, 2, 1})) == ge(0.3, 0.3, 0.3));
  CHECK(group_errors({0.0, 0.5}, ClassCounts({10, 2})) == ge(0.25, 0.0, 0.5));
  CHECK(group_errors({0, 0, 0, 1}, ClassCounts({5, 3, 2, 1})) == ge(0.25, 0.0, 1.0));
  // Classes are located by count, not by position.
  CHECK(group_errors({0.9, 0.1, 0.2}, ClassCounts({1, 7, 3})) == ge((0.9 + 0.1 + 0.2) / 3, 0.1, 0.9));
  // Ties resolve to the lowest index.
  CHECK(group_errors({0.1, 0.2, 0.3, 0.4}, ClassCounts({2, 5, 5, 2})) == ge(0.25, 0.2, 0.1));
  CHECK_THROWS_AS(group_errors({0.1}, ClassCounts({2, 3})), InvalidArgument);
}

TEST_CASE("group errors in halves mode") {
  const auto g = group_errors({0.0, 0.1, 0.2, 0.3}, ClassCounts({5, 3, 2, 1}), GroupMode::Halves);
  CHECK(g.major == doctest::Approx(0.05).epsilon(1e-15));
  CHECK(g.minor == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("property: all equals the arithmetic mean of the classes") {
  Rng rng = make_rng(1, 1);
  std::uniform_real_distribution<double> u;
  std::uniform_int_distribution<int> n(1, 50), k(2, 8);
  for (int trial = 0; trial < 500; ++trial) {
    const int C = k(rng);
    std::vector<double> e;
    std::vector<int> c;
    for (int i = 0; i < C; ++i) e.push_back(u(rng)), c.push_back(n(rng));
    const auto g = group_errors(e, ClassCounts(c));
    CHECK(g.all == std::accumulate(e.begin(), e.end(), 0.0) / C);
    const ClassCounts cc(c);
    CHECK(g.major == e[static_cast<std::size_t>(cc.major_class())]);
    CHECK(g.minor == e[static_cast<std::size_t>(cc.minor_class())]);
  }
}

TEST_CASE("aggregate runs") {
  const auto same = aggregate_runs({ge(0.2, 0.1, 0.4), ge(0.2, 0.1, 0.4), ge(0.2, 0.1, 0.4)});
  CHECK(same.stddev->all == 0.0);
  CHECK(same.n == 3);
  const auto two = aggregate_runs({ge(0.2, 0.2, 0.2), ge(0.4, 0.4, 0.4)});
  CHECK(two.mean.all == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(two.stddev->all == doctest::Approx(std::sqrt(0.02)).epsilon(1e-14));
  CHECK(two.stddev->all == doctest::Approx(0.1414).epsilon(1e-3));
  const auto one = aggregate_runs({ge(0.1, 0.2, 0.3)});
  CHECK(one.mean == ge(0.1, 0.2, 0.3));
  CHECK_FALSE(one.stddev.has_value());
  CHECK_THROWS_AS(aggregate_runs({}), InvalidArgument);
}

TEST_CASE("property: aggregate matches a brute-force recomputation") {
  Rng rng = make_rng(2, 2);
  std::uniform_real_distribution<double> u;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 9;
    std::vector<GroupErrors> r;
    for (int i = 0; i < n; ++i) r.push_back(ge(u(rng), u(rng), u(rng)));
    const auto a = aggregate_runs(r);
    long double m = 0, ss = 0;
    for (const auto& x : r) m += x.minor;
    m /= n;
    for (const auto& x : r) ss += (x.minor - m) * (x.minor - m);
    CHECK(std::abs(a.mean.minor - double(m)) < 1e-12);
    CHECK(std::abs(a.stddev->minor - double(std::sqrt(ss / (n - 1)))) < 1e-12);
  }
}

TEST_CASE("bounding box grows by the margin") {
  Dataset2D d;
  d.points = {{0, 0}, {2, 1}};
  d.labels = {0, 1};
  const auto b = expanded_bbox(d, 0.2);
  CHECK(b.xmin == doctest::Approx(-0.4));
  CHECK(b.xmax == doctest::Approx(2.4));
  CHECK(b.ymin == doctest::Approx(-0.2));
  CHECK(b.ymax == doctest::Approx(1.2));
}

TEST_CASE("boundary grid: zero params give 1/C everywhere") {
  const MlpParams p(make_shape(8, 4));
  const auto g = boundary_grid(p, {-1, 1, -2, 2}, 7, 5);
  CHECK(g.max_prob.size() == 35);
  CHECK(g.argmax.size() == 35);
  for (double v : g.max_prob) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("boundary grid: probabilities in range and pure re-evaluation") {
  const auto p = init_params(16, 3, 3);
  const BBox box{-3, 2, -1, 4};
  const auto a = boundary_grid(p, box, 23, 17);
  const auto b = boundary_grid(p, box, 23, 17);
  CHECK(a.max_prob == b.max_prob);
  CHECK(a.argmax == b.argmax);
  for (double v : a.max_prob) {
    CHECK(v >= 1.0 / 3 - 1e-15);
    CHECK(v <= 1.0);
  }
  // Row-major layout: probe one cell directly.
  const Point2 c = a.cell_center(5, 9);
  Matrix x(1, 2);
  x << c.x, c.y;
  CHECK(a.max_prob[9 * 23 + 5] == softmax(forward(p, x).logits()).maxCoeff());
}

TEST_CASE("boundary grid: aligned cell centres reappear exactly under 3x refinement") {
  const auto p = init_params(16, 2, 4);
  const BBox box{-1.3, 2.1, -0.7, 1.9};
  const auto coarse = boundary_grid(p, box, 10, 8);
  const auto fine = boundary_grid(p, box, 30, 24);
  for (int j = 0; j < 8; ++j)
    for (int i = 0; i < 10; ++i) {
      CHECK(coarse.cell_center(i, j) == fine.cell_center(3 * i + 1, 3 * j + 1));
      CHECK(coarse.max_prob[j * 10 + i] == fine.max_prob[(3 * j + 1) * 30 + 3 * i + 1]);
      CHECK(coarse.argmax[j * 10 + i] == fine.argmax[(3 * j + 1) * 30 + 3 * i + 1]);
    }
}

TEST_CASE("boundary grid rejects degenerate inputs") {
  const auto p = init_params(4, 2, 1);
  CHECK_THROWS_AS(boundary_grid(p, {0, 1, 0, 1}, 1, 5), InvalidArgument);
  CHECK_THROWS_AS(boundary_grid(p, {1, 1, 0, 1}, 5, 5), InvalidArgument);
  CHECK_THROWS_AS(boundary_grid(p, {0, 1, 2, 1}, 5, 5), InvalidArgument);
}

TEST_CASE("argmax components count connected regions") {
  BoundaryGrid g;
  g.nx = 4;
  g.ny = 3;
  g.argmax = {0, 0, 1, 1,
              0, 1, 1, 0,
              0, 0, 1, 0};
  g.max_prob.assign(12, 0.6);
  CHECK(argmax_components(g, 3) == std::vector<int>{2, 1, 0});
  g.argmax = {0, 1, 0, 1,
              1, 0, 1, 0,
              0, 1, 0, 1};
  CHECK(argmax_components(g, 2) == std::vector<int>{6, 6});
}

TEST_CASE("trained separable model has a single connected frontier") {
  const int per_class = 500;
  const auto pool = gen_two_moons(per_class + 1 + 200, 0.1, 21);
  const auto split = make_cissl_split(pool, ClassCounts({per_class, per_class}), UnlabeledType::Uniform,
                                      1.0, 1, 200, 21);
  TrainConfig cfg;
  cfg.seed = 21;
  cfg.eval_every = cfg.schedule.total_iters;
  const auto r = train(split, AlgorithmSpec::supervised(), cfg);
  const auto grid = boundary_grid(r.student, expanded_bbox(split.validation(), 0.2), 120, 90);
  CHECK(argmax_components(grid, 2) == std::vector<int>{1, 1});
}

TEST_CASE("report round-trip and layout") {
  const auto dir = fresh_dir("cissl_report_test");
  std::vector<AggregateRow> rows;
  Rng rng = make_rng(5, 5);
  std::uniform_real_distribution<double> u;
  const std::vector<std::string> datasets{"two_moons", "four_spins"};
  const std::vector<std::string> algos{"supervised", "pi_model", "mean_teacher", "mean_teacher_scl"};
  for (const auto& d : datasets)
    for (const auto& a : algos) {
      std::vector<GroupErrors> runs;
      for (int s = 0; s < 5; ++s) runs.push_back(ge(u(rng), u(rng), u(rng)));
      rows.push_back({d, a, aggregate_runs(runs)});
    }
  rows.push_back({"single", "supervised", aggregate_runs({ge(0.1, 0.2, 0.3)})});
  const auto files = write_report(rows, {}, dir.string());
  CHECK(files.size() == 2);

  const auto back = read_long_table_csv((dir / "table1_long.csv").string());
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].dataset == rows[i].dataset);
    CHECK(back[i].algorithm == rows[i].algorithm);
    CHECK(back[i].aggregate.mean == rows[i].aggregate.mean);
    CHECK(back[i].aggregate.stddev == rows[i].aggregate.stddev);
    CHECK(back[i].aggregate.n == rows[i].aggregate.n);
  }

  const auto cells = read_layout_table_csv((dir / "table1.csv").string());
  int pm = 0;
  for (const auto& c : cells)
    if (c.dataset != "single") pm += c.text.find("±") != std::string::npos;
  CHECK(pm == 24);
  for (const auto& c : cells)
    if (c.dataset == "single" && c.algorithm == "supervised") CHECK(c.text.find("±") == std::string::npos);
  std::ifstream in(dir / "table1.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "dataset,group,supervised,pi_model,mean_teacher,mean_teacher_scl");
  fs::remove_all(dir);
}

TEST_CASE("report with grids writes one CSV per grid") {
  const auto dir = fresh_dir("cissl_report_grid_test");
  const auto p = init_params(4, 2, 6);
  const auto g = boundary_grid(p, {0, 1, 0, 1}, 3, 2);
  const auto files = write_report({{"d", "a", aggregate_runs({ge(0.1, 0.1, 0.1)})}},
                                  {{"grid_a", g}}, dir.string());
  CHECK(files.size() == 3);
  std::ifstream in(dir / "grid_a.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "x,y,max_prob,argmax");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 6);
  fs::remove_all(dir);
}

TEST_CASE("report I/O failures carry the path") {
  const auto dir = fresh_dir("cissl_report_io_test");
  const auto blocker = dir / "file";
  std::ofstream(blocker) << "x";
  try {
    write_report({}, {}, (blocker / "sub").string());
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("sub") != std::string::npos);
  }
  CHECK_THROWS_AS(read_long_table_csv((dir / "missing.csv").string()), IoError);
  fs::remove_all(dir);
}

TEST_CASE("reals are written with 17 significant digits") {
  CHECK(format_real(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_real(1.0 / 3)) == 1.0 / 3);
}
