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

#include "cissl/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "cissl/common.hpp"

namespace cissl {

namespace {

const char* const kGroups[] = {"all", "major", "minor"};
const std::string kPlusMinus = "\xC2\xB1";  // U+00B1

double group_field(const GroupErrors& g, int f) { return f == 0 ? g.all : f == 1 ? g.major : g.minor; }
double& group_field(GroupErrors& g, int f) { return f == 0 ? g.all : f == 1 ? g.major : g.minor; }

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_real(const std::string& s, const std::string& path) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) throw IoError(path + ": bad number '" + s + "'");
  return v;
}

}  // namespace

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

GroupErrors group_errors(const std::vector<double>& per_class_errors, const ClassCounts& counts,
                         GroupMode mode) {
  require(static_cast<int>(per_class_errors.size()) == counts.num_classes(),
          "group_errors: error vector length differs from class count");
  const auto C = per_class_errors.size();
  GroupErrors g;
  g.all = std::accumulate(per_class_errors.begin(), per_class_errors.end(), 0.0) /
          static_cast<double>(C);
  if (mode == GroupMode::SingleClass) {
    g.major = per_class_errors[static_cast<std::size_t>(counts.major_class())];
    g.minor = per_class_errors[static_cast<std::size_t>(counts.minor_class())];
    return g;
  }
  // Descending frequency, ties by index.
  std::vector<std::size_t> order(C);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return counts[static_cast<int>(a)] > counts[static_cast<int>(b)];
  });
  const std::size_t half = C / 2;
  double top = 0.0, bottom = 0.0;
  for (std::size_t i = 0; i < half; ++i) {
    top += per_class_errors[order[i]];
    bottom += per_class_errors[order[C - 1 - i]];
  }
  g.major = top / static_cast<double>(half);
  g.minor = bottom / static_cast<double>(half);
  return g;
}

Aggregate aggregate_runs(const std::vector<GroupErrors>& results) {
  require(!results.empty(), "aggregate_runs: no results");
  Aggregate a;
  a.n = static_cast<int>(results.size());
  for (int f = 0; f < 3; ++f) {
    // Shifted by the first value so identical runs give an exact mean.
    const double x0 = group_field(results.front(), f);
    double s = 0.0;
    for (const auto& r : results) s += group_field(r, f) - x0;
    group_field(a.mean, f) = x0 + s / a.n;
  }
  if (a.n >= 2) {
    GroupErrors sd;
    for (int f = 0; f < 3; ++f) {
      double ss = 0.0;
      for (const auto& r : results) {
        const double d = group_field(r, f) - group_field(a.mean, f);
        ss += d * d;
      }
      group_field(sd, f) = std::sqrt(ss / (a.n - 1));
    }
    a.stddev = sd;
  }
  return a;
}

BBox expanded_bbox(const Dataset2D& data, double margin) {
  require(!data.empty(), "expanded_bbox: empty dataset");
  BBox b{data.points[0].x, data.points[0].x, data.points[0].y, data.points[0].y};
  for (const auto& p : data.points) {
    b.xmin = std::min(b.xmin, p.x);
    b.xmax = std::max(b.xmax, p.x);
    b.ymin = std::min(b.ymin, p.y);
    b.ymax = std::max(b.ymax, p.y);
  }
  const double dx = (b.xmax - b.xmin) * margin;
  const double dy = (b.ymax - b.ymin) * margin;
  return {b.xmin - dx, b.xmax + dx, b.ymin - dy, b.ymax + dy};
}

Point2 BoundaryGrid::cell_center(int i, int j) const {
  // (2i+1)/(2nx) is correctly rounded, so aligned centres of refined grids
  // reproduce bit-identical coordinates.
  const double fx = static_cast<double>(2 * i + 1) / static_cast<double>(2 * nx);
  const double fy = static_cast<double>(2 * j + 1) / static_cast<double>(2 * ny);
  return {bbox.xmin + (bbox.xmax - bbox.xmin) * fx, bbox.ymin + (bbox.ymax - bbox.ymin) * fy};
}

BoundaryGrid boundary_grid(const MlpParams& params, const BBox& bbox, int nx, int ny) {
  require(nx >= 2 && ny >= 2, "boundary_grid: resolution must be at least 2x2");
  require(std::isfinite(bbox.xmin) && std::isfinite(bbox.xmax) && std::isfinite(bbox.ymin) &&
              std::isfinite(bbox.ymax) && bbox.xmax > bbox.xmin && bbox.ymax > bbox.ymin,
          "boundary_grid: degenerate bounding box");
  BoundaryGrid g;
  g.bbox = bbox;
  g.nx = nx;
  g.ny = ny;
  const Eigen::Index n = static_cast<Eigen::Index>(nx) * ny;
  Matrix xs(n, 2);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const Point2 c = g.cell_center(i, j);
      const Eigen::Index r = static_cast<Eigen::Index>(j) * nx + i;
      xs(r, 0) = c.x;
      xs(r, 1) = c.y;
    }
  // Row-by-row evaluation keeps every cell independent of its neighbours.
  g.max_prob.resize(static_cast<std::size_t>(n));
  g.argmax.resize(static_cast<std::size_t>(n));
  for (Eigen::Index r = 0; r < n; ++r) {
    const Matrix p = softmax(forward(params, xs.row(r)).logits());
    Eigen::Index arg = 0;
    g.max_prob[static_cast<std::size_t>(r)] = p.row(0).maxCoeff(&arg);
    g.argmax[static_cast<std::size_t>(r)] = static_cast<int>(arg);
  }
  return g;
}

std::vector<int> argmax_components(const BoundaryGrid& grid, int num_classes) {
  std::vector<int> comps(static_cast<std::size_t>(num_classes), 0);
  std::vector<char> seen(grid.argmax.size(), 0);
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < grid.argmax.size(); ++s) {
    if (seen[s]) continue;
    const int cls = grid.argmax[s];
    ++comps[static_cast<std::size_t>(cls)];
    seen[s] = 1;
    stack.push_back(s);
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      const int i = static_cast<int>(cur % static_cast<std::size_t>(grid.nx));
      const int j = static_cast<int>(cur / static_cast<std::size_t>(grid.nx));
      const int di[] = {1, -1, 0, 0};
      const int dj[] = {0, 0, 1, -1};
      for (int d = 0; d < 4; ++d) {
        const int ni = i + di[d], nj = j + dj[d];
        if (ni < 0 || nj < 0 || ni >= grid.nx || nj >= grid.ny) continue;
        const auto nb = static_cast<std::size_t>(nj) * static_cast<std::size_t>(grid.nx) +
                        static_cast<std::size_t>(ni);
        if (!seen[nb] && grid.argmax[nb] == cls) {
          seen[nb] = 1;
          stack.push_back(nb);
        }
      }
    }
  }
  return comps;
}

void write_grid_csv(const BoundaryGrid& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "x,y,max_prob,argmax\n";
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const Point2 c = grid.cell_center(i, j);
      const auto r = static_cast<std::size_t>(j) * static_cast<std::size_t>(grid.nx) +
                     static_cast<std::size_t>(i);
      out << format_real(c.x) << ',' << format_real(c.y) << ',' << format_real(grid.max_prob[r])
          << ',' << grid.argmax[r] << '\n';
    }
  if (!out) throw IoError("write failed for " + path);
}

std::vector<std::string> write_report(const std::vector<AggregateRow>& rows,
                                      const std::vector<NamedGrid>& grids, const std::string& dir,
                                      const std::string& table) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());

  std::vector<std::string> datasets, algorithms;
  for (const auto& r : rows) {
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end())
      datasets.push_back(r.dataset);
    if (std::find(algorithms.begin(), algorithms.end(), r.algorithm) == algorithms.end())
      algorithms.push_back(r.algorithm);
  }
  auto find = [&](const std::string& d, const std::string& a) -> const AggregateRow* {
    for (const auto& r : rows)
      if (r.dataset == d && r.algorithm == a) return &r;
    return nullptr;
  };

  std::vector<std::string> written;
  const std::string layout_path = dir + "/" + table + ".csv";
  {
    std::ofstream out(layout_path);
    if (!out) throw IoError("cannot open " + layout_path + " for writing");
    out << "dataset,group";
    for (const auto& a : algorithms) out << ',' << a;
    out << '\n';
    for (const auto& d : datasets)
      for (int f = 0; f < 3; ++f) {
        out << d << ',' << kGroups[f];
        for (const auto& a : algorithms) {
          out << ',';
          if (const AggregateRow* r = find(d, a)) {
            out << format_real(group_field(r->aggregate.mean, f));
            if (r->aggregate.stddev)
              out << kPlusMinus << format_real(group_field(*r->aggregate.stddev, f));
          }
        }
        out << '\n';
      }
    if (!out) throw IoError("write failed for " + layout_path);
  }
  written.push_back(layout_path);

  const std::string long_path = dir + "/" + table + "_long.csv";
  {
    std::ofstream out(long_path);
    if (!out) throw IoError("cannot open " + long_path + " for writing");
    out << "dataset,algorithm,group,mean,std,n\n";
    for (const auto& r : rows)
      for (int f = 0; f < 3; ++f) {
        out << r.dataset << ',' << r.algorithm << ',' << kGroups[f] << ','
            << format_real(group_field(r.aggregate.mean, f)) << ',';
        if (r.aggregate.stddev) out << format_real(group_field(*r.aggregate.stddev, f));
        out << ',' << r.aggregate.n << '\n';
      }
    if (!out) throw IoError("write failed for " + long_path);
  }
  written.push_back(long_path);

  for (const auto& g : grids) {
    const std::string p = dir + "/" + g.name + ".csv";
    write_grid_csv(g.grid, p);
    written.push_back(p);
  }
  return written;
}

std::vector<AggregateRow> read_long_table_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "dataset,algorithm,group,mean,std,n")
    throw IoError(path + ": unexpected header");
  std::vector<AggregateRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 6) throw IoError(path + ": malformed row '" + line + "'");
    const int gi = static_cast<int>(std::find(std::begin(kGroups), std::end(kGroups), f[2]) -
                                    std::begin(kGroups));
    if (gi >= 3) throw IoError(path + ": unknown group '" + f[2] + "'");
    if (rows.empty() || rows.back().dataset != f[0] || rows.back().algorithm != f[1] || gi == 0)
      rows.push_back({f[0], f[1], {}});
    Aggregate& a = rows.back().aggregate;
    group_field(a.mean, gi) = parse_real(f[3], path);
    if (!f[4].empty()) {
      if (!a.stddev) a.stddev = GroupErrors{};
      group_field(*a.stddev, gi) = parse_real(f[4], path);
    }
    a.n = static_cast<int>(parse_real(f[5], path));
  }
  return rows;
}

std::vector<LayoutCell> read_layout_table_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "dataset" || header[1] != "group")
    throw IoError(path + ": unexpected header");
  std::vector<LayoutCell> cells;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) throw IoError(path + ": malformed row '" + line + "'");
    for (std::size_t k = 2; k < f.size(); ++k) cells.push_back({f[0], f[1], header[k], f[k]});
  }
  return cells;
}

}  // namespace cissl
