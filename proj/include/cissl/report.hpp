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

#ifndef CISSL_REPORT_HPP_
#define CISSL_REPORT_HPP_

#include <optional>
#include <string>
#include <vector>

#include "cissl/synth_data.hpp"
#include "cissl/tiny_net.hpp"

namespace cissl {

struct GroupErrors {
  double all = 0.0;
  double major = 0.0;
  double minor = 0.0;
  friend bool operator==(const GroupErrors&, const GroupErrors&) = default;
};

/// How "major" and "minor" are read for more than two classes.
enum class GroupMode {
  SingleClass,  // the single most / least frequent class
  Halves,       // mean over the floor(C/2) most / least frequent classes
};

/// `all` is the unweighted class mean; frequency ties go to the lowest index.
GroupErrors group_errors(const std::vector<double>& per_class_errors, const ClassCounts& counts,
                         GroupMode mode = GroupMode::SingleClass);

struct Aggregate {
  GroupErrors mean;
  std::optional<GroupErrors> stddev;  // sample std (n - 1); absent for one run
  int n = 0;
};

Aggregate aggregate_runs(const std::vector<GroupErrors>& results);

struct BBox {
  double xmin = -1.0, xmax = 1.0, ymin = -1.0, ymax = 1.0;
};

/// Data bounding box grown by `margin` times its extent on every side.
BBox expanded_bbox(const Dataset2D& data, double margin = 0.2);

struct BoundaryGrid {
  BBox bbox;
  int nx = 0;
  int ny = 0;
  // Row-major over (j, i): index j * nx + i.
  std::vector<double> max_prob;
  std::vector<int> argmax;

  Point2 cell_center(int i, int j) const;
};

/// Softmax at every cell centre: its largest probability and argmax class.
BoundaryGrid boundary_grid(const MlpParams& params, const BBox& bbox, int nx, int ny);

/// Number of 4-connected components of cells sharing one argmax class, per
/// class.
std::vector<int> argmax_components(const BoundaryGrid& grid, int num_classes);

struct AggregateRow {
  std::string dataset;
  std::string algorithm;
  Aggregate aggregate;
};

struct NamedGrid {
  std::string name;  // file stem
  BoundaryGrid grid;
};

/// Writes <dir>/<table>.csv (rows dataset x group, one column per algorithm,
/// cells "mean±std"), <dir>/<table>_long.csv and one grid CSV per entry in
/// `grids` (x,y,max_prob,argmax). Returns the paths written.
std::vector<std::string> write_report(const std::vector<AggregateRow>& rows,
                                      const std::vector<NamedGrid>& grids, const std::string& dir,
                                      const std::string& table = "table1");

/// Parses <table>_long.csv (dataset,algorithm,group,mean,std,n) back into
/// rows, in file order.
std::vector<AggregateRow> read_long_table_csv(const std::string& path);

/// Cells of the layout table keyed by (dataset, group, algorithm); the value
/// is the raw "mean±std" text.
struct LayoutCell {
  std::string dataset, group, algorithm, text;
};
std::vector<LayoutCell> read_layout_table_csv(const std::string& path);

void write_grid_csv(const BoundaryGrid& grid, const std::string& path);

/// 17 significant digits.
std::string format_real(double v);

}  // namespace cissl

#endif  // CISSL_REPORT_HPP_
