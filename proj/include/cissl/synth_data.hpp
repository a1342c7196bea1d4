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

#ifndef CISSL_SYNTH_DATA_HPP_
#define CISSL_SYNTH_DATA_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cissl {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

/// Labelled 2-D points with class indices in [0, num_classes).
struct Dataset2D {
  std::vector<Point2> points;
  std::vector<int> labels;
  int num_classes = 2;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  /// Throws InvalidArgument when lengths differ, a label is out of range or a
  /// coordinate is not finite.
  void validate() const;

  /// Number of samples per class (zero allowed).
  std::vector<int> class_histogram() const;

  friend bool operator==(const Dataset2D&, const Dataset2D&) = default;
};

/// Per-class sample counts, every entry >= 1.
class ClassCounts {
 public:
  ClassCounts() = default;
  explicit ClassCounts(std::vector<int> counts);

  int num_classes() const { return static_cast<int>(counts_.size()); }
  int operator[](int c) const { return counts_.at(static_cast<std::size_t>(c)); }
  const std::vector<int>& values() const { return counts_; }
  int total() const;
  int max() const;
  int min() const;
  /// Most frequent class; ties resolve to the lowest index.
  int major_class() const;
  /// Least frequent class; ties resolve to the lowest index.
  int minor_class() const;

  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;

 private:
  std::vector<int> counts_;
};

enum class UnlabeledType { Uniform, Half, Same };

std::string to_string(UnlabeledType t);
UnlabeledType parse_unlabeled_type(const std::string& s);

/// Geometry of the moons. The lower arc is the upper arc mirrored through the
/// origin and shifted by (offset_x, offset_y).
struct MoonsGeometry {
  double radius = 1.0;
  double offset_x = 1.0;
  double offset_y = 0.5;
};

/// Geometry of the spiral arms. Arm k is r = r_inner + (r_outer - r_inner) u
/// at angle k*pi/2 + u*sweep, u in [0, 1].
struct SpinsGeometry {
  double r_inner = 0.25;
  double r_outer = 2.0;
  double sweep = 3.141592653589793;
};

/// Noise-free point on class `cls`'s moon at arc parameter t in [0, pi].
Point2 moon_locus(int cls, double t, const MoonsGeometry& g = {});
/// Noise-free point on arm `cls` at arm parameter u in [0, 1].
Point2 spin_locus(int cls, double u, const SpinsGeometry& g = {});

/// Two interleaved half-circles. The random stream is consumed identically
/// for every noise_std, so the noise-free loci of a seed are recovered with
/// noise_std = 0.
Dataset2D gen_two_moons(int n_per_class, double noise_std, std::int64_t seed,
                        const MoonsGeometry& geometry = {});

/// Four Archimedean spiral arms, class k rotated by k*pi/2.
Dataset2D gen_four_spins(int n_per_class, double noise_std, std::int64_t seed,
                         const SpinsGeometry& geometry = {});

/// Long-tailed counts: rank k (0-based) receives
/// round(n_max * rho^(-k/(C-1))), rounded half up and floored at 1.
ClassCounts imbalance_counts(int n_max, double rho, int num_classes);

/// Imbalance factor of the unlabeled set for a given labeled factor.
double unlabeled_rho(UnlabeledType type, double rho_l);

/// Labelled / unlabeled / validation partitions over a pool.
///
/// The unlabeled partition keeps its ground truth for bookkeeping (dumps and
/// diagnostics); trainers only see unlabeled_points().
class CisslSplit {
 public:
  CisslSplit(Dataset2D labeled, Dataset2D unlabeled, Dataset2D validation,
             ClassCounts labeled_counts, ClassCounts unlabeled_counts,
             std::vector<int> rank_to_class, std::vector<std::size_t> labeled_idx,
             std::vector<std::size_t> unlabeled_idx,
             std::vector<std::size_t> validation_idx);

  const Dataset2D& labeled() const { return labeled_; }
  std::span<const Point2> unlabeled_points() const { return unlabeled_.points; }
  const Dataset2D& validation() const { return validation_; }
  /// Per-class counts, indexed by class (not rank).
  const ClassCounts& labeled_counts() const { return labeled_counts_; }
  const ClassCounts& unlabeled_counts() const { return unlabeled_counts_; }
  /// rank_to_class()[r] is the class holding frequency rank r (0 = major).
  const std::vector<int>& rank_to_class() const { return rank_to_class_; }
  int num_classes() const { return labeled_.num_classes; }

  // Pool indices of each partition.
  const std::vector<std::size_t>& labeled_indices() const { return labeled_idx_; }
  const std::vector<std::size_t>& unlabeled_indices() const { return unlabeled_idx_; }
  const std::vector<std::size_t>& validation_indices() const { return validation_idx_; }

  /// Ground truth of the unlabeled partition. Not for trainers.
  const Dataset2D& unlabeled_bookkeeping() const { return unlabeled_; }

 private:
  Dataset2D labeled_;
  Dataset2D unlabeled_;
  Dataset2D validation_;
  ClassCounts labeled_counts_;
  ClassCounts unlabeled_counts_;
  std::vector<int> rank_to_class_;
  std::vector<std::size_t> labeled_idx_;
  std::vector<std::size_t> unlabeled_idx_;
  std::vector<std::size_t> validation_idx_;
};

/// Carves a split from `pool`. `labeled_counts` is given in rank order (rank 0
/// is the most frequent); a seed-dependent permutation assigns ranks to
/// classes. Unlabeled counts follow imbalance_counts(n_unlabeled_max, rho_u, C).
/// Throws CapacityError naming the first class the pool cannot serve.
CisslSplit make_cissl_split(const Dataset2D& pool, const ClassCounts& labeled_counts,
                            UnlabeledType unlabeled_type, double rho_l,
                            int n_unlabeled_max, int val_per_class, std::int64_t seed);

/// Writes x,y,label,partition rows for every point of the split.
void write_split_csv(const CisslSplit& split, const std::string& path);

}  // namespace cissl

#endif  // CISSL_SYNTH_DATA_HPP_
