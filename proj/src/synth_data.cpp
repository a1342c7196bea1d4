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

#include "cissl/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <random>

#include "cissl/common.hpp"

namespace cissl {

void Dataset2D::validate() const {
  require(num_classes >= 2, "dataset needs at least 2 classes");
  require(points.size() == labels.size(), "points and labels differ in length");
  for (std::size_t i = 0; i < points.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < num_classes,
            "label out of range at row " + std::to_string(i));
    require(std::isfinite(points[i].x) && std::isfinite(points[i].y),
            "non-finite coordinate at row " + std::to_string(i));
  }
}

std::vector<int> Dataset2D::class_histogram() const {
  std::vector<int> h(static_cast<std::size_t>(num_classes), 0);
  for (int l : labels) ++h[static_cast<std::size_t>(l)];
  return h;
}

ClassCounts::ClassCounts(std::vector<int> counts) : counts_(std::move(counts)) {
  require(counts_.size() >= 2, "class counts need at least 2 classes");
  for (int c : counts_) require(c >= 1, "class counts must be >= 1");
}

int ClassCounts::total() const { return std::accumulate(counts_.begin(), counts_.end(), 0); }
int ClassCounts::max() const { return *std::max_element(counts_.begin(), counts_.end()); }
int ClassCounts::min() const { return *std::min_element(counts_.begin(), counts_.end()); }
int ClassCounts::major_class() const {
  return static_cast<int>(std::max_element(counts_.begin(), counts_.end()) - counts_.begin());
}
int ClassCounts::minor_class() const {
  return static_cast<int>(std::min_element(counts_.begin(), counts_.end()) - counts_.begin());
}

std::string to_string(UnlabeledType t) {
  switch (t) {
    case UnlabeledType::Uniform: return "uniform";
    case UnlabeledType::Half: return "half";
    case UnlabeledType::Same: return "same";
  }
  return "?";
}

UnlabeledType parse_unlabeled_type(const std::string& s) {
  if (s == "uniform") return UnlabeledType::Uniform;
  if (s == "half") return UnlabeledType::Half;
  if (s == "same") return UnlabeledType::Same;
  throw InvalidArgument("unknown unlabeled type '" + s + "' (uniform|half|same)");
}

Point2 moon_locus(int cls, double t, const MoonsGeometry& g) {
  const double cx = g.radius * std::cos(t);
  const double cy = g.radius * std::sin(t);
  if (cls == 0) return {cx, cy};
  return {g.offset_x - cx, g.offset_y - cy};
}

Point2 spin_locus(int cls, double u, const SpinsGeometry& g) {
  const double r = g.r_inner + (g.r_outer - g.r_inner) * u;
  const double a = cls * (std::numbers::pi / 2.0) + u * g.sweep;
  return {r * std::cos(a), r * std::sin(a)};
}

namespace {

template <typename Locus>
Dataset2D generate(int n_per_class, int num_classes, double noise_std, std::int64_t seed,
                   double param_hi, Locus locus) {
  require(n_per_class >= 1, "n_per_class must be >= 1");
  require(noise_std >= 0.0 && std::isfinite(noise_std), "noise_std must be >= 0");
  Rng rng = make_rng(seed, kStreamPool);
  std::uniform_real_distribution<double> param(0.0, param_hi);
  std::normal_distribution<double> unit(0.0, 1.0);

  Dataset2D d;
  d.num_classes = num_classes;
  d.points.reserve(static_cast<std::size_t>(n_per_class * num_classes));
  d.labels.reserve(d.points.capacity());
  for (int c = 0; c < num_classes; ++c) {
    for (int i = 0; i < n_per_class; ++i) {
      const Point2 p = locus(c, param(rng));
      const double nx = unit(rng);
      const double ny = unit(rng);
      d.points.push_back({p.x + noise_std * nx, p.y + noise_std * ny});
      d.labels.push_back(c);
    }
  }
  return d;
}

}  // namespace

Dataset2D gen_two_moons(int n_per_class, double noise_std, std::int64_t seed,
                        const MoonsGeometry& geometry) {
  return generate(n_per_class, 2, noise_std, seed, std::numbers::pi,
                  [&](int c, double t) { return moon_locus(c, t, geometry); });
}

Dataset2D gen_four_spins(int n_per_class, double noise_std, std::int64_t seed,
                         const SpinsGeometry& geometry) {
  return generate(n_per_class, 4, noise_std, seed, 1.0,
                  [&](int c, double u) { return spin_locus(c, u, geometry); });
}

ClassCounts imbalance_counts(int n_max, double rho, int num_classes) {
  require(n_max >= 1, "n_max must be >= 1");
  require(num_classes >= 2, "need at least 2 classes");
  require(rho >= 1.0 && std::isfinite(rho), "imbalance factor rho must be >= 1");
  std::vector<int> counts(static_cast<std::size_t>(num_classes));
  for (int k = 0; k < num_classes; ++k) {
    const double exact =
        n_max * std::pow(rho, -static_cast<double>(k) / static_cast<double>(num_classes - 1));
    counts[static_cast<std::size_t>(k)] = std::max(1, static_cast<int>(std::floor(exact + 0.5)));
  }
  return ClassCounts(std::move(counts));
}

double unlabeled_rho(UnlabeledType type, double rho_l) {
  switch (type) {
    case UnlabeledType::Uniform: return 1.0;
    // rho_l < 2 would give a factor below 1; the balanced profile is the floor.
    case UnlabeledType::Half: return std::max(1.0, rho_l / 2.0);
    case UnlabeledType::Same: return rho_l;
  }
  return rho_l;
}

CisslSplit::CisslSplit(Dataset2D labeled, Dataset2D unlabeled, Dataset2D validation,
                       ClassCounts labeled_counts, ClassCounts unlabeled_counts,
                       std::vector<int> rank_to_class, std::vector<std::size_t> labeled_idx,
                       std::vector<std::size_t> unlabeled_idx,
                       std::vector<std::size_t> validation_idx)
    : labeled_(std::move(labeled)),
      unlabeled_(std::move(unlabeled)),
      validation_(std::move(validation)),
      labeled_counts_(std::move(labeled_counts)),
      unlabeled_counts_(std::move(unlabeled_counts)),
      rank_to_class_(std::move(rank_to_class)),
      labeled_idx_(std::move(labeled_idx)),
      unlabeled_idx_(std::move(unlabeled_idx)),
      validation_idx_(std::move(validation_idx)) {}

CisslSplit make_cissl_split(const Dataset2D& pool, const ClassCounts& labeled_counts,
                            UnlabeledType unlabeled_type, double rho_l,
                            int n_unlabeled_max, int val_per_class, std::int64_t seed) {
  pool.validate();
  const int C = pool.num_classes;
  require(labeled_counts.num_classes() == C, "labeled counts do not match pool class count");
  require(rho_l >= 1.0, "rho_l must be >= 1");
  require(n_unlabeled_max >= 1, "n_unlabeled_max must be >= 1");
  require(val_per_class >= 0, "val_per_class must be >= 0");

  const ClassCounts unl_by_rank =
      imbalance_counts(n_unlabeled_max, unlabeled_rho(unlabeled_type, rho_l), C);

  Rng rng = make_rng(seed, kStreamSplit);
  std::vector<int> rank_to_class(static_cast<std::size_t>(C));
  std::iota(rank_to_class.begin(), rank_to_class.end(), 0);
  std::shuffle(rank_to_class.begin(), rank_to_class.end(), rng);

  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(C));
  for (std::size_t i = 0; i < pool.size(); ++i)
    by_class[static_cast<std::size_t>(pool.labels[i])].push_back(i);

  std::vector<int> lab_counts(static_cast<std::size_t>(C));
  std::vector<int> unl_counts(static_cast<std::size_t>(C));
  for (int r = 0; r < C; ++r) {
    const auto c = static_cast<std::size_t>(rank_to_class[static_cast<std::size_t>(r)]);
    lab_counts[c] = labeled_counts[r];
    unl_counts[c] = unl_by_rank[r];
  }

  Dataset2D lab, unl, val;
  lab.num_classes = unl.num_classes = val.num_classes = C;
  std::vector<std::size_t> lab_idx, unl_idx, val_idx;
  auto take = [&](Dataset2D& into, std::vector<std::size_t>& idx, std::size_t i) {
    into.points.push_back(pool.points[i]);
    into.labels.push_back(pool.labels[i]);
    idx.push_back(i);
  };
  for (int c = 0; c < C; ++c) {
    auto& members = by_class[static_cast<std::size_t>(c)];
    const auto need = static_cast<std::size_t>(lab_counts[static_cast<std::size_t>(c)]) +
                      static_cast<std::size_t>(unl_counts[static_cast<std::size_t>(c)]) +
                      static_cast<std::size_t>(val_per_class);
    if (members.size() < need) {
      throw CapacityError("pool too small for class " + std::to_string(c) + ": need " +
                          std::to_string(need) + ", have " + std::to_string(members.size()));
    }
    std::shuffle(members.begin(), members.end(), rng);
    std::size_t pos = 0;
    for (int k = 0; k < lab_counts[static_cast<std::size_t>(c)]; ++k) take(lab, lab_idx, members[pos++]);
    for (int k = 0; k < unl_counts[static_cast<std::size_t>(c)]; ++k) take(unl, unl_idx, members[pos++]);
    for (int k = 0; k < val_per_class; ++k) take(val, val_idx, members[pos++]);
  }

  return CisslSplit(std::move(lab), std::move(unl), std::move(val), ClassCounts(lab_counts),
                    ClassCounts(unl_counts), std::move(rank_to_class), std::move(lab_idx),
                    std::move(unl_idx), std::move(val_idx));
}

void write_split_csv(const CisslSplit& split, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << std::setprecision(17) << "x,y,label,partition\n";
  auto dump = [&](const Dataset2D& d, const char* name) {
    for (std::size_t i = 0; i < d.size(); ++i)
      out << d.points[i].x << ',' << d.points[i].y << ',' << d.labels[i] << ',' << name << '\n';
  };
  dump(split.labeled(), "labeled");
  dump(split.unlabeled_bookkeeping(), "unlabeled");
  dump(split.validation(), "validation");
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace cissl
