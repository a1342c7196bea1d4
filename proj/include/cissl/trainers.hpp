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

#ifndef CISSL_TRAINERS_HPP_
#define CISSL_TRAINERS_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cissl/common.hpp"
#include "cissl/losses.hpp"
#include "cissl/optim.hpp"
#include "cissl/synth_data.hpp"
#include "cissl/tiny_net.hpp"

namespace cissl {

struct AlgorithmSpec {
  enum class Kind { Supervised, PiModel, MeanTeacher, PseudoLabel, MeanTeacherScl };
  Kind kind = Kind::Supervised;
  ReweightSpec reweight;
  double pl_threshold = 0.95;  // PseudoLabel, in (0, 1]
  SclShape scl;                // MeanTeacherScl
  /// MeanTeacherScl: take the suppressed class from the EMA target's argmax
  /// instead of the student's.
  bool scl_target_argmax = false;

  static AlgorithmSpec of(Kind k) {
    AlgorithmSpec a;
    a.kind = k;
    return a;
  }
  static AlgorithmSpec supervised() { return {}; }
  static AlgorithmSpec pi_model() { return of(Kind::PiModel); }
  static AlgorithmSpec mean_teacher() { return of(Kind::MeanTeacher); }
  static AlgorithmSpec pseudo_label(double threshold = 0.95);
  static AlgorithmSpec mean_teacher_scl(SclShape shape = SclShape::exponential());

  bool uses_ema() const { return kind == Kind::MeanTeacher || kind == Kind::MeanTeacherScl; }
  void validate() const;
  friend bool operator==(const AlgorithmSpec&, const AlgorithmSpec&) = default;
};

std::string to_string(AlgorithmSpec::Kind kind);
AlgorithmSpec::Kind parse_algorithm_kind(const std::string& s);

struct TrainConfig {
  Schedule schedule;
  int labeled_batch = 32;
  int unlabeled_batch = 32;
  bool with_replacement = true;
  /// Std of the isotropic Gaussian input perturbation.
  double noise_std = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  double ema_gamma = 0.95;
  int hidden_width = 64;
  int hidden_layers = 2;
  /// History rows are written every eval_every iterations and at the end.
  int eval_every = 500;
  std::int64_t seed = 0;

  void validate() const;
};

struct Batches {
  Matrix labeled;
  std::vector<int> labels;
  Matrix unlabeled;
};

/// Uniform draws from each partition, independently. An empty unlabeled
/// partition yields an empty unlabeled batch.
Batches sample_batch(const CisslSplit& split, const TrainConfig& config, Rng& rng);

/// Adds N(0, noise_std^2) to every coordinate. Always consumes 2 normals per
/// row so the stream does not depend on noise_std.
Matrix perturb(const Matrix& batch, double noise_std, Rng& rng);

/// Per-class error rate; nullopt for classes absent from the dataset.
using ClassErrors = std::vector<std::optional<double>>;
ClassErrors evaluate(const MlpParams& params, const Dataset2D& dataset);

struct HistoryEntry {
  int iteration = 0;
  double lr = 0.0;
  double w = 0.0;
  /// Means over the iterations since the previous entry.
  double sup_loss = 0.0;
  double con_loss = 0.0;
  ClassErrors val_errors;
  /// Errors of the EMA target; empty when the algorithm keeps none.
  ClassErrors target_val_errors;
};

struct RunResult {
  MlpParams student;
  std::optional<MlpParams> target;
  std::vector<HistoryEntry> history;
  double wall_seconds = 0.0;
};

/// Fired after every optimizer step (and EMA update).
struct StepEvent {
  int iteration = 0;  // steps completed
  const MlpParams& student;
  const MlpParams* target;  // null unless the algorithm keeps an EMA
};
using StepObserver = std::function<void(const StepEvent&)>;

/// Thrown when a loss turns non-finite; carries the last finite state.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int iteration, MlpParams snapshot)
      : std::runtime_error(what), iteration_(iteration), snapshot_(std::move(snapshot)) {}
  int iteration() const { return iteration_; }
  const MlpParams& snapshot() const { return snapshot_; }

 private:
  int iteration_;
  MlpParams snapshot_;
};

/// Objective: L_sup + w(t) * L_con. The random stream (batches, three
/// perturbations per step) is identical across algorithms for a given seed.
RunResult train(const CisslSplit& split, const AlgorithmSpec& algo, const TrainConfig& config,
                const StepObserver& observer = {});

/// CSV: iteration,lr,w,sup_loss,con_loss,val_err_0..,[target_val_err_0..].
void write_history_csv(const RunResult& result, int num_classes, const std::string& path);

}  // namespace cissl

#endif  // CISSL_TRAINERS_HPP_
