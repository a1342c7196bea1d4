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

#ifndef CISSL_LOSSES_HPP_
#define CISSL_LOSSES_HPP_

#include <span>
#include <string>
#include <vector>

#include "cissl/synth_data.hpp"
#include "cissl/tiny_net.hpp"

namespace cissl {

/// Class-imbalance handling for the supervised term.
struct ReweightSpec {
  enum class Kind { CE, IN, Focal, CB };
  Kind kind = Kind::CE;
  double focal_gamma = 2.0;  // Focal only, >= 0
  double cb_beta = 0.999;    // CB only, in [0, 1)

  static ReweightSpec ce() { return {}; }
  static ReweightSpec inverse() { return {Kind::IN}; }
  static ReweightSpec focal(double gamma = 2.0);
  static ReweightSpec class_balanced(double beta = 0.999);

  void validate() const;
  friend bool operator==(const ReweightSpec&, const ReweightSpec&) = default;
};

std::string to_string(const ReweightSpec& spec);

/// Shape of the suppression function g(N_c).
struct SclShape {
  enum class Kind { Exponential, Linear };
  Kind kind = Kind::Exponential;
  double beta = 0.5;  // Exponential only, in (0, 1]

  static SclShape exponential(double beta = 0.5);
  static SclShape linear() { return {Kind::Linear, 1.0}; }

  void validate() const;
  friend bool operator==(const SclShape&, const SclShape&) = default;
};

std::string to_string(const SclShape& shape);

/// A scalar loss with its gradient with respect to the pre-softmax logits.
struct LossOutput {
  double loss = 0.0;
  Matrix dL_dlogits;
  /// Samples whose true-class probability was floored at 1e-12.
  int clamped = 0;
};

/// Per-class multipliers. CE and Focal give ones; IN and CB are normalised so
/// the weights sum to the class count.
std::vector<double> class_weights(const ReweightSpec& spec, const ClassCounts& counts);

/// Batch mean of the (weighted) negative log-likelihood, or the focal loss.
/// `probs` must be softmax rows.
LossOutput supervised_loss(const Matrix& probs, std::span<const int> labels,
                           const ReweightSpec& spec, const ClassCounts& counts);

/// Batch mean of 0.5 * ||student - target||^2 on probabilities. The target is
/// a constant: no gradient reaches it.
LossOutput consistency_l2(const Matrix& student_probs, const Matrix& target_probs);

/// g(N_c) for the predicted class: beta^(1 - N_c/N_max) or N_c/N_max.
double scl_weight(const ClassCounts& counts, int predicted_class, const SclShape& shape);

/// consistency_l2 with every sample scaled by scl_weight of its predicted
/// class. The weights are constants with respect to the parameters.
LossOutput scl_consistency(const Matrix& student_probs, const Matrix& target_probs,
                           std::span<const int> predictions, const ClassCounts& counts,
                           const SclShape& shape);

/// Row-wise argmax (ties go to the lowest index).
std::vector<int> argmax_rows(const Matrix& m);

}  // namespace cissl

#endif  // CISSL_LOSSES_HPP_
