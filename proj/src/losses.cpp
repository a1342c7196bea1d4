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

#include "cissl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cissl/common.hpp"

namespace cissl {

namespace {

constexpr double kProbFloor = 1e-12;

// Pulls a gradient on probabilities back through the softmax, row by row.
Matrix softmax_pullback(const Matrix& probs, const Matrix& dL_dprobs) {
  Matrix out(probs.rows(), probs.cols());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    const double dot = dL_dprobs.row(i).dot(probs.row(i));
    out.row(i) = (probs.row(i).array() * (dL_dprobs.row(i).array() - dot)).matrix();
  }
  return out;
}

LossOutput weighted_consistency(const Matrix& student, const Matrix& target,
                                std::span<const double> weights) {
  require(student.rows() == target.rows() && student.cols() == target.cols(),
          "consistency: student and target shapes differ");
  LossOutput out;
  const Eigen::Index B = student.rows();
  if (B == 0) {
    out.dL_dlogits = Matrix::Zero(0, student.cols());
    return out;
  }
  const double inv_b = 1.0 / static_cast<double>(B);
  Matrix dp(B, student.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < B; ++i) {
    const auto w = weights[static_cast<std::size_t>(i)];
    const auto diff = (student.row(i) - target.row(i)).eval();
    total += w * 0.5 * diff.squaredNorm();
    dp.row(i) = (w * inv_b) * diff;
  }
  out.loss = total * inv_b;
  out.dL_dlogits = softmax_pullback(student, dp);
  return out;
}

}  // namespace

ReweightSpec ReweightSpec::focal(double gamma) {
  ReweightSpec s{Kind::Focal, gamma, 0.999};
  s.validate();
  return s;
}

ReweightSpec ReweightSpec::class_balanced(double beta) {
  ReweightSpec s{Kind::CB, 2.0, beta};
  s.validate();
  return s;
}

void ReweightSpec::validate() const {
  if (kind == Kind::Focal)
    require(focal_gamma >= 0.0 && std::isfinite(focal_gamma), "focal gamma must be >= 0");
  if (kind == Kind::CB)
    require(cb_beta >= 0.0 && cb_beta < 1.0, "cb beta must lie in [0,1)");
}

std::string to_string(const ReweightSpec& spec) {
  std::ostringstream os;
  switch (spec.kind) {
    case ReweightSpec::Kind::CE: return "ce";
    case ReweightSpec::Kind::IN: return "in";
    case ReweightSpec::Kind::Focal: os << "focal(" << spec.focal_gamma << ")"; break;
    case ReweightSpec::Kind::CB: os << "cb(" << spec.cb_beta << ")"; break;
  }
  return os.str();
}

SclShape SclShape::exponential(double beta) {
  SclShape s{Kind::Exponential, beta};
  s.validate();
  return s;
}

void SclShape::validate() const {
  if (kind == Kind::Exponential) require(beta > 0.0 && beta <= 1.0, "beta must lie in (0,1]");
}

std::string to_string(const SclShape& shape) {
  if (shape.kind == SclShape::Kind::Linear) return "linear";
  std::ostringstream os;
  os << "exp(" << shape.beta << ")";
  return os.str();
}

std::vector<double> class_weights(const ReweightSpec& spec, const ClassCounts& counts) {
  spec.validate();
  const auto C = static_cast<std::size_t>(counts.num_classes());
  std::vector<double> w(C, 1.0);
  if (spec.kind == ReweightSpec::Kind::CE || spec.kind == ReweightSpec::Kind::Focal) return w;
  for (std::size_t c = 0; c < C; ++c) {
    const double n = counts[static_cast<int>(c)];
    if (spec.kind == ReweightSpec::Kind::IN) {
      w[c] = 1.0 / n;
    } else {
      // Inverse of the effective number (1 - beta^n) / (1 - beta).
      w[c] = (1.0 - spec.cb_beta) / (1.0 - std::pow(spec.cb_beta, n));
    }
  }
  // C / sum_k (w_k / w_c): exactly 1 whenever all raw weights agree.
  std::vector<double> out(C);
  for (std::size_t c = 0; c < C; ++c) {
    double ratio_sum = 0.0;
    for (std::size_t k = 0; k < C; ++k) ratio_sum += w[k] / w[c];
    out[c] = static_cast<double>(C) / ratio_sum;
  }
  return out;
}

LossOutput supervised_loss(const Matrix& probs, std::span<const int> labels,
                           const ReweightSpec& spec, const ClassCounts& counts) {
  const Eigen::Index B = probs.rows();
  const Eigen::Index C = probs.cols();
  require(static_cast<std::size_t>(B) == labels.size(), "supervised_loss: label count mismatch");
  require(C == counts.num_classes(), "supervised_loss: class count mismatch");
  const std::vector<double> w = class_weights(spec, counts);

  LossOutput out;
  out.dL_dlogits = Matrix::Zero(B, C);
  if (B == 0) return out;
  const double inv_b = 1.0 / static_cast<double>(B);
  double total = 0.0;
  for (Eigen::Index i = 0; i < B; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    require(y >= 0 && y < C, "supervised_loss: label out of range");
    double p = probs(i, y);
    if (p < kProbFloor) {
      p = kProbFloor;
      ++out.clamped;
    }
    const double nll = -std::log(p);
    // d(loss_i)/d(logits_i) = coef * (probs_i - onehot(y)).
    double coef = 0.0;
    if (spec.kind == ReweightSpec::Kind::Focal) {
      const double g = spec.focal_gamma;
      const double q = 1.0 - p;
      total += std::pow(q, g) * nll;
      const double grow = (g > 0.0 && q > 0.0) ? g * std::pow(q, g - 1.0) * p * nll : 0.0;
      coef = std::pow(q, g) + grow;
    } else {
      const double wy = w[static_cast<std::size_t>(y)];
      total += wy * nll;
      coef = wy;
    }
    out.dL_dlogits.row(i) = (coef * inv_b) * probs.row(i);
    out.dL_dlogits(i, y) -= coef * inv_b;
  }
  out.loss = total * inv_b;
  return out;
}

LossOutput consistency_l2(const Matrix& student_probs, const Matrix& target_probs) {
  const std::vector<double> ones(static_cast<std::size_t>(student_probs.rows()), 1.0);
  return weighted_consistency(student_probs, target_probs, ones);
}

double scl_weight(const ClassCounts& counts, int predicted_class, const SclShape& shape) {
  require(predicted_class >= 0 && predicted_class < counts.num_classes(),
          "scl_weight: predicted class out of range");
  shape.validate();
  const double ratio =
      static_cast<double>(counts[predicted_class]) / static_cast<double>(counts.max());
  if (shape.kind == SclShape::Kind::Linear) return ratio;
  return std::pow(shape.beta, 1.0 - ratio);
}

LossOutput scl_consistency(const Matrix& student_probs, const Matrix& target_probs,
                           std::span<const int> predictions, const ClassCounts& counts,
                           const SclShape& shape) {
  require(predictions.size() == static_cast<std::size_t>(student_probs.rows()),
          "scl_consistency: prediction count mismatch");
  std::vector<double> w(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i)
    w[i] = scl_weight(counts, predictions[i], shape);
  return weighted_consistency(student_probs, target_probs, w);
}

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::Index arg = 0;
    m.row(i).maxCoeff(&arg);
    out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return out;
}

}  // namespace cissl
