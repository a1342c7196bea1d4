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

#ifndef CISSL_EMA_ANALYSIS_HPP_
#define CISSL_EMA_ANALYSIS_HPP_

#include <string>
#include <vector>

#include "cissl/tiny_net.hpp"

namespace cissl {

/// When the target absorbs the student within an iteration.
///
/// AfterStep: theta'_t = gamma theta'_{t-1} + (1 - gamma) theta_t, the order the
/// trainers use. BeforeStep mixes in theta_{t-1} instead; its coefficients are
/// the AfterStep ones shifted by one iteration.
enum class EmaTiming { AfterStep, BeforeStep };

/// Coefficients of lr * grad_k in theta_t - theta_0 (student) and
/// theta'_t - theta_0 (target), both with a minus sign pulled out.
struct CoefficientEntry {
  double student = 0.0;
  double target = 0.0;
};

struct CoefficientTable {
  int t = 0;
  std::vector<CoefficientEntry> entries;  // indexed by k in [0, t)
};

/// Plain SGD: student coefficient 1, target 1 - gamma^(t-k) (AfterStep) or
/// 1 - gamma^(t-k-1) (BeforeStep).
CoefficientTable sgd_coefficients(int t, double gamma, EmaTiming timing = EmaTiming::AfterStep);

/// Momentum SGD (v <- delta v + lr g, theta <- theta - v). Student
/// (1 - delta^(t-k)) / (1 - delta); target
/// (1 - gamma) sum_{j=0}^{t-k-1} gamma^(t-k-j-1) (1 - delta^(j+1)) / (1 - delta).
CoefficientEntry momentum_coefficients(int t, int k, double delta, double gamma,
                                       EmaTiming timing = EmaTiming::AfterStep);

/// student - target for momentum_coefficients.
double coefficient_gap(int t, int k, double delta, double gamma,
                       EmaTiming timing = EmaTiming::AfterStep);

struct UnrollResult {
  Vector student_delta;  // theta_t - theta_0
  Vector target_delta;   // theta'_t - theta_0
};

/// Literal iteration of the momentum and EMA recurrences over a supplied
/// gradient sequence, starting from theta'_0 = theta_0. Independent of the
/// closed forms above.
UnrollResult brute_force_unroll(double gamma, double delta, const std::vector<Vector>& grads,
                                double lr = 1.0, EmaTiming timing = EmaTiming::AfterStep);

/// Rebuilds the unroll from a coefficient table: -lr * sum_k coeff_k grads[k].
UnrollResult reconstruct_from_coefficients(double gamma, double delta,
                                           const std::vector<Vector>& grads, double lr = 1.0,
                                           EmaTiming timing = EmaTiming::AfterStep);

struct GapCurvePoint {
  int lag = 0;  // t - k
  double student = 0.0;
  double target = 0.0;
  double gap = 0.0;
};

/// Coefficient gap as a function of the lag t - k, for lag = 1..max_lag.
std::vector<GapCurvePoint> gap_curve(double delta, double gamma, int max_lag);

/// CSV: lag,student_coeff,target_coeff,gap.
void write_gap_curve_csv(const std::vector<GapCurvePoint>& curve, const std::string& path);

/// Mean-Teacher minus Pi-model consistency gradient and its first-order
/// model.
///
/// With student inputs Xs and target inputs Xt, both gradients share the
/// factor J_s^T (the student Jacobian of the softmax outputs), so
///   exact       = (1/B) sum_i J_s,i^T (f_theta(Xt_i) - f_theta'(Xt_i))
///   first_order = (1/B) sum_i J_s,i^T J_t,i (theta - theta')
/// and exact - first_order is O(||theta - theta'||^2).
struct GradientGap {
  Vector exact;
  Vector first_order;
  Vector pi_grad;
  Vector mt_grad;
  double residual_norm = 0.0;  // ||exact - first_order||
};

GradientGap gradient_gap_estimate(const MlpParams& params, const MlpParams& target_params,
                                  const Matrix& student_inputs, const Matrix& target_inputs);

/// Same inputs on both branches.
GradientGap gradient_gap_estimate(const MlpParams& params, const MlpParams& target_params,
                                  const Matrix& batch);

/// Per-sample Jacobian of the softmax outputs w.r.t. the flat parameters
/// (C x P).
Matrix output_jacobian(const MlpParams& params, const Matrix& row);

}  // namespace cissl

#endif  // CISSL_EMA_ANALYSIS_HPP_
