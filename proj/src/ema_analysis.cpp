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

#include "cissl/ema_analysis.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>

#include "cissl/common.hpp"
#include "cissl/losses.hpp"

namespace cissl {

namespace {

void check_indices(int t, int k) {
  require(t >= 1, "t must be >= 1");
  require(k >= 0 && k < t, "k must lie in [0, t)");
}

double student_coeff(int lag, double delta) {
  return (1.0 - std::pow(delta, lag)) / (1.0 - delta);
}

// Target coefficient when the EMA reads the freshly updated student.
double target_after_step(int lag, double delta, double gamma) {
  double sum = 0.0;
  for (int j = 0; j < lag; ++j)
    sum += std::pow(gamma, lag - j - 1) * (1.0 - std::pow(delta, j + 1)) / (1.0 - delta);
  return (1.0 - gamma) * sum;
}

}  // namespace

CoefficientTable sgd_coefficients(int t, double gamma, EmaTiming timing) {
  require(t >= 1, "t must be >= 1");
  require(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0,1]");
  const int shift = timing == EmaTiming::AfterStep ? 0 : 1;
  CoefficientTable table{t, std::vector<CoefficientEntry>(static_cast<std::size_t>(t))};
  for (int k = 0; k < t; ++k)
    table.entries[static_cast<std::size_t>(k)] = {1.0, 1.0 - std::pow(gamma, t - k - shift)};
  return table;
}

CoefficientEntry momentum_coefficients(int t, int k, double delta, double gamma,
                                       EmaTiming timing) {
  check_indices(t, k);
  require(delta >= 0.0 && delta < 1.0, "delta must lie in [0,1)");
  require(gamma > 0.0 && gamma <= 1.0, "gamma must lie in (0,1]");
  const int lag = t - k;
  CoefficientEntry e;
  e.student = student_coeff(lag, delta);
  if (timing == EmaTiming::AfterStep) {
    e.target = target_after_step(lag, delta, gamma);
  } else {
    e.target = lag > 1 ? target_after_step(lag - 1, delta, gamma) : 0.0;
  }
  return e;
}

double coefficient_gap(int t, int k, double delta, double gamma, EmaTiming timing) {
  const CoefficientEntry e = momentum_coefficients(t, k, delta, gamma, timing);
  return e.student - e.target;
}

UnrollResult brute_force_unroll(double gamma, double delta, const std::vector<Vector>& grads,
                                double lr, EmaTiming timing) {
  require(!grads.empty(), "brute_force_unroll: empty gradient sequence");
  const Eigen::Index n = grads.front().size();
  Vector v = Vector::Zero(n);
  Vector theta = Vector::Zero(n);
  Vector target = Vector::Zero(n);
  for (const Vector& g : grads) {
    require(g.size() == n, "brute_force_unroll: gradient sizes differ");
    if (timing == EmaTiming::BeforeStep) target = gamma * target + (1.0 - gamma) * theta;
    v = delta * v + lr * g;
    theta -= v;
    if (timing == EmaTiming::AfterStep) target = gamma * target + (1.0 - gamma) * theta;
  }
  return {theta, target};
}

UnrollResult reconstruct_from_coefficients(double gamma, double delta,
                                           const std::vector<Vector>& grads, double lr,
                                           EmaTiming timing) {
  require(!grads.empty(), "reconstruct_from_coefficients: empty gradient sequence");
  const int t = static_cast<int>(grads.size());
  UnrollResult r{Vector::Zero(grads.front().size()), Vector::Zero(grads.front().size())};
  for (int k = 0; k < t; ++k) {
    const CoefficientEntry e = momentum_coefficients(t, k, delta, gamma, timing);
    r.student_delta -= lr * e.student * grads[static_cast<std::size_t>(k)];
    r.target_delta -= lr * e.target * grads[static_cast<std::size_t>(k)];
  }
  return r;
}

std::vector<GapCurvePoint> gap_curve(double delta, double gamma, int max_lag) {
  require(max_lag >= 1, "max_lag must be >= 1");
  std::vector<GapCurvePoint> curve;
  curve.reserve(static_cast<std::size_t>(max_lag));
  for (int lag = 1; lag <= max_lag; ++lag) {
    const CoefficientEntry e = momentum_coefficients(lag, 0, delta, gamma);
    curve.push_back({lag, e.student, e.target, e.student - e.target});
  }
  return curve;
}

void write_gap_curve_csv(const std::vector<GapCurvePoint>& curve, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "lag,student_coeff,target_coeff,gap\n" << std::setprecision(17);
  for (const auto& p : curve)
    out << p.lag << ',' << p.student << ',' << p.target << ',' << p.gap << '\n';
  if (!out) throw IoError("write failed for " + path);
}

Matrix output_jacobian(const MlpParams& params, const Matrix& row) {
  require(row.rows() == 1, "output_jacobian: expects a single row");
  const ForwardTrace tr = forward(params, row);
  const Matrix p = softmax(tr.logits());
  const Eigen::Index C = p.cols();
  Matrix J(C, static_cast<Eigen::Index>(params.size()));
  for (Eigen::Index c = 0; c < C; ++c) {
    // d p_c / d logits = p_c (e_c - p)
    Matrix dz = -p(0, c) * p;
    dz(0, c) += p(0, c);
    J.row(c) = backward(tr, dz).flat().transpose();
  }
  return J;
}

GradientGap gradient_gap_estimate(const MlpParams& params, const MlpParams& target_params,
                                  const Matrix& student_inputs, const Matrix& target_inputs) {
  require(params.congruent(target_params), "gradient_gap_estimate: shapes differ");
  require(student_inputs.rows() == target_inputs.rows() && student_inputs.rows() > 0,
          "gradient_gap_estimate: branch batches differ");

  const ForwardTrace s_trace = forward(params, student_inputs);
  const Matrix ps = softmax(s_trace.logits());
  const Matrix pt_pi = softmax(forward(params, target_inputs).logits());
  const Matrix pt_mt = softmax(forward(target_params, target_inputs).logits());

  GradientGap gap;
  gap.pi_grad = backward(s_trace, consistency_l2(ps, pt_pi).dL_dlogits).flat();
  gap.mt_grad = backward(s_trace, consistency_l2(ps, pt_mt).dL_dlogits).flat();
  gap.exact = gap.mt_grad - gap.pi_grad;

  const Vector diff = params.flat() - target_params.flat();
  gap.first_order = Vector::Zero(diff.size());
  const Eigen::Index B = student_inputs.rows();
  for (Eigen::Index i = 0; i < B; ++i) {
    const Matrix Js = output_jacobian(params, student_inputs.row(i));
    const Matrix Jt = output_jacobian(params, target_inputs.row(i));
    gap.first_order += Js.transpose() * (Jt * diff);
  }
  gap.first_order /= static_cast<double>(B);
  gap.residual_norm = (gap.exact - gap.first_order).norm();
  return gap;
}

GradientGap gradient_gap_estimate(const MlpParams& params, const MlpParams& target_params,
                                  const Matrix& batch) {
  return gradient_gap_estimate(params, target_params, batch, batch);
}

}  // namespace cissl
