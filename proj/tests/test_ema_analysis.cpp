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

#include "doctest.h"

#include "cissl/common.hpp"
#include "cissl/ema_analysis.hpp"
#include "cissl/losses.hpp"

using namespace cissl;

namespace {

std::vector<Vector> random_grads(int t, int dim, std::int64_t seed) {
  Rng rng = make_rng(seed, 31);
  std::normal_distribution<double> n;
  std::vector<Vector> g(static_cast<std::size_t>(t), Vector(dim));
  for (auto& v : g)
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = n(rng);
  return g;
}

// Scalar unroll written here, separate from the library's vector version.
// Returns (student, target) displacement coefficient of a unit impulse at k.
std::pair<double, double> impulse_response(int t, int k, double delta, double gamma, bool before) {
  double v = 0.0, theta = 0.0, target = 0.0;
  for (int s = 0; s < t; ++s) {
    const double prev = theta;
    v = delta * v + (s == k ? 1.0 : 0.0);
    theta -= v;
    target = gamma * target + (1 - gamma) * (before ? prev : theta);
  }
  return {-theta, -target};
}

MlpParams perturbed(const MlpParams& p, const Vector& dir, double h) {
  MlpParams q = p;
  q.flat() += h * dir;
  return q;
}

Matrix grid_batch(int n, double lo, double hi) {
  Matrix m(n * n, 2);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      m(i * n + j, 0) = lo + (hi - lo) * i / (n - 1);
      m(i * n + j, 1) = lo + (hi - lo) * j / (n - 1);
    }
  return m;
}

}  // namespace

TEST_CASE("sgd coefficients: literal target exponent t-k-1") {
  const auto tab = sgd_coefficients(3, 0.5, EmaTiming::BeforeStep);
  REQUIRE(tab.entries.size() == 3);
  CHECK(tab.entries[0].target == 0.75);
  CHECK(tab.entries[2].target == 0.0);
  for (const auto& e : tab.entries) CHECK(e.student == 1.0);
}

TEST_CASE("sgd coefficients: after-step timing") {
  const auto tab = sgd_coefficients(3, 0.5);
  CHECK(tab.entries[0].target == 0.875);
  CHECK(tab.entries[2].target == 0.5);
  const auto frozen = sgd_coefficients(10, 1.0);
  for (const auto& e : frozen.entries) CHECK(e.target == 0.0);
  const auto nearly = sgd_coefficients(10, 1.0 - 1e-12);
  for (const auto& e : nearly.entries) CHECK(e.target < 1e-10);
  CHECK_THROWS_AS(sgd_coefficients(0, 0.5), InvalidArgument);
}

TEST_CASE("momentum coefficients: limits and single-term case") {
  for (double gamma : {0.5, 0.95, 0.999}) {
    for (auto timing : {EmaTiming::AfterStep, EmaTiming::BeforeStep}) {
      const auto tab = sgd_coefficients(12, gamma, timing);
      for (int k = 0; k < 12; ++k) {
        const auto m = momentum_coefficients(12, k, 0.0, gamma, timing);
        CHECK(m.student == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(m.target == doctest::Approx(tab.entries[k].target).epsilon(1e-12));
      }
    }
    const auto one = momentum_coefficients(5, 4, 0.9, gamma);
    CHECK(one.student == 1.0);
    CHECK(one.target == doctest::Approx(1 - gamma).epsilon(1e-15));
    CHECK(coefficient_gap(5, 4, 0.0, gamma, EmaTiming::BeforeStep) == 1.0);
  }
  CHECK_THROWS_AS(momentum_coefficients(5, 5, 0.5, 0.5), InvalidArgument);
  CHECK_THROWS_AS(momentum_coefficients(5, 1, 1.0, 0.5), InvalidArgument);
}

TEST_CASE("closed forms agree with an impulse-response unroll") {
  for (double delta : {0.0, 0.5, 0.9})
    for (double gamma : {0.5, 0.95, 0.999})
      for (auto timing : {EmaTiming::AfterStep, EmaTiming::BeforeStep})
        for (int t : {1, 2, 10, 57})
          for (int k = 0; k < t; ++k) {
            const auto [s, g] = impulse_response(t, k, delta, gamma, timing == EmaTiming::BeforeStep);
            const auto m = momentum_coefficients(t, k, delta, gamma, timing);
            CHECK(std::abs(m.student - s) < 1e-12);
            CHECK(std::abs(m.target - g) < 1e-12);
          }
}

TEST_CASE("brute-force unroll examples") {
  const auto zeros = std::vector<Vector>(5, Vector::Zero(3));
  const auto z = brute_force_unroll(0.9, 0.5, zeros);
  CHECK(z.student_delta.isZero(0.0));
  CHECK(z.target_delta.isZero(0.0));

  const auto g = random_grads(1, 4, 2);
  const auto one = brute_force_unroll(0.95, 0.9, g, 0.3);
  CHECK((one.student_delta + 0.3 * g[0]).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((one.target_delta + 0.05 * 0.3 * g[0]).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("brute-force unroll matches the coefficient reconstruction for random gradients") {
  for (auto timing : {EmaTiming::AfterStep, EmaTiming::BeforeStep})
    for (double delta : {0.0, 0.5, 0.9})
      for (double gamma : {0.5, 0.95, 0.999}) {
        const auto g = random_grads(50, 6, int(delta * 10 + gamma * 100));
        const auto a = brute_force_unroll(gamma, delta, g, 1.0, timing);
        const auto b = reconstruct_from_coefficients(gamma, delta, g, 1.0, timing);
        CHECK((a.student_delta - b.student_delta).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((a.target_delta - b.target_delta).cwiseAbs().maxCoeff() < 1e-10);
      }
}

TEST_CASE("property: coefficient gap is nonnegative and target lags the student") {
  for (double delta = 0.0; delta < 0.999; delta += 0.0999)
    for (double gamma : {0.01, 0.3, 0.5, 0.8, 0.95, 0.99, 0.999, 1.0}) {
      double prev_target = -1.0;
      for (int lag = 1; lag <= 300; lag += 7) {
        const auto m = momentum_coefficients(lag, 0, delta, gamma);
        CHECK(m.target >= -1e-15);
        CHECK(m.student - m.target >= -1e-12);
        CHECK(m.target >= prev_target - 1e-15);
        prev_target = m.target;
      }
    }
}

TEST_CASE("gap vanishes as gamma approaches zero") {
  for (double delta : {0.0, 0.5, 0.9})
    for (int lag : {1, 5, 40}) CHECK(std::abs(coefficient_gap(lag, 0, delta, 1e-12)) < 1e-9);
}

TEST_CASE("gap curve export") {
  const auto curve = gap_curve(0.9, 0.95, 1000);
  REQUIRE(curve.size() == 1000);
  CHECK(curve.front().lag == 1);
  CHECK(curve.back().lag == 1000);
  for (const auto& p : curve) {
    CHECK(p.gap >= -1e-12);
    CHECK(p.gap == doctest::Approx(p.student - p.target).epsilon(1e-15));
  }
  CHECK(curve.back().student == doctest::Approx(10.0).epsilon(1e-9));
  const auto path = (std::filesystem::temp_directory_path() / "cissl_gap_curve.csv").string();
  write_gap_curve_csv(curve, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "lag,student_coeff,target_coeff,gap");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 1000);
  std::filesystem::remove(path);
}

TEST_CASE("output Jacobian agrees with finite differences of the softmax") {
  const auto p = init_params(5, 3, 4);
  Matrix x(1, 2);
  x << 0.3, -0.7;
  const Matrix J = output_jacobian(p, x);
  REQUIRE(J.rows() == 3);
  REQUIRE(J.cols() == static_cast<Eigen::Index>(p.shape().param_count()));
  const double eps = 1e-6;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < J.cols(); ++j) {
    MlpParams a = p, b = p;
    a.flat()[j] += eps;
    b.flat()[j] -= eps;
    const Matrix d = (softmax(forward(a, x).logits()) - softmax(forward(b, x).logits())) / (2 * eps);
    worst = std::max(worst, (d.transpose() - J.col(j)).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("gradient gap: identical parameters give exactly zero") {
  const auto p = init_params(8, 2, 5);
  const auto g = gradient_gap_estimate(p, p, grid_batch(4, -1, 1));
  CHECK(g.exact.isZero(0.0));
  CHECK(g.first_order.isZero(0.0));
  CHECK(g.residual_norm == 0.0);
  CHECK(g.pi_grad.isZero(0.0));
}

TEST_CASE("gradient gap: exact difference matches the losses module") {
  const auto p = init_params(6, 3, 6);
  Rng rng = make_rng(6, 6);
  std::normal_distribution<double> n;
  Vector u(p.flat().size());
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = n(rng);
  const auto q = perturbed(p, u, 0.05);
  const Matrix xs = grid_batch(3, -1, 1), xt = grid_batch(3, -0.9, 1.1);
  const auto g = gradient_gap_estimate(p, q, xs, xt);
  const auto tr = forward(p, xs);
  const Matrix ps = softmax(tr.logits());
  const auto mt = backward(tr, consistency_l2(ps, softmax(forward(q, xt).logits())).dL_dlogits);
  const auto pi = backward(tr, consistency_l2(ps, softmax(forward(p, xt).logits())).dL_dlogits);
  CHECK((g.mt_grad - mt.flat()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((g.pi_grad - pi.flat()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((g.exact - (mt.flat() - pi.flat())).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("gradient gap: residual shrinks at second order") {
  const auto p = init_params(10, 3, 7);
  Rng rng = make_rng(7, 7);
  std::normal_distribution<double> n;
  Vector u(p.flat().size());
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = n(rng);
  u /= u.norm();
  const Matrix x = grid_batch(5, -1.5, 1.5);
  std::vector<double> res, lin;
  for (double h : {1e-2, 1e-3, 1e-4}) {
    const auto g = gradient_gap_estimate(p, perturbed(p, u, h), x);
    res.push_back(g.residual_norm);
    lin.push_back(g.exact.norm());
  }
  for (int i = 0; i + 1 < 3; ++i) {
    CHECK(std::log10(res[i] / res[i + 1]) >= 1.8);
    CHECK(std::log10(lin[i] / lin[i + 1]) == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("gradient gap: high-confidence inputs behave like the Pi model") {
  auto p = init_params(8, 2, 8);
  const int last = p.shape().num_layers() - 1;
  p.weight(last) *= 30.0;
  Rng rng = make_rng(8, 8);
  std::normal_distribution<double> n;
  Vector u(p.flat().size());
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = n(rng);
  const auto q = perturbed(p, u / u.norm(), 1e-2);

  // Split a dense sweep by confidence of the student.
  const Matrix sweep = grid_batch(60, -6, 6);
  const Matrix probs = softmax(forward(p, sweep).logits());
  std::vector<Eigen::Index> unsure, sure;
  for (Eigen::Index i = 0; i < sweep.rows(); ++i) {
    const double m = probs.row(i).maxCoeff();
    if (m < 0.9) unsure.push_back(i);
    if (m > 1 - 1e-10) sure.push_back(i);
  }
  REQUIRE(unsure.size() >= 5);
  REQUIRE(sure.size() >= 5);
  const auto take = [&](const std::vector<Eigen::Index>& rows) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), 2);
    for (std::size_t r = 0; r < rows.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = sweep.row(rows[r]);
    return m;
  };
  const double near = gradient_gap_estimate(p, q, take(unsure)).exact.norm();
  const double far = gradient_gap_estimate(p, q, take(sure)).exact.norm();
  CHECK(near > 0.0);
  CHECK(far < 1e-6 * near);
}
