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

#include "cissl/tiny_net.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>

#include "cissl/common.hpp"

namespace cissl {

std::size_t MlpShape::param_count() const {
  std::size_t n = 0;
  for (int l = 0; l < num_layers(); ++l) {
    const auto in = static_cast<std::size_t>(sizes[static_cast<std::size_t>(l)]);
    const auto out = static_cast<std::size_t>(sizes[static_cast<std::size_t>(l) + 1]);
    n += out * in + out;
  }
  return n;
}

std::size_t MlpShape::weight_offset(int l) const {
  std::size_t off = 0;
  for (int k = 0; k < l; ++k) {
    const auto in = static_cast<std::size_t>(sizes[static_cast<std::size_t>(k)]);
    const auto out = static_cast<std::size_t>(sizes[static_cast<std::size_t>(k) + 1]);
    off += out * in + out;
  }
  return off;
}

std::size_t MlpShape::bias_offset(int l) const {
  return weight_offset(l) + static_cast<std::size_t>(sizes[static_cast<std::size_t>(l)]) *
                                static_cast<std::size_t>(sizes[static_cast<std::size_t>(l) + 1]);
}

MlpShape make_shape(int hidden_width, int num_classes, int hidden_layers) {
  require(hidden_width >= 1, "hidden_width must be >= 1");
  require(num_classes >= 2, "need at least 2 classes");
  require(hidden_layers >= 1, "need at least one hidden layer");
  MlpShape s;
  s.sizes.push_back(2);
  for (int i = 0; i < hidden_layers; ++i) s.sizes.push_back(hidden_width);
  s.sizes.push_back(num_classes);
  return s;
}

MlpParams init_params(const MlpShape& shape, std::int64_t seed) {
  MlpParams p(shape);
  Rng rng = make_rng(seed, kStreamInit);
  for (int l = 0; l < shape.num_layers(); ++l) {
    const double limit = std::sqrt(3.0 / shape.sizes[static_cast<std::size_t>(l)]);
    std::uniform_real_distribution<double> dist(-limit, limit);
    auto w = p.weight(l);
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = dist(rng);
  }
  return p;
}

MlpParams init_params(int hidden_width, int num_classes, std::int64_t seed, int hidden_layers) {
  return init_params(make_shape(hidden_width, num_classes, hidden_layers), seed);
}

Matrix to_matrix(std::span<const Point2> points) {
  Matrix m(static_cast<Eigen::Index>(points.size()), 2);
  for (std::size_t i = 0; i < points.size(); ++i) {
    m(static_cast<Eigen::Index>(i), 0) = points[i].x;
    m(static_cast<Eigen::Index>(i), 1) = points[i].y;
  }
  return m;
}

ForwardTrace forward(const MlpParams& params, const Matrix& batch) {
  require(batch.rows() > 0, "forward: empty batch");
  require(batch.cols() == params.shape().sizes.front(), "forward: batch width mismatch");
  require(batch.allFinite(), "forward: non-finite input");
  ForwardTrace tr;
  tr.params = params;
  const int L = params.shape().num_layers();
  tr.activations.reserve(static_cast<std::size_t>(L));
  tr.pre_activations.reserve(static_cast<std::size_t>(L));
  tr.activations.push_back(batch);
  for (int l = 0; l < L; ++l) {
    Matrix z = tr.activations.back() * params.weight(l).transpose();
    z.rowwise() += params.bias(l).transpose();
    if (l + 1 < L) tr.activations.push_back(z.array().tanh().matrix());
    tr.pre_activations.push_back(std::move(z));
  }
  return tr;
}

Matrix softmax(const Matrix& logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    p.row(i) = (logits.row(i).array() - m).exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

GradientVec backward(const ForwardTrace& trace, const Matrix& dL_dlogits) {
  const Matrix& logits = trace.logits();
  require(dL_dlogits.rows() == logits.rows() && dL_dlogits.cols() == logits.cols(),
          "backward: gradient shape does not match logits");
  const MlpParams& p = trace.params;
  GradientVec g(p.shape());
  Matrix delta = dL_dlogits;
  for (int l = p.shape().num_layers() - 1; l >= 0; --l) {
    const Matrix& input = trace.activations[static_cast<std::size_t>(l)];
    g.weight(l) = delta.transpose() * input;
    g.bias(l) = delta.colwise().sum().transpose();
    if (l > 0) {
      Matrix back = delta * p.weight(l);
      delta = (back.array() * (1.0 - input.array().square())).matrix();
    }
  }
  return g;
}

std::vector<int> predict(const MlpParams& params, const Matrix& batch) {
  const Matrix logits = forward(params, batch).logits();
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    out[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return out;
}

double grad_check(const MlpParams& params, const ScalarLoss& loss, const GradCheckOptions& opts) {
  require(opts.eps > 0.0, "grad_check: eps must be positive");
  const LossAndGrad base = loss(params);
  require(base.grad.congruent(params), "grad_check: gradient shape mismatch");

  std::vector<std::size_t> coords(params.size());
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (opts.max_coords > 0 && opts.max_coords < coords.size()) {
    Rng rng = make_rng(opts.seed, kStreamInit);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(opts.max_coords);
  }

  double worst = 0.0;
  MlpParams probe = params;
  for (std::size_t c : coords) {
    const auto i = static_cast<Eigen::Index>(c);
    const double orig = probe.flat()(i);
    probe.flat()(i) = orig + opts.eps;
    const double up = loss(probe).loss;
    probe.flat()(i) = orig - opts.eps;
    const double down = loss(probe).loss;
    probe.flat()(i) = orig;
    const double cd = (up - down) / (2.0 * opts.eps);
    const double an = base.grad.flat()(i);
    const double denom = std::max({std::abs(an), std::abs(cd), 1e-8});
    worst = std::max(worst, std::abs(an - cd) / denom);
  }
  return worst;
}

namespace {
constexpr char kMagic[8] = {'C', 'I', 'S', 'S', 'L', 'P', '0', '1'};
static_assert(std::endian::native == std::endian::little,
              "snapshot I/O assumes a little-endian host");
}  // namespace

void save_params(const MlpParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(kMagic, sizeof kMagic);
  const auto n = static_cast<std::uint32_t>(params.shape().sizes.size());
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  for (int s : params.shape().sizes) {
    const auto v = static_cast<std::int32_t>(s);
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  out.write(reinterpret_cast<const char*>(params.flat().data()),
            static_cast<std::streamsize>(params.size() * sizeof(double)));
  if (!out) throw IoError("write failed for " + path);
}

MlpParams load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw IoError(path + ": not a parameter snapshot");
  std::uint32_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in || n < 2 || n > 64) throw IoError(path + ": corrupt shape header");
  MlpShape shape;
  for (std::uint32_t k = 0; k < n; ++k) {
    std::int32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in || v < 1) throw IoError(path + ": corrupt shape header");
    shape.sizes.push_back(v);
  }
  Vector flat(static_cast<Eigen::Index>(shape.param_count()));
  in.read(reinterpret_cast<char*>(flat.data()),
          static_cast<std::streamsize>(shape.param_count() * sizeof(double)));
  if (!in) throw IoError(path + ": truncated parameter data");
  return MlpParams(std::move(shape), std::move(flat));
}

}  // namespace cissl
