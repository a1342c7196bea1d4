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

#ifndef CISSL_TINY_NET_HPP_
#define CISSL_TINY_NET_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "cissl/synth_data.hpp"

namespace cissl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Layer widths, input first: {2, H, H, C} for the default network.
struct MlpShape {
  std::vector<int> sizes;

  int num_layers() const { return static_cast<int>(sizes.size()) - 1; }
  int num_classes() const { return sizes.back(); }
  std::size_t param_count() const;
  /// Offset of layer l's weight block in the flat vector; its bias follows.
  std::size_t weight_offset(int l) const;
  std::size_t bias_offset(int l) const;

  friend bool operator==(const MlpShape&, const MlpShape&) = default;
};

/// Builds {2, H, ..., H, C} with `hidden_layers` hidden layers.
MlpShape make_shape(int hidden_width, int num_classes, int hidden_layers = 2);

/// One flat buffer of reals partitioned into per-layer (W, b) blocks. W of
/// layer l is sizes[l+1] x sizes[l], column major.
template <typename Tag>
class LayeredVector {
 public:
  using MatMap = Eigen::Map<Eigen::MatrixXd>;
  using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
  using VecMap = Eigen::Map<Eigen::VectorXd>;
  using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

  LayeredVector() = default;
  explicit LayeredVector(MlpShape shape)
      : shape_(std::move(shape)), flat_(Vector::Zero(static_cast<Eigen::Index>(shape_.param_count()))) {}
  LayeredVector(MlpShape shape, Vector flat) : shape_(std::move(shape)), flat_(std::move(flat)) {
    if (static_cast<std::size_t>(flat_.size()) != shape_.param_count())
      throw std::invalid_argument("flat vector length does not match shape");
  }

  const MlpShape& shape() const { return shape_; }
  const Vector& flat() const { return flat_; }
  Vector& flat() { return flat_; }
  std::size_t size() const { return static_cast<std::size_t>(flat_.size()); }

  ConstMatMap weight(int l) const {
    return {flat_.data() + shape_.weight_offset(l), rows(l), cols(l)};
  }
  MatMap weight(int l) { return {flat_.data() + shape_.weight_offset(l), rows(l), cols(l)}; }
  ConstVecMap bias(int l) const { return {flat_.data() + shape_.bias_offset(l), rows(l)}; }
  VecMap bias(int l) { return {flat_.data() + shape_.bias_offset(l), rows(l)}; }

  bool congruent(const LayeredVector& o) const { return shape_ == o.shape_; }
  template <typename Other>
  bool congruent(const LayeredVector<Other>& o) const { return shape_ == o.shape(); }

  friend bool operator==(const LayeredVector& a, const LayeredVector& b) {
    return a.shape_ == b.shape_ && a.flat_ == b.flat_;
  }

 private:
  Eigen::Index rows(int l) const { return shape_.sizes[static_cast<std::size_t>(l) + 1]; }
  Eigen::Index cols(int l) const { return shape_.sizes[static_cast<std::size_t>(l)]; }

  MlpShape shape_;
  Vector flat_;
};

struct ParamsTag {};
struct GradientTag {};
using MlpParams = LayeredVector<ParamsTag>;
using GradientVec = LayeredVector<GradientTag>;

/// LeCun-uniform weights (limit sqrt(3 / fan_in)), zero biases.
MlpParams init_params(const MlpShape& shape, std::int64_t seed);
MlpParams init_params(int hidden_width, int num_classes, std::int64_t seed, int hidden_layers = 2);

/// Everything backward needs: the parameters used and per-layer values.
struct ForwardTrace {
  MlpParams params;
  /// activations[0] is the input batch; activations[l] for l >= 1 are the
  /// tanh outputs of hidden layer l.
  std::vector<Matrix> activations;
  /// Affine outputs per layer; the last one is the logits.
  std::vector<Matrix> pre_activations;

  const Matrix& logits() const { return pre_activations.back(); }
  Eigen::Index batch_size() const { return activations.front().rows(); }
};

/// Rows of the batch are samples (B x 2).
Matrix to_matrix(std::span<const Point2> points);

/// Runs the network; hidden layers use tanh. Rejects empty or non-finite
/// batches.
ForwardTrace forward(const MlpParams& params, const Matrix& batch);

/// Row-wise numerically stable softmax.
Matrix softmax(const Matrix& logits);

/// Gradient of sum_{i,c} dL_dlogits(i,c) * logits(i,c) through the trace.
GradientVec backward(const ForwardTrace& trace, const Matrix& dL_dlogits);

/// Argmax class of every row of the softmax output.
std::vector<int> predict(const MlpParams& params, const Matrix& batch);

struct LossAndGrad {
  double loss = 0.0;
  GradientVec grad;
};

using ScalarLoss = std::function<LossAndGrad(const MlpParams&)>;

struct GradCheckOptions {
  double eps = 1e-5;
  /// Coordinates checked; 0 or >= param count means all of them.
  std::size_t max_coords = 0;
  std::int64_t seed = 0;
};

/// Largest |analytic - central difference| / max(|analytic|, |cd|, 1e-8)
/// over the checked coordinates.
double grad_check(const MlpParams& params, const ScalarLoss& loss, const GradCheckOptions& opts = {});

/// Snapshot format: magic "CISSLP01", u32 layer-size count, i32 sizes, then
/// the flat vector as little-endian float64.
void save_params(const MlpParams& params, const std::string& path);
MlpParams load_params(const std::string& path);

}  // namespace cissl

#endif  // CISSL_TINY_NET_HPP_
