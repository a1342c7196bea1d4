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

#ifndef CISSL_OPTIM_HPP_
#define CISSL_OPTIM_HPP_

#include <vector>

#include "cissl/tiny_net.hpp"

namespace cissl {

/// Momentum SGD in the "velocity" form: v <- momentum*v + lr*grad, theta <- theta - v.
struct SgdState {
  Vector velocity;
  double lr = 0.1;
  double momentum = 0.9;     // [0, 1)
  double weight_decay = 0.0; // L2 coefficient folded into the gradient

  static SgdState zeros(const MlpShape& shape, double lr, double momentum,
                        double weight_decay = 0.0);
};

struct SgdResult {
  MlpParams params;
  SgdState state;
};

SgdResult sgd_step(const MlpParams& params, const GradientVec& grad, const SgdState& state);

/// Target parameters tracked as theta' <- gamma*theta' + (1-gamma)*theta.
struct EmaState {
  MlpParams target;
  double gamma = 0.95;
};

EmaState ema_update(const EmaState& ema, const MlpParams& student);

struct LrDecay {
  int iteration = 0;
  double multiplier = 1.0;
  friend bool operator==(const LrDecay&, const LrDecay&) = default;
};

struct Schedule {
  int total_iters = 5000;
  int rampup_iters = 2000;
  double w_max = 8.0;
  double base_lr = 0.1;
  std::vector<LrDecay> lr_decay{{4000, 0.2}};

  void validate() const;
  friend bool operator==(const Schedule&, const Schedule&) = default;
};

/// Gaussian ramp w_max * exp(-5 (1 - min(t/T, 1))^2); w_max once T is reached
/// or when T == 0.
double rampup_weight(int t, const Schedule& sched);

/// Base rate times every multiplier whose iteration is <= t.
double lr_at(int t, const Schedule& sched);

}  // namespace cissl

#endif  // CISSL_OPTIM_HPP_
