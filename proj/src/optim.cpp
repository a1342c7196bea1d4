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

#include "cissl/optim.hpp"

#include <algorithm>
#include <cmath>

#include "cissl/common.hpp"

namespace cissl {

SgdState SgdState::zeros(const MlpShape& shape, double lr, double momentum, double weight_decay) {
  require(lr > 0.0, "learning rate must be positive");
  require(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0,1)");
  require(weight_decay >= 0.0, "weight decay must be >= 0");
  return {Vector::Zero(static_cast<Eigen::Index>(shape.param_count())), lr, momentum,
          weight_decay};
}

SgdResult sgd_step(const MlpParams& params, const GradientVec& grad, const SgdState& state) {
  require(grad.congruent(params), "sgd_step: gradient shape differs from params");
  require(state.velocity.size() == params.flat().size(),
          "sgd_step: velocity shape differs from params");
  require(grad.flat().allFinite(), "sgd_step: non-finite gradient");
  SgdResult r{params, state};
  if (state.weight_decay > 0.0) {
    r.state.velocity = state.momentum * state.velocity +
                       state.lr * (grad.flat() + state.weight_decay * params.flat());
  } else {
    r.state.velocity = state.momentum * state.velocity + state.lr * grad.flat();
  }
  r.params.flat() -= r.state.velocity;
  return r;
}

EmaState ema_update(const EmaState& ema, const MlpParams& student) {
  require(ema.target.congruent(student), "ema_update: target shape differs from student");
  EmaState out{ema.target, ema.gamma};
  out.target.flat() = ema.gamma * ema.target.flat() + (1.0 - ema.gamma) * student.flat();
  return out;
}

void Schedule::validate() const {
  require(total_iters >= 1, "total_iters must be >= 1");
  require(rampup_iters >= 0, "rampup_iters must be >= 0");
  require(w_max >= 0.0 && std::isfinite(w_max), "w_max must be >= 0");
  require(base_lr > 0.0, "base learning rate must be positive");
  for (std::size_t i = 0; i < lr_decay.size(); ++i) {
    require(lr_decay[i].multiplier > 0.0, "lr decay multipliers must be positive");
    require(lr_decay[i].iteration >= 0, "lr decay iterations must be >= 0");
    if (i > 0)
      require(lr_decay[i - 1].iteration < lr_decay[i].iteration,
              "lr decay points must be sorted ascending");
  }
}

double rampup_weight(int t, const Schedule& sched) {
  require(t >= 0, "iteration must be >= 0");
  if (sched.rampup_iters == 0 || t >= sched.rampup_iters) return sched.w_max;
  const double phase = 1.0 - static_cast<double>(t) / static_cast<double>(sched.rampup_iters);
  return sched.w_max * std::exp(-5.0 * phase * phase);
}

double lr_at(int t, const Schedule& sched) {
  require(t >= 0, "iteration must be >= 0");
  double lr = sched.base_lr;
  for (const auto& d : sched.lr_decay)
    if (d.iteration <= t) lr *= d.multiplier;
  return lr;
}

}  // namespace cissl
