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

#include "cissl/trainers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>

namespace cissl {

AlgorithmSpec AlgorithmSpec::pseudo_label(double threshold) {
  AlgorithmSpec a = of(Kind::PseudoLabel);
  a.pl_threshold = threshold;
  a.validate();
  return a;
}

AlgorithmSpec AlgorithmSpec::mean_teacher_scl(SclShape shape) {
  AlgorithmSpec a = of(Kind::MeanTeacherScl);
  a.scl = shape;
  a.validate();
  return a;
}

void AlgorithmSpec::validate() const {
  reweight.validate();
  if (kind == Kind::PseudoLabel)
    require(pl_threshold > 0.0 && pl_threshold <= 1.0, "threshold must lie in (0,1]");
  if (kind == Kind::MeanTeacherScl) scl.validate();
}

std::string to_string(AlgorithmSpec::Kind kind) {
  switch (kind) {
    case AlgorithmSpec::Kind::Supervised: return "supervised";
    case AlgorithmSpec::Kind::PiModel: return "pi_model";
    case AlgorithmSpec::Kind::MeanTeacher: return "mean_teacher";
    case AlgorithmSpec::Kind::PseudoLabel: return "pseudo_label";
    case AlgorithmSpec::Kind::MeanTeacherScl: return "mean_teacher_scl";
  }
  return "?";
}

AlgorithmSpec::Kind parse_algorithm_kind(const std::string& s) {
  for (auto k : {AlgorithmSpec::Kind::Supervised, AlgorithmSpec::Kind::PiModel,
                 AlgorithmSpec::Kind::MeanTeacher, AlgorithmSpec::Kind::PseudoLabel,
                 AlgorithmSpec::Kind::MeanTeacherScl})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown algorithm '" + s +
                        "' (supervised|pi_model|mean_teacher|pseudo_label|mean_teacher_scl)");
}

void TrainConfig::validate() const {
  schedule.validate();
  require(labeled_batch >= 1, "labeled_batch must be >= 1");
  require(unlabeled_batch >= 0, "unlabeled_batch must be >= 0");
  require(noise_std >= 0.0 && std::isfinite(noise_std), "noise_std must be >= 0");
  require(momentum >= 0.0 && momentum < 1.0, "momentum must lie in [0,1)");
  require(weight_decay >= 0.0, "weight_decay must be >= 0");
  require(ema_gamma > 0.0 && ema_gamma <= 1.0, "ema_gamma must lie in (0,1]");
  require(hidden_width >= 1, "hidden_width must be >= 1");
  require(hidden_layers >= 1, "hidden_layers must be >= 1");
  require(eval_every >= 1, "eval_every must be >= 1");
}

namespace {

// Indices drawn uniformly from [0, n): with replacement, or a uniformly random
// subset when sampling without.
std::vector<std::size_t> draw_indices(std::size_t n, std::size_t k, bool with_replacement,
                                      Rng& rng) {
  std::vector<std::size_t> idx;
  if (n == 0 || k == 0) return idx;
  if (with_replacement) {
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    idx.resize(k);
    for (auto& i : idx) i = pick(rng);
    return idx;
  }
  require(k <= n, "batch larger than partition while sampling without replacement");
  idx.resize(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(k);
  return idx;
}

}  // namespace

Batches sample_batch(const CisslSplit& split, const TrainConfig& config, Rng& rng) {
  const Dataset2D& lab = split.labeled();
  const auto unl = split.unlabeled_points();
  Batches b;
  const auto li = draw_indices(lab.size(), static_cast<std::size_t>(config.labeled_batch),
                               config.with_replacement, rng);
  b.labeled.resize(static_cast<Eigen::Index>(li.size()), 2);
  b.labels.resize(li.size());
  for (std::size_t r = 0; r < li.size(); ++r) {
    b.labeled(static_cast<Eigen::Index>(r), 0) = lab.points[li[r]].x;
    b.labeled(static_cast<Eigen::Index>(r), 1) = lab.points[li[r]].y;
    b.labels[r] = lab.labels[li[r]];
  }
  const auto ui = draw_indices(unl.size(), static_cast<std::size_t>(config.unlabeled_batch),
                               config.with_replacement, rng);
  b.unlabeled.resize(static_cast<Eigen::Index>(ui.size()), 2);
  for (std::size_t r = 0; r < ui.size(); ++r) {
    b.unlabeled(static_cast<Eigen::Index>(r), 0) = unl[ui[r]].x;
    b.unlabeled(static_cast<Eigen::Index>(r), 1) = unl[ui[r]].y;
  }
  return b;
}

Matrix perturb(const Matrix& batch, double noise_std, Rng& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  Matrix out = batch;
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) += noise_std * unit(rng);
  return out;
}

ClassErrors evaluate(const MlpParams& params, const Dataset2D& dataset) {
  const int C = params.shape().num_classes();
  require(dataset.num_classes == C, "evaluate: dataset class count differs from model");
  std::vector<int> total(static_cast<std::size_t>(C), 0);
  std::vector<int> wrong(static_cast<std::size_t>(C), 0);
  if (!dataset.empty()) {
    const auto pred = predict(params, to_matrix(dataset.points));
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      const auto y = static_cast<std::size_t>(dataset.labels[i]);
      ++total[y];
      if (pred[i] != dataset.labels[i]) ++wrong[y];
    }
  }
  ClassErrors e(static_cast<std::size_t>(C));
  for (std::size_t c = 0; c < e.size(); ++c)
    if (total[c] > 0) e[c] = static_cast<double>(wrong[c]) / total[c];
  return e;
}

RunResult train(const CisslSplit& split, const AlgorithmSpec& algo, const TrainConfig& config,
                const StepObserver& observer) {
  using Kind = AlgorithmSpec::Kind;
  algo.validate();
  config.validate();
  require(!split.labeled().empty(), "train: labeled partition is empty");
  const auto t_start = std::chrono::steady_clock::now();

  const int C = split.num_classes();
  const ClassCounts& counts = split.labeled_counts();
  const Schedule& sched = config.schedule;

  RunResult result;
  MlpParams theta = init_params(make_shape(config.hidden_width, C, config.hidden_layers), config.seed);
  SgdState opt = SgdState::zeros(theta.shape(), sched.base_lr, config.momentum, config.weight_decay);
  std::optional<EmaState> ema;
  if (algo.uses_ema()) ema = EmaState{theta, config.ema_gamma};

  Rng rng = make_rng(config.seed, kStreamTrain);
  double sup_acc = 0.0;
  double con_acc = 0.0;
  int acc_n = 0;

  for (int t = 0; t < sched.total_iters; ++t) {
    const double lr = lr_at(t, sched);
    const double w = rampup_weight(t, sched);

    const Batches b = sample_batch(split, config, rng);
    const Matrix x_lab = perturb(b.labeled, config.noise_std, rng);
    const Matrix x_student = perturb(b.unlabeled, config.noise_std, rng);
    const Matrix x_target = perturb(b.unlabeled, config.noise_std, rng);

    const ForwardTrace lab_trace = forward(theta, x_lab);
    const LossOutput sup =
        supervised_loss(softmax(lab_trace.logits()), b.labels, algo.reweight, counts);
    GradientVec grad = backward(lab_trace, sup.dL_dlogits);

    double con_loss = 0.0;
    if (algo.kind != Kind::Supervised && b.unlabeled.rows() > 0) {
      const ForwardTrace s_trace = forward(theta, x_student);
      const Matrix ps = softmax(s_trace.logits());
      LossOutput con;
      switch (algo.kind) {
        case Kind::PiModel:
          con = consistency_l2(ps, softmax(forward(theta, x_target).logits()));
          break;
        case Kind::MeanTeacher:
          con = consistency_l2(ps, softmax(forward(ema->target, x_target).logits()));
          break;
        case Kind::MeanTeacherScl: {
          const Matrix pt = softmax(forward(ema->target, x_target).logits());
          const auto pred = argmax_rows(algo.scl_target_argmax ? pt : ps);
          con = scl_consistency(ps, pt, pred, counts, algo.scl);
          break;
        }
        case Kind::PseudoLabel: {
          // Hard labels from confident student predictions; no gradient flows
          // into the label itself.
          const double inv_b = 1.0 / static_cast<double>(ps.rows());
          con.dL_dlogits = Matrix::Zero(ps.rows(), ps.cols());
          for (Eigen::Index i = 0; i < ps.rows(); ++i) {
            Eigen::Index y = 0;
            const double pmax = ps.row(i).maxCoeff(&y);
            if (pmax < algo.pl_threshold) continue;
            con.loss -= std::log(std::max(pmax, 1e-12)) * inv_b;
            con.dL_dlogits.row(i) = inv_b * ps.row(i);
            con.dL_dlogits(i, y) -= inv_b;
          }
          break;
        }
        case Kind::Supervised: break;
      }
      con_loss = con.loss;
      grad.flat() += w * backward(s_trace, con.dL_dlogits).flat();
    }

    const double objective = sup.loss + w * con_loss;
    if (!std::isfinite(objective) || !grad.flat().allFinite()) {
      throw DivergenceError("non-finite objective at iteration " + std::to_string(t) +
                                " (sup=" + std::to_string(sup.loss) +
                                ", con=" + std::to_string(con_loss) + ")",
                            t, theta);
    }

    opt.lr = lr;
    SgdResult step = sgd_step(theta, grad, opt);
    if (!step.params.flat().allFinite())
      throw DivergenceError("parameters overflowed at iteration " + std::to_string(t), t, theta);
    theta = std::move(step.params);
    opt = std::move(step.state);
    if (ema) *ema = ema_update(*ema, theta);

    if (observer) observer(StepEvent{t + 1, theta, ema ? &ema->target : nullptr});

    sup_acc += sup.loss;
    con_acc += con_loss;
    ++acc_n;
    const int done = t + 1;
    if (done % config.eval_every == 0 || done == sched.total_iters) {
      HistoryEntry h;
      h.iteration = done;
      h.lr = lr;
      h.w = w;
      h.sup_loss = sup_acc / acc_n;
      h.con_loss = con_acc / acc_n;
      h.val_errors = evaluate(theta, split.validation());
      if (ema) h.target_val_errors = evaluate(ema->target, split.validation());
      result.history.push_back(std::move(h));
      sup_acc = con_acc = 0.0;
      acc_n = 0;
    }
  }

  result.student = std::move(theta);
  if (ema) result.target = std::move(ema->target);
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

void write_history_csv(const RunResult& result, int num_classes, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  const bool with_target = result.target.has_value();
  out << "iteration,lr,w,sup_loss,con_loss";
  for (int c = 0; c < num_classes; ++c) out << ",val_err_" << c;
  if (with_target)
    for (int c = 0; c < num_classes; ++c) out << ",target_val_err_" << c;
  out << '\n' << std::setprecision(17);
  auto put = [&](const ClassErrors& e) {
    for (const auto& v : e) {
      out << ',';
      if (v) out << *v;
    }
  };
  for (const auto& h : result.history) {
    out << h.iteration << ',' << h.lr << ',' << h.w << ',' << h.sup_loss << ',' << h.con_loss;
    put(h.val_errors);
    if (with_target) put(h.target_val_errors);
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace cissl
