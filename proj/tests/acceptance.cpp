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

// Acceptance suite: one PASS/FAIL line per criterion. Usage:
//   acceptance [output_dir]

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cissl/campaign.hpp"
#include "cissl/common.hpp"
#include "cissl/ema_analysis.hpp"
#include "cissl/losses.hpp"
#include "cissl/synth_data.hpp"
#include "cissl/tiny_net.hpp"
#include "cissl/trainers.hpp"

using namespace cissl;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void verdict(int id, bool ok, const std::string& what, const std::string& detail) {
  std::printf("%s criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

// ---------------------------------------------------------------------------

CampaignOutcome g_table1;

void toy_table1(const fs::path& out) {
  const auto config = validate_config(preset_text("toy-table1"));
  RunOptions opts;
  opts.output_dir = out.string();
  opts.workers = default_workers();
  g_table1 = run_campaign(config, opts);

  auto mean = [](const char* ds, const char* algo) { return g_table1.find(ds, algo); };
  const auto* pi = mean("four_spins", "pi_model");
  const auto* mt = mean("four_spins", "mean_teacher");
  const auto* scl = mean("four_spins", "mean_teacher_scl");
  const auto* mmt = mean("two_moons", "mean_teacher");
  const auto* mscl = mean("two_moons", "mean_teacher_scl");
  if (!g_table1.ok() || !pi || !mt || !scl || !mmt || !mscl) {
    verdict(1, false, "toy table trends", std::to_string(g_table1.failures()) + " failed runs");
    return;
  }
  const double s_all = scl->aggregate.mean.all, m_all = mt->aggregate.mean.all,
               p_all = pi->aggregate.mean.all;
  const double minor_gap = pi->aggregate.mean.minor - scl->aggregate.mean.minor;
  const bool order = s_all < m_all && m_all < p_all;
  const bool gap = minor_gap >= 0.10;
  const bool moons = mscl->aggregate.mean.all <= mmt->aggregate.mean.all;
  std::ostringstream d;
  d.precision(4);
  d << "four_spins all: SCL " << 100 * s_all << "% < MT " << 100 * m_all << "% < Pi " << 100 * p_all
    << "%; minor Pi-SCL " << 100 * minor_gap << " pts; two_moons all: SCL " << 100 * mscl->aggregate.mean.all
    << "% <= MT " << 100 * mmt->aggregate.mean.all << "%";
  verdict(1, order && gap && moons, "toy table trends", d.str());
}

void out_of_scope() {
  // Only the toy generators exist; no preset claims an image-benchmark result.
  bool only_toy = true;
  for (const auto& name : preset_names())
    for (const auto& d : validate_config(preset_text(name)).datasets)
      only_toy = only_toy && (d.generator == DatasetSpec::Generator::TwoMoons ||
                              d.generator == DatasetSpec::Generator::FourSpins);
  verdict(2, only_toy, "image-benchmark tables are out of scope",
          "presets use toy generators only; nothing is claimed for CIFAR10/SVHN");
}

// ---------------------------------------------------------------------------

void ema_identity() {
  double worst = 0.0;
  for (EmaTiming timing : {EmaTiming::AfterStep, EmaTiming::BeforeStep})
    for (double gamma : {0.5, 0.95, 0.999})
      for (double delta : {0.0, 0.5, 0.9})
        for (int t = 1; t <= 200; ++t) {
          // Gradient k is the k-th basis vector, so coordinate k of the
          // unrolled displacement is minus the coefficient of gradient k.
          std::vector<Vector> grads(t, Vector::Zero(t));
          for (int k = 0; k < t; ++k) grads[k][k] = 1.0;
          const auto u = brute_force_unroll(gamma, delta, grads, 1.0, timing);
          for (int k = 0; k < t; ++k) {
            const auto c = momentum_coefficients(t, k, delta, gamma, timing);
            worst = std::max({worst, std::abs(c.student + u.student_delta[k]),
                              std::abs(c.target + u.target_delta[k])});
          }
          if (delta == 0.0) {
            const auto table = sgd_coefficients(t, gamma, timing);
            for (int k = 0; k < t; ++k)
              worst = std::max({worst, std::abs(table.entries[k].student + u.student_delta[k]),
                                std::abs(table.entries[k].target + u.target_delta[k])});
          }
        }
  verdict(3, worst < 1e-10, "closed-form EMA coefficients match the literal unroll",
          fmt("max abs error %.3g over t<=200, 3x3 (gamma, delta), both EMA timings", worst));
}

void gap_nonnegative(const fs::path& out) {
  double lowest = 1e300;
  int points = 0;
  const std::vector<double> deltas{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  const std::vector<double> gammas{0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.97, 0.99, 0.995, 0.999};
  for (double delta : deltas)
    for (double gamma : gammas)
      for (int lag = 1; lag <= 100; ++lag, ++points)
        lowest = std::min(lowest, coefficient_gap(lag, 0, delta, gamma));

  // The exported curve for delta 0.9, gamma 0.95.
  const auto config = validate_config(preset_text("ema-gap"));
  RunOptions opts;
  opts.output_dir = (out / "ema-gap").string();
  run_campaign(config, opts);
  std::ifstream in(out / "ema-gap" / "ema_gap.csv");
  std::string line;
  std::getline(in, line);
  std::vector<double> student, target, gap;
  while (std::getline(in, line)) {
    double lag, s, t, g;
    char c;
    std::istringstream row(line);
    row >> lag >> c >> s >> c >> t >> c >> g;
    student.push_back(s);
    target.push_back(t);
    gap.push_back(g);
  }
  bool curve = gap.size() == 1000;
  std::size_t peak = 0;
  for (std::size_t i = 0; curve && i < gap.size(); ++i) {
    curve = curve && gap[i] >= -1e-12;
    if (i > 0) curve = curve && student[i] >= student[i - 1] && target[i] >= target[i - 1];
    if (gap[i] > gap[peak]) peak = i;
  }
  // Rises to a single peak, then decays towards zero.
  for (std::size_t i = 1; curve && i < gap.size(); ++i)
    curve = i <= peak ? gap[i] >= gap[i - 1] : gap[i] <= gap[i - 1];
  curve = curve && gap.back() < 1e-6;
  std::ostringstream d;
  d << "min gap " << lowest << " over " << points << " grid points; exported curve: " << gap.size()
    << " lags, nonnegative, single peak at lag " << peak + 1 << ", tail " << (gap.empty() ? 0.0 : gap.back());
  verdict(4, points == 10000 && lowest >= -1e-12 && curve, "coefficient gap is nonnegative", d.str());
}

// ---------------------------------------------------------------------------

Matrix random_matrix(Rng& rng, int rows, int cols, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = n(rng);
  return m;
}

// Fourth-order central difference; relative error in the max norm.
double fd_rel_error(const MlpParams& p, const ScalarLoss& loss) {
  const LossAndGrad base = loss(p);
  const double h = 1e-3;
  MlpParams probe = p;
  Vector numeric(p.flat().size());
  for (Eigen::Index i = 0; i < numeric.size(); ++i) {
    const double x = p.flat()[i];
    auto at = [&](double v) {
      probe.flat()[i] = v;
      return loss(probe).loss;
    };
    numeric[i] = (-at(x + 2 * h) + 8 * at(x + h) - 8 * at(x - h) + at(x - 2 * h)) / (12 * h);
    probe.flat()[i] = x;
  }
  const double scale = std::max(base.grad.flat().cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff());
  return scale == 0.0 ? 0.0 : (base.grad.flat() - numeric).cwiseAbs().maxCoeff() / scale;
}

void gradients() {
  enum Kind { CE, IN, Focal, CB, L2, SCL };
  const char* names[] = {"CE", "IN", "Focal", "CB", "consistency L2", "SCL consistency"};
  std::ostringstream d;
  d.precision(3);
  bool ok = true;
  for (int kind = CE; kind <= SCL; ++kind) {
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      Rng rng = make_rng(1000 * kind + trial, 99);
      const int classes = std::uniform_int_distribution<int>(2, 4)(rng);
      const int batch = std::uniform_int_distribution<int>(1, 12)(rng);
      const auto params = init_params(std::uniform_int_distribution<int>(3, 8)(rng), classes,
                                      static_cast<std::int64_t>(rng() % 100000));
      const Matrix x = random_matrix(rng, batch, 2, 1.5);
      std::vector<int> labels(batch), counts(classes);
      for (auto& l : labels) l = std::uniform_int_distribution<int>(0, classes - 1)(rng);
      for (auto& c : counts) c = std::uniform_int_distribution<int>(1, 50)(rng);
      const ClassCounts cc(counts);
      const Matrix target = softmax(random_matrix(rng, batch, classes, 2.0));
      ReweightSpec spec;
      if (kind == IN) spec = ReweightSpec::inverse();
      if (kind == Focal) spec = ReweightSpec::focal(std::uniform_real_distribution<double>(0.5, 4.0)(rng));
      if (kind == CB) spec = ReweightSpec::class_balanced(std::uniform_real_distribution<double>(0.9, 0.9999)(rng));
      const SclShape shape = trial % 2 ? SclShape::linear()
                                       : SclShape::exponential(std::uniform_real_distribution<double>(0.1, 1.0)(rng));
      // SCL weights are constants: fix the predictions at the base point.
      const auto preds = predict(params, x);

      const ScalarLoss loss = [&](const MlpParams& p) {
        const auto trace = forward(p, x);
        const Matrix probs = softmax(trace.logits());
        LossOutput o;
        if (kind <= CB) o = supervised_loss(probs, labels, spec, cc);
        else if (kind == L2) o = consistency_l2(probs, target);
        else o = scl_consistency(probs, target, preds, cc, shape);
        return LossAndGrad{o.loss, backward(trace, o.dL_dlogits)};
      };
      worst = std::max(worst, fd_rel_error(params, loss));
    }
    ok = ok && worst < 1e-5;
    d << (kind ? ", " : "") << names[kind] << " " << worst;
  }
  verdict(5, ok, "loss gradients match finite differences", "worst relative error over 20 configs: " + d.str());
}

// ---------------------------------------------------------------------------

std::string history_text(const RunResult& r, int classes, const fs::path& path) {
  write_history_csv(r, classes, path.string());
  return slurp(path);
}

void scl_identities(const fs::path& out) {
  DatasetSpec ds;
  ds.rho_l = 1.0;
  ds.unlabeled_max = 200;
  ds.val_per_class = 100;
  const auto split = build_split(ds, 3);
  TrainConfig tc;
  tc.schedule.total_iters = 300;
  tc.schedule.rampup_iters = 100;
  tc.schedule.lr_decay = {{200, 0.2}};
  tc.hidden_width = 16;
  tc.eval_every = 50;
  tc.seed = 3;
  fs::create_directories(out / "scl");
  const auto mt = train(split, AlgorithmSpec::mean_teacher(), tc);
  const auto mt_text = history_text(mt, 2, out / "scl" / "mt.csv");
  bool identical = true;
  for (const auto& shape : {SclShape::linear(), SclShape::exponential(0.5), SclShape::exponential(0.25)}) {
    const auto scl = train(split, AlgorithmSpec::mean_teacher_scl(shape), tc);
    identical = identical && scl.student == mt.student && scl.target && *scl.target == *mt.target &&
                history_text(scl, 2, out / "scl" / "scl.csv") == mt_text;
  }

  bool exp_one = true;
  for (double beta : {0.01, 0.25, 0.5, 0.75, 0.99, 1.0})
    for (const auto& counts : {std::vector<int>{10, 2}, std::vector<int>{5, 3, 2, 1}, std::vector<int>{7, 7}}) {
      const ClassCounts cc(counts);
      exp_one = exp_one && scl_weight(cc, cc.major_class(), SclShape::exponential(beta)) == 1.0;
    }
  const ClassCounts moons({10, 2});
  const bool linear = scl_weight(moons, 1, SclShape::linear()) == 0.2 &&
                      scl_weight(moons, 0, SclShape::linear()) == 1.0;
  verdict(6, identical && exp_one && linear, "SCL degeneracy identities",
          std::string("balanced MT+SCL vs MT bit-identical: ") + (identical ? "yes" : "no") +
              "; exponential g(N_max) == 1: " + (exp_one ? "yes" : "no") +
              "; linear g minor of {10,2} == 0.2: " + (linear ? "yes" : "no"));
}

void imbalance() {
  bool ok = imbalance_counts(10, 5.0, 2).values() == std::vector<int>{10, 2} &&
            imbalance_counts(5, 5.0, 4).values() == std::vector<int>{5, 3, 2, 1};
  for (int n : {1, 5, 10, 1250, 2500})
    for (int c : {2, 3, 4, 10})
      ok = ok && imbalance_counts(n, 1.0, c).values() == std::vector<int>(c, n);
  verdict(7, ok, "imbalance counts", "{10,2} and {5,3,2,1} reproduced; rho=1 uniform for 20 (n, C) pairs");
}

void first_order_law() {
  double worst = 1e300;
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = init_params(10, 2 + trial % 3, 40 + trial);
    Rng rng = make_rng(40 + trial, 41);
    Vector u = random_matrix(rng, static_cast<int>(p.size()), 1, 1.0).col(0);
    u /= u.norm();
    const Matrix x = random_matrix(rng, 16, 2, 1.0);
    std::vector<double> res;
    for (double h : {1e-2, 1e-3, 1e-4}) {
      MlpParams q = p;
      q.flat() += h * u;
      res.push_back(gradient_gap_estimate(p, q, x).residual_norm);
    }
    for (int i = 0; i + 1 < 3; ++i) worst = std::min(worst, std::log10(res[i] / res[i + 1]));
  }
  verdict(8, worst >= 1.8, "first-order gradient gap law",
          fmt("lowest observed order %.3f over h in {1e-2,1e-3,1e-4}, 5 networks", worst));
}

void determinism(const fs::path& out) {
  const auto config = validate_config(preset_text("toy-table1"));
  RunOptions opts;
  opts.output_dir = (out / "rerun").string();
  opts.workers = default_workers();
  opts.only = "four_spins::1";
  const auto again = run_campaign(config, opts);
  int compared = 0;
  bool same = again.ok() && !again.runs.empty();
  for (const auto& r : again.runs) {
    const auto rel = fs::relative(r.history_path, out / "rerun");
    same = same && slurp(r.history_path) == slurp(out / "toy-table1" / rel);
    ++compared;
  }
  // And a small campaign at two worker counts.
  auto small = validate_config(preset_text("ablation-scl-shapes"));
  small.seeds = {11, 12};
  small.train.schedule.total_iters = 200;
  small.train.schedule.lr_decay.clear();
  small.train.eval_every = 50;
  for (int w : {1, 3}) {
    RunOptions o;
    o.output_dir = (out / ("workers" + std::to_string(w))).string();
    o.workers = w;
    run_campaign(small, o);
  }
  for (const auto& e : fs::recursive_directory_iterator(out / "workers1"))
    if (e.path().filename() == "history.csv") {
      same = same && slurp(e.path()) == slurp(out / "workers3" / fs::relative(e.path(), out / "workers1"));
      ++compared;
    }
  verdict(9, same, "reruns give byte-identical histories",
          std::to_string(compared) + " history files compared");
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
  fs::remove_all(out);
  fs::create_directories(out);
  const std::vector<std::function<void()>> checks{
      [&] { toy_table1(out / "toy-table1"); },
      [] { out_of_scope(); },
      [] { ema_identity(); },
      [&] { gap_nonnegative(out); },
      [] { gradients(); },
      [&] { scl_identities(out); },
      [] { imbalance(); },
      [] { first_order_law(); },
      [&] { determinism(out); },
  };
  for (std::size_t i = 0; i < checks.size(); ++i) {
    try {
      checks[i]();
    } catch (const std::exception& e) {
      verdict(static_cast<int>(i) + 1, false, "threw", e.what());
    }
  }
  std::printf("%d criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
