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

#include "cissl/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "cissl/common.hpp"
#include "cissl/ema_analysis.hpp"

namespace cissl {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// Config reading

class Reader {
 public:
  explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

  void error(const std::string& path, const std::string& msg) {
    errors_.push_back(path + ": " + msg);
  }

  bool object(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
    if (!j.is_object()) {
      error(path, "expected an object");
      return false;
    }
    for (const auto& [k, v] : j.items()) {
      (void)v;
      if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; }))
        error(path + "." + k, "unknown key");
    }
    return true;
  }

  template <typename T>
  bool get(const json& obj, const char* key, T& out, const std::string& path) {
    if (!obj.contains(key)) return false;
    const json& v = obj.at(key);
    try {
      if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::int64_t>) {
        if (!v.is_number_integer()) throw json::type_error::create(302, "expected an integer", &v);
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw json::type_error::create(302, "expected a number", &v);
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw json::type_error::create(302, "expected a boolean", &v);
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw json::type_error::create(302, "expected a string", &v);
      }
      out = v.get<T>();
      return true;
    } catch (const json::exception&) {
      error(path + "." + key, std::string("expected ") + type_name<T>());
      return false;
    }
  }

  void check(bool cond, const std::string& path, const std::string& msg) {
    if (!cond) error(path, msg);
  }

 private:
  template <typename T>
  static const char* type_name() {
    if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::int64_t>) return "an integer";
    else if constexpr (std::is_same_v<T, double>) return "a number";
    else if constexpr (std::is_same_v<T, bool>) return "a boolean";
    else return "a string";
  }

  std::vector<std::string>& errors_;
};

std::string generator_name(DatasetSpec::Generator g) {
  return g == DatasetSpec::Generator::TwoMoons ? "two_moons" : "four_spins";
}

void read_dataset(Reader& r, const json& j, const std::string& path, DatasetSpec& d) {
  if (!r.object(j, path,
                {"name", "generator", "pool_noise", "rho_l", "labeled_max", "unlabeled_type",
                 "unlabeled_max", "val_per_class", "geometry"}))
    return;
  std::string gen = "two_moons";
  r.get(j, "generator", gen, path);
  if (gen == "four_spins") {
    d.generator = DatasetSpec::Generator::FourSpins;
    d.pool_noise = 0.05;
    d.labeled_max = 5;
    d.unlabeled_max = 1250;
    d.val_per_class = 1500;
  } else if (gen != "two_moons") {
    r.error(path + ".generator", "must be two_moons or four_spins");
  }
  d.name = gen;
  r.get(j, "name", d.name, path);
  r.get(j, "pool_noise", d.pool_noise, path);
  r.get(j, "rho_l", d.rho_l, path);
  r.get(j, "labeled_max", d.labeled_max, path);
  r.get(j, "unlabeled_max", d.unlabeled_max, path);
  r.get(j, "val_per_class", d.val_per_class, path);
  std::string ut = to_string(d.unlabeled_type);
  if (r.get(j, "unlabeled_type", ut, path)) {
    try {
      d.unlabeled_type = parse_unlabeled_type(ut);
    } catch (const InvalidArgument& e) {
      r.error(path + ".unlabeled_type", e.what());
    }
  }
  if (j.contains("geometry")) {
    const json& g = j.at("geometry");
    const std::string gp = path + ".geometry";
    if (d.generator == DatasetSpec::Generator::TwoMoons) {
      if (r.object(g, gp, {"radius", "offset_x", "offset_y"})) {
        r.get(g, "radius", d.moons.radius, gp);
        r.get(g, "offset_x", d.moons.offset_x, gp);
        r.get(g, "offset_y", d.moons.offset_y, gp);
        r.check(d.moons.radius > 0.0, gp + ".radius", "must be positive");
      }
    } else if (r.object(g, gp, {"r_inner", "r_outer", "sweep"})) {
      r.get(g, "r_inner", d.spins.r_inner, gp);
      r.get(g, "r_outer", d.spins.r_outer, gp);
      r.get(g, "sweep", d.spins.sweep, gp);
      r.check(d.spins.r_inner >= 0.0 && d.spins.r_outer > d.spins.r_inner, gp,
              "need 0 <= r_inner < r_outer");
    }
  }
  r.check(d.pool_noise >= 0.0, path + ".pool_noise", "must be >= 0");
  r.check(d.rho_l >= 1.0, path + ".rho_l", "imbalance factor must be >= 1");
  r.check(d.labeled_max >= 1, path + ".labeled_max", "must be >= 1");
  r.check(d.unlabeled_max >= 1, path + ".unlabeled_max", "must be >= 1");
  r.check(d.val_per_class >= 1, path + ".val_per_class", "must be >= 1");
}

void read_reweight(Reader& r, const json& j, const std::string& path, ReweightSpec& s) {
  if (!r.object(j, path, {"type", "gamma", "beta"})) return;
  std::string type = "ce";
  r.get(j, "type", type, path);
  if (type == "ce") s.kind = ReweightSpec::Kind::CE;
  else if (type == "in") s.kind = ReweightSpec::Kind::IN;
  else if (type == "focal") s.kind = ReweightSpec::Kind::Focal;
  else if (type == "cb") s.kind = ReweightSpec::Kind::CB;
  else r.error(path + ".type", "must be one of ce|in|focal|cb");
  r.get(j, "gamma", s.focal_gamma, path);
  r.get(j, "beta", s.cb_beta, path);
  r.check(s.focal_gamma >= 0.0, path + ".gamma", "focal gamma must be >= 0");
  r.check(s.cb_beta >= 0.0 && s.cb_beta < 1.0, path + ".beta", "cb beta must lie in [0,1)");
}

void read_algorithm(Reader& r, const json& j, const std::string& path, AlgorithmEntry& a) {
  if (!r.object(j, path, {"name", "type", "w_max", "reweight", "threshold", "scl"})) return;
  std::string type = "supervised";
  r.get(j, "type", type, path);
  try {
    a.spec.kind = parse_algorithm_kind(type);
  } catch (const InvalidArgument& e) {
    r.error(path + ".type", e.what());
  }
  a.name = type;
  r.get(j, "name", a.name, path);
  double w = 0.0;
  if (r.get(j, "w_max", w, path)) {
    r.check(w >= 0.0, path + ".w_max", "must be >= 0");
    a.w_max = w;
  }
  if (j.contains("reweight")) read_reweight(r, j.at("reweight"), path + ".reweight", a.spec.reweight);
  if (r.get(j, "threshold", a.spec.pl_threshold, path))
    r.check(a.spec.pl_threshold > 0.0 && a.spec.pl_threshold <= 1.0, path + ".threshold",
            "threshold must lie in (0,1]");
  if (j.contains("scl")) {
    const json& s = j.at("scl");
    const std::string sp = path + ".scl";
    if (r.object(s, sp, {"shape", "beta", "argmax"})) {
      std::string shape = "exponential";
      r.get(s, "shape", shape, sp);
      if (shape == "exponential") a.spec.scl.kind = SclShape::Kind::Exponential;
      else if (shape == "linear") a.spec.scl = SclShape::linear();
      else r.error(sp + ".shape", "must be exponential or linear");
      if (r.get(s, "beta", a.spec.scl.beta, sp))
        r.check(a.spec.scl.beta > 0.0 && a.spec.scl.beta <= 1.0, sp + ".beta",
                "beta must lie in (0,1]");
      std::string argmax = "student";
      if (r.get(s, "argmax", argmax, sp)) {
        r.check(argmax == "student" || argmax == "target", sp + ".argmax",
                "must be student or target");
        a.spec.scl_target_argmax = argmax == "target";
      }
    }
  }
}

void read_train(Reader& r, const json& j, const std::string& path, TrainConfig& t) {
  if (!r.object(j, path,
                {"iterations", "rampup_iters", "w_max", "lr", "lr_decay", "momentum",
                 "weight_decay", "ema_gamma", "labeled_batch", "unlabeled_batch",
                 "with_replacement", "noise_std", "hidden_width", "hidden_layers", "eval_every"}))
    return;
  Schedule& s = t.schedule;
  r.get(j, "iterations", s.total_iters, path);
  r.get(j, "rampup_iters", s.rampup_iters, path);
  r.get(j, "w_max", s.w_max, path);
  r.get(j, "lr", s.base_lr, path);
  if (j.contains("lr_decay")) {
    const json& d = j.at("lr_decay");
    const std::string dp = path + ".lr_decay";
    if (!d.is_array()) {
      r.error(dp, "expected an array");
    } else {
      s.lr_decay.clear();
      for (std::size_t i = 0; i < d.size(); ++i) {
        const std::string ip = dp + "[" + std::to_string(i) + "]";
        LrDecay ld;
        if (!r.object(d[i], ip, {"iteration", "multiplier"})) continue;
        r.get(d[i], "iteration", ld.iteration, ip);
        r.get(d[i], "multiplier", ld.multiplier, ip);
        r.check(ld.multiplier > 0.0, ip + ".multiplier", "must be positive");
        r.check(ld.iteration >= 0, ip + ".iteration", "must be >= 0");
        if (!s.lr_decay.empty())
          r.check(s.lr_decay.back().iteration < ld.iteration, ip, "decay points must be ascending");
        s.lr_decay.push_back(ld);
      }
    }
  }
  r.get(j, "momentum", t.momentum, path);
  r.get(j, "weight_decay", t.weight_decay, path);
  r.get(j, "ema_gamma", t.ema_gamma, path);
  r.get(j, "labeled_batch", t.labeled_batch, path);
  r.get(j, "unlabeled_batch", t.unlabeled_batch, path);
  r.get(j, "with_replacement", t.with_replacement, path);
  r.get(j, "noise_std", t.noise_std, path);
  r.get(j, "hidden_width", t.hidden_width, path);
  r.get(j, "hidden_layers", t.hidden_layers, path);
  r.get(j, "eval_every", t.eval_every, path);

  r.check(s.total_iters >= 1, path + ".iterations", "must be >= 1");
  r.check(s.rampup_iters >= 0, path + ".rampup_iters", "must be >= 0");
  r.check(s.w_max >= 0.0, path + ".w_max", "must be >= 0");
  r.check(s.base_lr > 0.0, path + ".lr", "must be positive");
  r.check(t.momentum >= 0.0 && t.momentum < 1.0, path + ".momentum", "must lie in [0,1)");
  r.check(t.weight_decay >= 0.0, path + ".weight_decay", "must be >= 0");
  r.check(t.ema_gamma > 0.0 && t.ema_gamma <= 1.0, path + ".ema_gamma", "must lie in (0,1]");
  r.check(t.labeled_batch >= 1, path + ".labeled_batch", "must be >= 1");
  r.check(t.unlabeled_batch >= 0, path + ".unlabeled_batch", "must be >= 0");
  r.check(t.noise_std >= 0.0, path + ".noise_std", "must be >= 0");
  r.check(t.hidden_width >= 1, path + ".hidden_width", "must be >= 1");
  r.check(t.hidden_layers >= 1, path + ".hidden_layers", "must be >= 1");
  r.check(t.eval_every >= 1, path + ".eval_every", "must be >= 1");
}

void read_report(Reader& r, const json& j, const std::string& path, ReportSpec& s) {
  if (!r.object(j, path, {"group_mode", "grids", "grid_resolution", "grid_margin"})) return;
  std::string mode = "single";
  if (r.get(j, "group_mode", mode, path)) {
    if (mode == "single") s.group_mode = GroupMode::SingleClass;
    else if (mode == "halves") s.group_mode = GroupMode::Halves;
    else r.error(path + ".group_mode", "must be single or halves");
  }
  r.get(j, "grids", s.grids, path);
  if (j.contains("grid_resolution")) {
    const json& g = j.at("grid_resolution");
    if (!g.is_array() || g.size() != 2 || !g[0].is_number_integer() || !g[1].is_number_integer()) {
      r.error(path + ".grid_resolution", "expected [nx, ny]");
    } else {
      s.grid_nx = g[0].get<int>();
      s.grid_ny = g[1].get<int>();
      r.check(s.grid_nx >= 2 && s.grid_ny >= 2, path + ".grid_resolution", "must be at least 2x2");
    }
  }
  r.get(j, "grid_margin", s.grid_margin, path);
  r.check(s.grid_margin >= 0.0, path + ".grid_margin", "must be >= 0");
}

void read_analysis(Reader& r, const json& j, const std::string& path,
                   std::optional<EmaGapSpec>& out) {
  if (!r.object(j, path, {"ema_gap"})) return;
  if (!j.contains("ema_gap")) return;
  const json& g = j.at("ema_gap");
  const std::string gp = path + ".ema_gap";
  if (!r.object(g, gp, {"delta", "gamma", "max_lag"})) return;
  EmaGapSpec s;
  r.get(g, "delta", s.delta, gp);
  r.get(g, "gamma", s.gamma, gp);
  r.get(g, "max_lag", s.max_lag, gp);
  r.check(s.delta >= 0.0 && s.delta < 1.0, gp + ".delta", "must lie in [0,1)");
  r.check(s.gamma > 0.0 && s.gamma <= 1.0, gp + ".gamma", "must lie in (0,1]");
  r.check(s.max_lag >= 1, gp + ".max_lag", "must be >= 1");
  out = s;
}

// ---------------------------------------------------------------------------
// Canonical dump

json reweight_json(const ReweightSpec& s) {
  switch (s.kind) {
    case ReweightSpec::Kind::CE: return {{"type", "ce"}};
    case ReweightSpec::Kind::IN: return {{"type", "in"}};
    case ReweightSpec::Kind::Focal: return {{"type", "focal"}, {"gamma", s.focal_gamma}};
    case ReweightSpec::Kind::CB: return {{"type", "cb"}, {"beta", s.cb_beta}};
  }
  return {};
}

json config_json(const CampaignConfig& c) {
  json j;
  j["name"] = c.name;
  j["seeds"] = c.seeds;
  j["datasets"] = json::array();
  for (const auto& d : c.datasets) {
    json g;
    if (d.generator == DatasetSpec::Generator::TwoMoons)
      g = {{"radius", d.moons.radius}, {"offset_x", d.moons.offset_x}, {"offset_y", d.moons.offset_y}};
    else
      g = {{"r_inner", d.spins.r_inner}, {"r_outer", d.spins.r_outer}, {"sweep", d.spins.sweep}};
    j["datasets"].push_back({{"name", d.name},
                             {"generator", generator_name(d.generator)},
                             {"pool_noise", d.pool_noise},
                             {"rho_l", d.rho_l},
                             {"labeled_max", d.labeled_max},
                             {"unlabeled_type", to_string(d.unlabeled_type)},
                             {"unlabeled_max", d.unlabeled_max},
                             {"val_per_class", d.val_per_class},
                             {"geometry", g}});
  }
  j["algorithms"] = json::array();
  for (const auto& a : c.algorithms) {
    json e{{"name", a.name}, {"type", to_string(a.spec.kind)}, {"reweight", reweight_json(a.spec.reweight)}};
    if (a.w_max) e["w_max"] = *a.w_max;
    if (a.spec.kind == AlgorithmSpec::Kind::PseudoLabel) e["threshold"] = a.spec.pl_threshold;
    if (a.spec.kind == AlgorithmSpec::Kind::MeanTeacherScl) {
      json s{{"shape", a.spec.scl.kind == SclShape::Kind::Linear ? "linear" : "exponential"},
             {"argmax", a.spec.scl_target_argmax ? "target" : "student"}};
      if (a.spec.scl.kind == SclShape::Kind::Exponential) s["beta"] = a.spec.scl.beta;
      e["scl"] = s;
    }
    j["algorithms"].push_back(e);
  }
  const TrainConfig& t = c.train;
  json decay = json::array();
  for (const auto& d : t.schedule.lr_decay)
    decay.push_back({{"iteration", d.iteration}, {"multiplier", d.multiplier}});
  j["train"] = {{"iterations", t.schedule.total_iters},
                {"rampup_iters", t.schedule.rampup_iters},
                {"w_max", t.schedule.w_max},
                {"lr", t.schedule.base_lr},
                {"lr_decay", decay},
                {"momentum", t.momentum},
                {"weight_decay", t.weight_decay},
                {"ema_gamma", t.ema_gamma},
                {"labeled_batch", t.labeled_batch},
                {"unlabeled_batch", t.unlabeled_batch},
                {"with_replacement", t.with_replacement},
                {"noise_std", t.noise_std},
                {"hidden_width", t.hidden_width},
                {"hidden_layers", t.hidden_layers},
                {"eval_every", t.eval_every}};
  j["report"] = {{"group_mode", c.report.group_mode == GroupMode::SingleClass ? "single" : "halves"},
                 {"grids", c.report.grids},
                 {"grid_resolution", {c.report.grid_nx, c.report.grid_ny}},
                 {"grid_margin", c.report.grid_margin}};
  if (c.ema_gap)
    j["analysis"] = {{"ema_gap",
                      {{"delta", c.ema_gap->delta},
                       {"gamma", c.ema_gap->gamma},
                       {"max_lag", c.ema_gap->max_lag}}}};
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
  return j;
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool matches_only(const std::string& only, const std::string& dataset,
                  const std::string& algorithm, std::int64_t seed) {
  if (only.empty()) return true;
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream is(only);
  while (std::getline(is, cur, ':')) parts.push_back(cur);
  parts.resize(3);
  return (parts[0].empty() || parts[0] == dataset) && (parts[1].empty() || parts[1] == algorithm) &&
         (parts[2].empty() || parts[2] == std::to_string(seed));
}

std::vector<double> unwrap(const ClassErrors& e) {
  std::vector<double> out;
  out.reserve(e.size());
  for (const auto& v : e) out.push_back(v.value_or(std::nan("")));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

TrainConfig CampaignConfig::train_config(const AlgorithmEntry& algo, std::int64_t seed) const {
  TrainConfig t = train;
  t.seed = seed;
  if (algo.w_max) t.schedule.w_max = *algo.w_max;
  return t;
}

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error([&] {
        std::string s = "invalid campaign config:";
        for (const auto& e : errors) s += "\n  " + e;
        return s;
      }()),
      errors_(std::move(errors)) {}

CampaignConfig validate_config(const std::string& text) {
  std::vector<std::string> errors;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("$: malformed JSON: ") + e.what()});
  }
  Reader r(errors);
  CampaignConfig c;
  if (!r.object(root, "$",
                {"name", "seeds", "datasets", "algorithms", "train", "report", "analysis",
                 "output_dir"}))
    throw ConfigError(errors);

  r.get(root, "name", c.name, "$");
  r.get(root, "output_dir", c.output_dir, "$");

  if (!root.contains("seeds")) {
    r.error("$.seeds", "required");
  } else if (!root.at("seeds").is_array()) {
    r.error("$.seeds", "expected an array of integers");
  } else {
    const json& s = root.at("seeds");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s[i].is_number_integer())
        r.error("$.seeds[" + std::to_string(i) + "]", "expected an integer");
      else
        c.seeds.push_back(s[i].get<std::int64_t>());
    }
    r.check(!s.empty(), "$.seeds", "seed list must not be empty");
    std::set<std::int64_t> uniq(c.seeds.begin(), c.seeds.end());
    r.check(uniq.size() == c.seeds.size(), "$.seeds", "seeds must be distinct");
  }

  if (root.contains("datasets")) {
    const json& ds = root.at("datasets");
    if (!ds.is_array()) {
      r.error("$.datasets", "expected an array");
    } else {
      for (std::size_t i = 0; i < ds.size(); ++i) {
        DatasetSpec d;
        read_dataset(r, ds[i], "$.datasets[" + std::to_string(i) + "]", d);
        c.datasets.push_back(d);
      }
    }
  }
  if (root.contains("algorithms")) {
    const json& as = root.at("algorithms");
    if (!as.is_array()) {
      r.error("$.algorithms", "expected an array");
    } else {
      for (std::size_t i = 0; i < as.size(); ++i) {
        AlgorithmEntry a;
        read_algorithm(r, as[i], "$.algorithms[" + std::to_string(i) + "]", a);
        c.algorithms.push_back(a);
      }
    }
  }
  if (root.contains("train")) read_train(r, root.at("train"), "$.train", c.train);
  if (root.contains("report")) read_report(r, root.at("report"), "$.report", c.report);
  if (root.contains("analysis")) read_analysis(r, root.at("analysis"), "$.analysis", c.ema_gap);

  std::set<std::string> names;
  for (std::size_t i = 0; i < c.datasets.size(); ++i)
    r.check(names.insert(c.datasets[i].name).second,
            "$.datasets[" + std::to_string(i) + "].name", "duplicate dataset name");
  names.clear();
  for (std::size_t i = 0; i < c.algorithms.size(); ++i)
    r.check(names.insert(c.algorithms[i].name).second,
            "$.algorithms[" + std::to_string(i) + "].name", "duplicate algorithm name");
  if (!c.datasets.empty())
    r.check(!c.algorithms.empty(), "$.algorithms", "at least one algorithm is required");
  r.check(!c.datasets.empty() || c.ema_gap.has_value(), "$",
          "nothing to do: give datasets or analysis.ema_gap");

  if (!errors.empty()) throw ConfigError(errors);
  return c;
}

std::string dump_config(const CampaignConfig& config) { return config_json(config).dump(2) + "\n"; }

std::string config_hash(const CampaignConfig& config) {
  json j = config_json(config);
  j.erase("output_dir");
  return fnv1a_hex(j.dump());
}

int CampaignOutcome::failures() const {
  return static_cast<int>(std::count_if(runs.begin(), runs.end(), [](const RunRecord& r) { return !r.ok; }));
}

const AggregateRow* CampaignOutcome::find(const std::string& dataset,
                                          const std::string& algorithm) const {
  for (const auto& r : table)
    if (r.dataset == dataset && r.algorithm == algorithm) return &r;
  return nullptr;
}

CisslSplit build_split(const DatasetSpec& d, std::int64_t seed) {
  const int C = d.num_classes();
  const Dataset2D pool =
      d.generator == DatasetSpec::Generator::TwoMoons
          ? gen_two_moons(d.pool_per_class(), d.pool_noise, seed, d.moons)
          : gen_four_spins(d.pool_per_class(), d.pool_noise, seed, d.spins);
  return make_cissl_split(pool, imbalance_counts(d.labeled_max, d.rho_l, C), d.unlabeled_type,
                          d.rho_l, d.unlabeled_max, d.val_per_class, seed);
}

CampaignOutcome run_campaign(const CampaignConfig& config, const RunOptions& options) {
  std::string out_dir = options.output_dir;
  if (out_dir.empty()) out_dir = config.output_dir.empty() ? "out" : config.output_dir;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());

  struct Job {
    std::size_t dataset, algorithm;
    std::int64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t d = 0; d < config.datasets.size(); ++d)
    for (std::int64_t s : config.seeds)
      for (std::size_t a = 0; a < config.algorithms.size(); ++a)
        if (matches_only(options.only, config.datasets[d].name, config.algorithms[a].name, s))
          jobs.push_back({d, a, s});

  CampaignOutcome outcome;
  outcome.runs.resize(jobs.size());
  std::vector<std::optional<BoundaryGrid>> grids(jobs.size());
  std::mutex report_mu;

  auto run_one = [&](std::size_t i) {
    const Job& job = jobs[i];
    const DatasetSpec& ds = config.datasets[job.dataset];
    const AlgorithmEntry& algo = config.algorithms[job.algorithm];
    RunRecord rec;
    rec.dataset = ds.name;
    rec.algorithm = algo.name;
    rec.seed = job.seed;
    const fs::path run_dir =
        fs::path(out_dir) / "runs" / ds.name / algo.name / ("seed_" + std::to_string(job.seed));
    try {
      fs::create_directories(run_dir);
      const CisslSplit split = build_split(ds, job.seed);
      rec.labeled_counts = split.labeled_counts().values();
      const RunResult res = train(split, algo.spec, config.train_config(algo, job.seed));
      rec.history_path = (run_dir / "history.csv").string();
      write_history_csv(res, ds.num_classes(), rec.history_path);
      save_params(res.student, (run_dir / "params.bin").string());
      if (res.target) save_params(*res.target, (run_dir / "target_params.bin").string());

      rec.final_errors = unwrap(res.history.back().val_errors);
      rec.student = group_errors(rec.final_errors, split.labeled_counts(), config.report.group_mode);
      if (res.target) {
        rec.final_target_errors = unwrap(res.history.back().target_val_errors);
        rec.target =
            group_errors(rec.final_target_errors, split.labeled_counts(), config.report.group_mode);
      }
      if (config.report.grids) {
        const BBox box = expanded_bbox(split.validation(), config.report.grid_margin);
        grids[i] = boundary_grid(res.student, box, config.report.grid_nx, config.report.grid_ny);
      }
      rec.wall_seconds = res.wall_seconds;
      rec.ok = true;
    } catch (const DivergenceError& e) {
      rec.error = e.what();
      try {
        save_params(e.snapshot(), (run_dir / "diverged_params.bin").string());
      } catch (const std::exception&) {
      }
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
    outcome.runs[i] = rec;
    if (options.on_run_done) {
      std::lock_guard<std::mutex> lock(report_mu);
      options.on_run_done(outcome.runs[i]);
    }
  };

  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(jobs.size())));
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) run_one(i);
      });
    for (auto& t : pool) t.join();
  }

  // Aggregation in config order, after every run has finished.
  for (const auto& ds : config.datasets)
    for (const auto& algo : config.algorithms) {
      std::vector<GroupErrors> stu, tgt;
      for (const auto& r : outcome.runs)
        if (r.ok && r.dataset == ds.name && r.algorithm == algo.name) {
          stu.push_back(r.student);
          if (r.target) tgt.push_back(*r.target);
        }
      if (!stu.empty()) outcome.table.push_back({ds.name, algo.name, aggregate_runs(stu)});
      if (!tgt.empty()) outcome.table_ema.push_back({ds.name, algo.name, aggregate_runs(tgt)});
    }

  std::vector<NamedGrid> named;
  for (std::size_t i = 0; i < jobs.size(); ++i)
    if (grids[i])
      named.push_back({"grids/" + outcome.runs[i].dataset + "__" + outcome.runs[i].algorithm +
                           "__seed" + std::to_string(outcome.runs[i].seed),
                       *grids[i]});
  if (!named.empty()) fs::create_directories(fs::path(out_dir) / "grids");
  if (!outcome.table.empty() || !named.empty()) {
    auto files = write_report(outcome.table, named, out_dir, "table1");
    outcome.files.insert(outcome.files.end(), files.begin(), files.end());
  }
  if (!outcome.table_ema.empty()) {
    auto files = write_report(outcome.table_ema, {}, out_dir, "table1_ema");
    outcome.files.insert(outcome.files.end(), files.begin(), files.end());
  }
  if (config.ema_gap) {
    const std::string p = (fs::path(out_dir) / "ema_gap.csv").string();
    write_gap_curve_csv(gap_curve(config.ema_gap->delta, config.ema_gap->gamma, config.ema_gap->max_lag), p);
    outcome.files.push_back(p);
  }

  // Manifest: everything needed to reproduce a run, no timestamps.
  json manifest;
  manifest["config_hash"] = config_hash(config);
  manifest["config"] = config_json(config);
  manifest["config"].erase("output_dir");
  manifest["runs"] = json::array();
  json failures = json::array();
  for (const auto& r : outcome.runs) {
    json e{{"dataset", r.dataset},
           {"algorithm", r.algorithm},
           {"seed", r.seed},
           {"status", r.ok ? "ok" : "failed"},
           {"labeled_counts", r.labeled_counts},
           {"reproduce", r.dataset + ":" + r.algorithm + ":" + std::to_string(r.seed)}};
    if (!r.ok) {
      e["error"] = r.error;
      failures.push_back(r.dataset + ":" + r.algorithm + ":" + std::to_string(r.seed) + ": " + r.error);
    }
    manifest["runs"].push_back(e);
  }
  manifest["failures"] = failures;
  const std::string manifest_path = (fs::path(out_dir) / "manifest.json").string();
  {
    std::ofstream out(manifest_path);
    if (!out) throw IoError("cannot open " + manifest_path + " for writing");
    out << manifest.dump(2) << '\n';
  }
  outcome.files.push_back(manifest_path);

  const std::string timing_path = (fs::path(out_dir) / "timing.csv").string();
  {
    std::ofstream out(timing_path);
    if (!out) throw IoError("cannot open " + timing_path + " for writing");
    out << "dataset,algorithm,seed,wall_seconds\n";
    for (const auto& r : outcome.runs)
      out << r.dataset << ',' << r.algorithm << ',' << r.seed << ',' << format_real(r.wall_seconds) << '\n';
  }
  outcome.files.push_back(timing_path);
  return outcome;
}

}  // namespace cissl
