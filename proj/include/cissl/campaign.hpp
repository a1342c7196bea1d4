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

#ifndef CISSL_CAMPAIGN_HPP_
#define CISSL_CAMPAIGN_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cissl/report.hpp"
#include "cissl/synth_data.hpp"
#include "cissl/trainers.hpp"

namespace cissl {

struct DatasetSpec {
  enum class Generator { TwoMoons, FourSpins };

  std::string name;
  Generator generator = Generator::TwoMoons;
  double pool_noise = 0.1;
  double rho_l = 5.0;
  int labeled_max = 10;
  UnlabeledType unlabeled_type = UnlabeledType::Same;
  int unlabeled_max = 2500;
  int val_per_class = 3000;
  MoonsGeometry moons;
  SpinsGeometry spins;

  int num_classes() const { return generator == Generator::TwoMoons ? 2 : 4; }
  /// Pool size per class: enough for any class to take any rank.
  int pool_per_class() const { return labeled_max + unlabeled_max + val_per_class; }
};

struct AlgorithmEntry {
  std::string name;
  AlgorithmSpec spec;
  std::optional<double> w_max;  // overrides train.w_max
};

struct ReportSpec {
  GroupMode group_mode = GroupMode::SingleClass;
  bool grids = false;
  int grid_nx = 200;
  int grid_ny = 200;
  double grid_margin = 0.2;
};

struct EmaGapSpec {
  double delta = 0.9;
  double gamma = 0.95;
  int max_lag = 1000;
};

struct CampaignConfig {
  std::string name = "campaign";
  std::vector<DatasetSpec> datasets;
  std::vector<AlgorithmEntry> algorithms;
  std::vector<std::int64_t> seeds;
  TrainConfig train;  // seed is taken from `seeds`
  ReportSpec report;
  std::optional<EmaGapSpec> ema_gap;
  std::string output_dir;  // optional default destination

  /// TrainConfig for one (algorithm, seed) cell.
  TrainConfig train_config(const AlgorithmEntry& algo, std::int64_t seed) const;
};

/// Field-path-qualified validation messages, e.g.
/// "algorithms[3].scl.beta: beta must lie in (0,1]".
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

/// Parses and validates a JSON campaign. Unknown keys are errors. Throws
/// ConfigError carrying every problem found.
CampaignConfig validate_config(const std::string& text);

/// Canonical JSON text of a validated config (all defaults spelled out).
std::string dump_config(const CampaignConfig& config);

/// FNV-1a 64 of dump_config, as 16 hex digits.
std::string config_hash(const CampaignConfig& config);

/// Names of the built-in presets.
std::vector<std::string> preset_names();
/// JSON text of a preset; throws InvalidArgument for unknown names.
std::string preset_text(const std::string& name);

struct RunRecord {
  std::string dataset;
  std::string algorithm;
  std::int64_t seed = 0;
  bool ok = false;
  std::string error;
  std::vector<int> labeled_counts;  // per class
  std::vector<double> final_errors;
  std::vector<double> final_target_errors;  // empty without EMA
  GroupErrors student;
  std::optional<GroupErrors> target;
  double wall_seconds = 0.0;
  std::string history_path;
};

struct CampaignOutcome {
  std::vector<RunRecord> runs;  // config order: dataset, seed, algorithm
  std::vector<AggregateRow> table;      // student evaluation
  std::vector<AggregateRow> table_ema;  // EMA target evaluation
  std::vector<std::string> files;

  int failures() const;
  bool ok() const { return failures() == 0; }
  const AggregateRow* find(const std::string& dataset, const std::string& algorithm) const;
};

struct RunOptions {
  std::string output_dir;  // empty: config.output_dir, then "./out"
  int workers = 1;
  /// Only run cells matching "dataset:algorithm:seed" (empty fields match all).
  std::string only;
  std::function<void(const RunRecord&)> on_run_done;
};

/// Split for one (dataset, seed) cell, exactly as the campaign builds it.
CisslSplit build_split(const DatasetSpec& dataset, std::int64_t seed);

/// Runs every (dataset, seed, algorithm) cell on a worker pool, then writes
/// per-run history and snapshots, summary tables and a manifest. A
/// failing run is recorded and the campaign carries on.
CampaignOutcome run_campaign(const CampaignConfig& config, const RunOptions& options = {});

}  // namespace cissl

#endif  // CISSL_CAMPAIGN_HPP_
