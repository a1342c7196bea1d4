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

// Command-line front end over the C API.
//
//   cissl run <config|preset> [--out DIR] [--workers N] [--only D:A:S]
//   cissl validate <config> [--print]
//   cissl preset <name> --out DIR      run a built-in preset
//   cissl preset --list | <name> --show

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"

#include "cissl/cissl.h"

namespace {

struct CampaignDeleter {
  void operator()(cissl_campaign* c) const { cissl_campaign_free(c); }
};
using CampaignPtr = std::unique_ptr<cissl_campaign, CampaignDeleter>;

int report_error(cissl_status st) {
  std::cerr << "error (" << cissl_status_name(st) << "): " << cissl_last_error() << "\n";
  return st == CISSL_E_CONFIG ? 2 : 1;
}

bool is_preset(const std::string& name) {
  for (int i = 0; i < cissl_preset_count(); ++i)
    if (name == cissl_preset_name(i)) return true;
  return false;
}

cissl_status open_campaign(const std::string& source, CampaignPtr& out) {
  cissl_campaign* c = nullptr;
  cissl_status st;
  if (!std::filesystem::exists(source) && is_preset(source))
    st = cissl_campaign_from_preset(source.c_str(), &c);
  else
    st = cissl_campaign_from_file(source.c_str(), &c);
  out.reset(c);
  return st;
}

int workers_from_env(int fallback) {
  const char* env = std::getenv("CISSL_WORKERS");
  if (!env || !*env) return fallback;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1) {
    std::cerr << "warning: ignoring CISSL_WORKERS=" << env << "\n";
    return fallback;
  }
  return static_cast<int>(v);
}

void on_run(const cissl_run_info* info, void* user) {
  const bool quiet = *static_cast<bool*>(user);
  if (info->ok) {
    if (!quiet)
      std::printf("[ok]   %s:%s:%lld  all=%.4f major=%.4f minor=%.4f  (%.1fs)\n", info->dataset,
                  info->algorithm, static_cast<long long>(info->seed), info->err_all,
                  info->err_major, info->err_minor, info->wall_seconds);
  } else {
    std::printf("[FAIL] %s:%s:%lld  %s\n", info->dataset, info->algorithm,
                static_cast<long long>(info->seed), info->error);
  }
  std::fflush(stdout);
}

int run(const std::string& source, const std::string& out_dir, int workers, const std::string& only,
        bool quiet) {
  CampaignPtr c;
  if (cissl_status st = open_campaign(source, c); st != CISSL_OK) return report_error(st);
  if (!out_dir.empty()) cissl_campaign_set_output_dir(c.get(), out_dir.c_str());
  if (cissl_status st = cissl_campaign_set_workers(c.get(), workers_from_env(workers)); st != CISSL_OK)
    return report_error(st);
  cissl_campaign_set_only(c.get(), only.c_str());

  cissl_run_summary summary{};
  const cissl_status st = cissl_campaign_run(c.get(), on_run, &quiet, &summary);
  if (st != CISSL_OK && st != CISSL_E_RUN_FAILED) return report_error(st);

  char* table = nullptr;
  if (cissl_campaign_report_text(c.get(), &table) == CISSL_OK) {
    if (*table) std::printf("\n%s", table);
    cissl_string_free(table);
  }
  char* files = nullptr;
  if (!quiet && cissl_campaign_files(c.get(), &files) == CISSL_OK) {
    std::printf("\nwrote:\n%s", files);
    cissl_string_free(files);
  }
  std::printf("\n%d run(s), %d failed\n", summary.runs, summary.failures);
  if (st == CISSL_E_RUN_FAILED) {
    std::cerr << cissl_last_error() << "\n";
    return 1;
  }
  return 0;
}

int validate(const std::string& source, bool print) {
  CampaignPtr c;
  if (cissl_status st = open_campaign(source, c); st != CISSL_OK) return report_error(st);
  char hash[17];
  cissl_campaign_hash(c.get(), hash);
  int runs = 0;
  cissl_campaign_run_count(c.get(), &runs);
  if (print) {
    char* text = nullptr;
    cissl_campaign_dump(c.get(), &text);
    std::printf("%s", text);
    cissl_string_free(text);
  } else {
    std::printf("ok: %d run(s), config hash %s\n", runs, hash);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Class-imbalanced semi-supervised learning toy lab"};
  app.set_version_flag("--version", cissl_version());
  app.require_subcommand(1);

  std::string source, out_dir, only, preset;
  int workers = 1;
  bool quiet = false, print = false, list = false, show = false;

  auto* run_cmd = app.add_subcommand("run", "Run a campaign config file or built-in preset");
  run_cmd->add_option("config", source, "Config file (JSON) or preset name")->required();
  run_cmd->add_option("-o,--out", out_dir, "Output directory (overrides the config)");
  run_cmd->add_option("-j,--workers", workers, "Worker threads (env CISSL_WORKERS overrides)")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--only", only, "Restrict to dataset:algorithm:seed (empty fields match all)");
  run_cmd->add_flag("-q,--quiet", quiet, "Only print failures and the final table");

  auto* val_cmd = app.add_subcommand("validate", "Validate a config and report its hash");
  val_cmd->add_option("config", source, "Config file (JSON) or preset name")->required();
  val_cmd->add_flag("--print", print, "Print the canonical config with all defaults");

  auto* preset_cmd = app.add_subcommand("preset", "Run or inspect a built-in preset");
  preset_cmd->add_option("name", preset, "Preset name");
  preset_cmd->add_option("-o,--out", out_dir, "Output directory");
  preset_cmd->add_option("-j,--workers", workers, "Worker threads (env CISSL_WORKERS overrides)")
      ->check(CLI::PositiveNumber);
  preset_cmd->add_option("--only", only, "Restrict to dataset:algorithm:seed");
  preset_cmd->add_flag("-q,--quiet", quiet, "Only print failures and the final table");
  preset_cmd->add_flag("--list", list, "List preset names");
  preset_cmd->add_flag("--show", show, "Print the preset's JSON instead of running it");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  if (*run_cmd) return run(source, out_dir, workers, only, quiet);
  if (*val_cmd) return validate(source, print);

  if (list) {
    for (int i = 0; i < cissl_preset_count(); ++i) std::printf("%s\n", cissl_preset_name(i));
    return 0;
  }
  if (preset.empty()) {
    std::cerr << "error: preset name required (see --list)\n";
    return 2;
  }
  if (!is_preset(preset)) {
    std::cerr << "error: unknown preset '" << preset << "' (see --list)\n";
    return 2;
  }
  if (show) {
    char* text = nullptr;
    if (cissl_status st = cissl_preset_text(preset.c_str(), &text); st != CISSL_OK)
      return report_error(st);
    std::printf("%s", text);
    cissl_string_free(text);
    return 0;
  }
  if (out_dir.empty()) {
    std::cerr << "error: --out is required to run a preset\n";
    return 2;
  }
  return run(preset, out_dir, workers, only, quiet);
}
