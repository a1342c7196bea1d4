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

#include "cissl/cissl.h"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "cissl/campaign.hpp"
#include "cissl/common.hpp"
#include "cissl/ema_analysis.hpp"
#include "cissl/report.hpp"
#include "cissl/tiny_net.hpp"

struct cissl_campaign {
  cissl::CampaignConfig config;
  cissl::RunOptions options;
  std::optional<cissl::CampaignOutcome> outcome;
};

struct cissl_model {
  cissl::MlpParams params;
};

namespace {

thread_local std::string g_last_error;

cissl_status fail(cissl_status status, const std::string& msg) {
  g_last_error = msg;
  return status;
}

template <typename F>
cissl_status guarded(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const cissl::ConfigError& e) {
    return fail(CISSL_E_CONFIG, e.what());
  } catch (const cissl::CapacityError& e) {
    return fail(CISSL_E_CAPACITY, e.what());
  } catch (const cissl::IoError& e) {
    return fail(CISSL_E_IO, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(CISSL_E_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(CISSL_E_INTERNAL, e.what());
  } catch (...) {
    return fail(CISSL_E_INTERNAL, "unknown error");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

cissl_status from_text(const std::string& text, cissl_campaign** out) {
  auto c = std::make_unique<cissl_campaign>();
  c->config = cissl::validate_config(text);
  *out = c.release();
  return CISSL_OK;
}

std::string pct(double v) {
  if (std::isnan(v)) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

void append_table(std::ostringstream& os, const char* title,
                  const std::vector<cissl::AggregateRow>& rows) {
  if (rows.empty()) return;
  os << title << " (error %, mean ± std over seeds)\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-14s %-20s %16s %16s %16s\n", "dataset", "algorithm", "all",
                "major", "minor");
  os << line;
  for (const auto& r : rows) {
    const auto& a = r.aggregate;
    auto cell = [&](double m, std::optional<double> s) {
      return s ? pct(m) + " ± " + pct(*s) : pct(m);
    };
    const auto& sd = a.stddev;
    std::snprintf(line, sizeof line, "%-14s %-20s %16s %16s %16s\n", r.dataset.c_str(),
                  r.algorithm.c_str(),
                  cell(a.mean.all, sd ? std::optional(sd->all) : std::nullopt).c_str(),
                  cell(a.mean.major, sd ? std::optional(sd->major) : std::nullopt).c_str(),
                  cell(a.mean.minor, sd ? std::optional(sd->minor) : std::nullopt).c_str());
    os << line;
  }
}

}  // namespace

extern "C" {

const char* cissl_version(void) { return "0.1.0"; }

const char* cissl_last_error(void) { return g_last_error.c_str(); }

const char* cissl_status_name(cissl_status status) {
  switch (status) {
    case CISSL_OK: return "ok";
    case CISSL_E_INVALID_ARGUMENT: return "invalid argument";
    case CISSL_E_CONFIG: return "config error";
    case CISSL_E_IO: return "i/o error";
    case CISSL_E_CAPACITY: return "capacity error";
    case CISSL_E_RUN_FAILED: return "run failed";
    case CISSL_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void cissl_string_free(char* s) { std::free(s); }

cissl_status cissl_campaign_from_text(const char* json_text, cissl_campaign** out) {
  return guarded([&] {
    if (!json_text || !out) return fail(CISSL_E_INVALID_ARGUMENT, "null argument");
    return from_text(json_text, out);
  });
}

cissl_status cissl_campaign_from_file(const char* path, cissl_campaign** out) {
  return guarded([&] {
    if (!path || !out) return fail(CISSL_E_INVALID_ARGUMENT, "null argument");
    std::ifstream in(path, std::ios::binary);
    if (!in) return fail(CISSL_E_IO, std::string("cannot open ") + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str(), out);
  });
}

cissl_status cissl_campaign_from_preset(const char* name, cissl_campaign** out) {
  return guarded([&] {
    if (!name || !out) return fail(CISSL_E_INVALID_ARGUMENT, "null argument");
    return from_text(cissl::preset_text(name), out);
  });
}

void cissl_campaign_free(cissl_campaign* campaign) { delete campaign; }

cissl_status cissl_campaign_dump(const cissl_campaign* campaign, char** out) {
  return guarded([&] {
    if (!campaign || !out) return fail(CISSL_E_INVALID_ARGUMENT, "null argument");
    *out = dup_string(cissl::dump_config(campaign->config));
    return CISSL_OK;
  });
}

cissl_status cissl_campaign_hash(const cissl_campaign* campaign, char out[17]) {
  return guarded([&] {
    if (!campaign || !out) return fail(CISSL_E_INVALID_ARGUMENT, "null argument");
    const std::string h = cissl::config_hash(campaign->config);
    std::memcpy(out, h.c_str(), 17);
    return CISSL_OK;
  });
}

cissl_status cissl_campaign_run_count(const cissl_campaign* campaign, int* out) {
  return guarded([&] {
    if (!campaign || !out) return fail(CISSL_E_INVALID_ARGUMENT, "null argument");
    const auto& c = campaign->config;
    *out = static_cast<int>(c.datasets.size() * c.algorithms.size() * c.seeds.size());
    return CISSL_OK;
  });
}

cissl_status cissl_campaign_set_output_dir(cissl_campaign* campaign, const char* dir) {
  return guarded([&] {
    if (!campaign || !dir) return fail(CISSL_E_INVALID_ARGUMENT, "null argument");
    campaign->options.output_dir = dir;
    return CISSL_OK;
  });
}

cissl_status cissl_campaign_set_workers(cissl_campaign* campaign, int workers) {
  return guarded([&] {
    if (!campaign) return fail(CISSL_E_INVALID_ARGUMENT, "null argument");
    if (workers < 1) return fail(CISSL_E_INVALID_ARGUMENT, "workers must be >= 1");
    campaign->options.workers = workers;
    return CISSL_OK;
  });
}

cissl_status cissl_campaign_set_only(cissl_campaign* campaign, const char* filter) {
  return guarded([&] {
    if (!campaign) return fail(CISSL_E_INVALID_ARGUMENT, "null argument");
    campaign->options.only = filter ? filter : "";
    return CISSL_OK;
  });
}

cissl_status cissl_campaign_run(cissl_campaign* campaign, cissl_run_callback callback, void* user,
                                cissl_run_summary* summary) {
  return guarded([&] {
    if (!campaign) return fail(CISSL_E_INVALID_ARGUMENT, "null argument");
    cissl::RunOptions opts = campaign->options;
    if (callback) {
      opts.on_run_done = [&](const cissl::RunRecord& r) {
        const double nan = std::nan("");
        cissl_run_info info{r.dataset.c_str(), r.algorithm.c_str(), r.seed,  r.ok ? 1 : 0,
                            r.error.c_str(),   r.wall_seconds,      r.ok ? r.student.all : nan,
                            r.ok ? r.student.major : nan, r.ok ? r.student.minor : nan};
        callback(&info, user);
      };
    }
    campaign->outcome = cissl::run_campaign(campaign->config, opts);
    const int failures = campaign->outcome->failures();
    if (summary) *summary = {static_cast<int>(campaign->outcome->runs.size()), failures};
    if (failures > 0) {
      std::string msg = std::to_string(failures) + " run(s) failed:";
      for (const auto& r : campaign->outcome->runs)
        if (!r.ok)
          msg += "\n  " + r.dataset + ":" + r.algorithm + ":" + std::to_string(r.seed) + ": " + r.error;
      return fail(CISSL_E_RUN_FAILED, msg);
    }
    return CISSL_OK;
  });
}

cissl_status cissl_campaign_report_text(const cissl_campaign* campaign, char** out) {
  return guarded([&] {
    if (!campaign || !out) return fail(CISSL_E_INVALID_ARGUMENT, "null argument");
    if (!campaign->outcome) return fail(CISSL_E_INVALID_ARGUMENT, "campaign has not been run");
    std::ostringstream os;
    append_table(os, "Student", campaign->outcome->table);
    if (!campaign->outcome->table_ema.empty()) os << '\n';
    append_table(os, "EMA target", campaign->outcome->table_ema);
    *out = dup_string(os.str());
    return CISSL_OK;
  });
}

cissl_status cissl_campaign_files(const cissl_campaign* campaign, char** out) {
  return guarded([&] {
    if (!campaign || !out) return fail(CISSL_E_INVALID_ARGUMENT, "null argument");
    if (!campaign->outcome) return fail(CISSL_E_INVALID_ARGUMENT, "campaign has not been run");
    std::string s;
    for (const auto& f : campaign->outcome->files) s += f + "\n";
    *out = dup_string(s);
    return CISSL_OK;
  });
}

int cissl_preset_count(void) { return static_cast<int>(cissl::preset_names().size()); }

const char* cissl_preset_name(int index) {
  static const std::vector<std::string> names = cissl::preset_names();
  if (index < 0 || index >= static_cast<int>(names.size())) return nullptr;
  return names[index].c_str();
}

cissl_status cissl_preset_text(const char* name, char** out) {
  return guarded([&] {
    if (!name || !out) return fail(CISSL_E_INVALID_ARGUMENT, "null argument");
    *out = dup_string(cissl::preset_text(name));
    return CISSL_OK;
  });
}

cissl_status cissl_model_load(const char* path, cissl_model** out) {
  return guarded([&] {
    if (!path || !out) return fail(CISSL_E_INVALID_ARGUMENT, "null argument");
    *out = new cissl_model{cissl::load_params(path)};
    return CISSL_OK;
  });
}

void cissl_model_free(cissl_model* model) { delete model; }

int cissl_model_num_classes(const cissl_model* model) {
  return model ? model->params.shape().sizes.back() : 0;
}

cissl_status cissl_model_predict_proba(const cissl_model* model, const double* xy, size_t n,
                                       double* probs) {
  return guarded([&] {
    if (!model || (n > 0 && (!xy || !probs))) return fail(CISSL_E_INVALID_ARGUMENT, "null argument");
    if (n == 0) return CISSL_OK;
    cissl::Matrix batch(static_cast<Eigen::Index>(n), 2);
    for (size_t i = 0; i < n; ++i) {
      batch(static_cast<Eigen::Index>(i), 0) = xy[2 * i];
      batch(static_cast<Eigen::Index>(i), 1) = xy[2 * i + 1];
    }
    const cissl::Matrix p = cissl::softmax(cissl::forward(model->params, batch).pre_activations.back());
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      for (Eigen::Index c = 0; c < p.cols(); ++c) *probs++ = p(i, c);
    return CISSL_OK;
  });
}

cissl_status cissl_imbalance_counts(int n_max, double rho, int num_classes, int* out) {
  return guarded([&] {
    if (!out) return fail(CISSL_E_INVALID_ARGUMENT, "null argument");
    const auto counts = cissl::imbalance_counts(n_max, rho, num_classes);
    for (int c = 0; c < num_classes; ++c) out[c] = counts[c];
    return CISSL_OK;
  });
}

cissl_status cissl_coefficient_gap(int lag, double delta, double gamma, double* out) {
  return guarded([&] {
    if (!out) return fail(CISSL_E_INVALID_ARGUMENT, "null argument");
    if (lag < 1) return fail(CISSL_E_INVALID_ARGUMENT, "lag must be >= 1");
    *out = cissl::coefficient_gap(lag, 0, delta, gamma);
    return CISSL_OK;
  });
}

}  // extern "C"
