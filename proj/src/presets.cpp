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

#include <utility>

#include "cissl/campaign.hpp"
#include "cissl/common.hpp"

namespace cissl {

namespace {

// Generated from presets/*.json at configure time.
const std::pair<const char*, const char*> kPresets[] = {
#include "presets.inc"
};

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : kPresets) out.emplace_back(p.first);
  return out;
}

std::string preset_text(const std::string& name) {
  for (const auto& p : kPresets)
    if (name == p.first) return p.second;
  std::string known;
  for (const auto& p : kPresets) known += std::string(known.empty() ? "" : ", ") + p.first;
  throw InvalidArgument("unknown preset '" + name + "' (known: " + known + ")");
}

}  // namespace cissl
