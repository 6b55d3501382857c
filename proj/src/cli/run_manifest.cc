// Copyright (c) 2026 The compactnn Authors. All Rights Reserved.
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

#include "compactnn/cli/run_manifest.h"

#include <filesystem>

#include "compactnn/common/error.h"

namespace compactnn {

void ValidateManifest(const RunManifest& m) {
  if (m.threads < 1) throw UsageError("--threads must be at least 1");
  for (const auto& p : m.required_inputs)
    if (!std::filesystem::exists(p)) throw UsageError(m.command + ": input " + p + " does not exist");
}

std::string DescribeManifest(const RunManifest& m) {
  std::string out = "command: " + m.command + "\n";
  auto line = [&](const char* key, const std::string& v) {
    if (!v.empty()) out += std::string(key) + ": " + v + "\n";
  };
  line("config", m.config_path);
  for (const auto& p : m.model_paths) line("model", p);
  line("input", m.input_path);
  line("data", m.data_dir);
  line("tune-cache", m.tune_cache_path);
  for (const auto& p : m.output_paths) line("output", p);
  out += "seed: " + std::to_string(m.seed) + "\nthreads: " + std::to_string(m.threads) + "\n";
  return out;
}

}  // namespace compactnn
