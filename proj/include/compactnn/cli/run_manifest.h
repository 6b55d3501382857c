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

#ifndef COMPACTNN_CLI_RUN_MANIFEST_H_
#define COMPACTNN_CLI_RUN_MANIFEST_H_

#include <cstdint>
#include <string>
#include <vector>

namespace compactnn {

// Everything a command will touch, resolved before it starts.
struct RunManifest {
  std::string command;
  std::string config_path;
  std::vector<std::string> model_paths;
  std::string input_path;
  std::string data_dir;
  std::string tune_cache_path;
  std::vector<std::string> output_paths;
  std::uint64_t seed = 7;
  int threads = 1;
  bool profile = false;

  // Paths that must exist when the command begins.
  std::vector<std::string> required_inputs;
};

// Throws UsageError naming the first required input that does not exist
// and rejecting threads < 1.
void ValidateManifest(const RunManifest& m);

// One `key: value` line per populated field.
std::string DescribeManifest(const RunManifest& m);

}  // namespace compactnn

#endif  // COMPACTNN_CLI_RUN_MANIFEST_H_
