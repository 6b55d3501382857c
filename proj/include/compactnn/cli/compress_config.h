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

#ifndef COMPACTNN_CLI_COMPRESS_CONFIG_H_
#define COMPACTNN_CLI_COMPRESS_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "compactnn/compress/admm.h"

namespace compactnn {

// One pruning stage. Exactly one of the three forms is set.
struct StageConfig {
  std::optional<double> sparsity;              // same fraction of zeros everywhere
  std::vector<double> layer_sparsity;          // per parameter layer
  std::vector<std::int64_t> retain_k;          // per parameter layer
};

// Compression run description, read from JSON:
//
//   {
//     "data": "/path/to/mnist",
//     "stages": [{"sparsity": 0.75}, {"retain_k": [23520, 3000, 100]}],
//     "quant_bits": 4,
//     "rho": {"initial": 1e-3, "multiplier": 10, "stages": 3, "iterations": 1},
//     "epochs_per_update": 5, "retrain_epochs": 3,
//     "lr": 0.01, "momentum": 0.9, "batch_size": 64,
//     "seed": 1, "train_limit": 0
//   }
//
// Every key is optional except "stages" (which may be empty when only
// quantizing). quant_bits 0 disables quantization.
struct CompressConfig {
  std::string data_dir;
  std::vector<StageConfig> stages;
  int quant_bits = 0;
  AdmmSchedule schedule;
  int retrain_epochs = 3;
  std::uint64_t seed = 1;
  std::int64_t train_limit = 0;  // 0: the whole training set
};

// Throws UsageError on malformed JSON, unknown keys or bad values.
CompressConfig ParseCompressConfig(const std::string& json_text);
CompressConfig LoadCompressConfig(const std::string& path);

// The stage as a PruneSpec for `net`.
PruneSpec ResolveStage(const StageConfig& stage, const TrainableNet& net);

}  // namespace compactnn

#endif  // COMPACTNN_CLI_COMPRESS_CONFIG_H_
