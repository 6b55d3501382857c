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

#ifndef COMPACTNN_CLI_COMMANDS_H_
#define COMPACTNN_CLI_COMMANDS_H_

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "compactnn/autotune/tune_cache.h"
#include "compactnn/autotune/tuner.h"
#include "compactnn/graph/graph.h"

namespace compactnn {

// Tunes every distinct kernel shape of `g` into `cache`. Returns the keys
// in first-use order.
std::vector<ShapeKey> TuneGraph(const Graph& g, TuneCache& cache, std::int64_t budget,
                                const TunerOptions& options);

struct BenchOptions {
  int runs = 7;
  // Sparsity used to derive the compressed weights of a model that has no
  // CSR layers yet.
  double sparsity = 0.9;
  int threads = 1;
  std::int64_t tune_budget = 16;
  int tune_repeats = 3;
  std::uint64_t seed = 7;
  // Largest max-norm relative error tolerated against the DC/unfused/default
  // output.
  double gate = 1e-4;
};

struct BenchRow {
  std::string model;
  std::string storage;  // "DC" dense, "SC" sparse/compressed
  bool fused = false;
  bool tuned = false;
  double median_ms = 0.0;
  double speedup = 0.0;  // DC/unfused/default median over this median
  double max_rel_err = 0.0;
  bool passed = false;
};

// All eight variants of one model. Both storages hold the same (pruned)
// weights so every variant computes the same function. Tuned variants tune
// their shapes into `cache` first.
std::vector<BenchRow> BenchModel(const std::string& name, const Graph& model,
                                 const BenchOptions& options, TuneCache& cache);

// Rows that passed the correctness gate, as a whitespace-aligned table.
std::string FormatBenchTable(const std::vector<BenchRow>& rows);

// Command-line entry point; `args` excludes the program name. Returns the
// process exit code: 0 on success, 2 for usage errors, 1 otherwise.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace compactnn

#endif  // COMPACTNN_CLI_COMMANDS_H_
