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

#ifndef COMPACTNN_AUTOTUNE_TUNER_H_
#define COMPACTNN_AUTOTUNE_TUNER_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "compactnn/autotune/search_space.h"
#include "compactnn/autotune/tune_cache.h"
#include "compactnn/engine/kernel_config.h"
#include "compactnn/tensor/sparse_matrix.h"
#include "compactnn/tensor/tensor.h"

namespace compactnn {

double Median(std::vector<double> samples);

struct Measurement {
  double median_micros = 0.0;
  std::vector<double> samples;  // timed runs, warmup excluded
};

// Synthetic operands for one shape key plus a double-precision oracle of
// their product. Sparse keys get a weight matrix at the bucket's
// representative sparsity.
class KernelBench {
 public:
  explicit KernelBench(const ShapeKey& key, std::uint64_t seed = 7);

  // One warmup run, then `repeats` timed runs. The warmup output is checked
  // against the oracle (1e-5 relative) before anything is timed; a
  // mismatch throws ExecutionError. repeats < 3 is a ParameterError.
  Measurement Measure(const KernelConfig& cfg, int repeats, int threads = 1);

  const ShapeKey& key() const { return key_; }

 private:
  void Run(const KernelConfig& cfg, const SparseMatrixCSR* packed, int threads);

  ShapeKey key_;
  Tensor weights_;                       // m x k, dense view
  std::optional<SparseMatrixCSR> csr_;   // spmm keys only
  Tensor x_;                             // k x n
  Tensor out_;                           // m x n
  std::vector<float> oracle_;
};

double MeasureConfig(const ShapeKey& key, const KernelConfig& cfg, int repeats,
                     int threads = 1);

struct TunerOptions {
  int repeats = 5;
  int threads = 1;
  std::int64_t footprint_budget = kDefaultFootprintBudget;
  std::uint64_t seed = 7;
};

class Tuner {
 public:
  Tuner(TuneCache& cache, TunerOptions options = {}) : cache_(cache), options_(options) {}

  // Measures up to `budget` configs of the pruned space in Expand() order,
  // re-times the four fastest in three interleaved rounds and returns the
  // winner, recording it in the cache. A cached key is returned without
  // measuring. If every trial fails the default config is returned and
  // nothing is recorded. measurements() counts configs tried, not the
  // re-timings.
  KernelConfig TuneLayer(const ShapeKey& key, std::int64_t budget);

  std::int64_t measurements() const { return measurements_; }

 private:
  TuneCache& cache_;
  TunerOptions options_;
  std::int64_t measurements_ = 0;
};

}  // namespace compactnn

#endif  // COMPACTNN_AUTOTUNE_TUNER_H_
