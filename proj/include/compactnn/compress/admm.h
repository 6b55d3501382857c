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

#ifndef COMPACTNN_COMPRESS_ADMM_H_
#define COMPACTNN_COMPRESS_ADMM_H_

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "compactnn/compress/dataset.h"
#include "compactnn/compress/trainable_net.h"
#include "compactnn/compress/training.h"

namespace compactnn {

// Per parameter layer (param_layers() order): at most retain_k nonzeros.
struct PruneSpec {
  std::vector<std::int64_t> retain_k;
};

// Per parameter layer: the permitted weight values.
struct QuantSpec {
  std::vector<std::vector<float>> levels;
  std::vector<int> bits;
  std::vector<float> scale;
};

using CompressionSpec = std::variant<PruneSpec, QuantSpec>;

// retain_k = max(1, round(fraction * weights)) for every layer.
PruneSpec UniformPruneSpec(const TrainableNet& net, double retain_fraction);
// Symmetric levels per layer, scaled to that layer's current max |w|.
QuantSpec MakeQuantSpec(const TrainableNet& net, int bits);

// Throws ParameterError when the spec does not fit the net's layers.
void CheckSpec(const TrainableNet& net, const CompressionSpec& spec);
// Exact constraint test on the current weights.
bool Satisfies(const TrainableNet& net, const CompressionSpec& spec);

struct AdmmSchedule {
  double rho_initial = 1e-3;
  double rho_multiplier = 10.0;
  int rho_stages = 3;
  int iterations_per_stage = 1;
  int epochs_per_update = 5;  // SGD epochs in each x-update
  SgdOptions sgd;
  std::uint64_t seed = 1;
};

struct AdmmLayerState {
  std::vector<float> z;
  std::vector<float> u;
};

struct AdmmState {
  std::vector<AdmmLayerState> layers;
  double rho = 0.0;
};

struct HistoryRow {
  int iteration = 0;
  double loss = 0.0;      // mean cross-entropy plus penalty, last epoch
  double residual = 0.0;  // ||x - z||_2 after the iteration
  double accuracy = 0.0;  // on the evaluation set, NaN without one
};

struct AdmmResult {
  AdmmState state;
  std::vector<HistoryRow> history;
};

// u <- u + (x - z), elementwise.
void DualUpdate(std::span<const float> x, std::span<const float> z, std::span<float> u);

// z-update for one layer: the spec's projection of v (= x + u). With a
// support mask, entries outside it are forced to zero.
std::vector<float> ProjectLayer(const CompressionSpec& spec, std::size_t layer,
                                std::span<const float> v,
                                const std::vector<std::uint8_t>* support = nullptr);

// Scaled-form ADMM. Each outer iteration runs the x-update (SGD on the loss
// plus rho/2 * ||x - z + u||^2), projects x + u onto the constraint set,
// then updates the dual. rho is multiplied after each stage. `support`
// (optional) keeps a fixed sparsity pattern, used to quantize a pruned net.
// A non-finite loss throws TrainingDivergedError with the iteration.
AdmmResult AdmmCompress(TrainableNet& net, const CompressionSpec& spec, const Dataset& train,
                        const Dataset* eval, const AdmmSchedule& schedule,
                        const WeightMasks* support = nullptr);

struct RetrainOptions {
  int epochs = 3;
  SgdOptions sgd;
  std::uint64_t seed = 2;
};

// Hard-maps the net onto the constraint set and fine-tunes while keeping
// it there. Pruning: weights outside z's support are zeroed and stay zero.
// Quantization: weights are set to z and frozen; only biases train.
void MaskedRetrain(TrainableNet& net, const CompressionSpec& spec, const AdmmState& state,
                   const Dataset& train, const RetrainOptions& options,
                   const WeightMasks* support = nullptr);

struct StageReport {
  PruneSpec spec;
  std::vector<HistoryRow> history;
  double accuracy = 0.0;
};

// ADMM then masked retraining per stage, each stage starting from the
// previous result. Stages must have non-increasing retain_k per layer.
std::vector<StageReport> ProgressiveCompress(TrainableNet& net,
                                             const std::vector<PruneSpec>& stages,
                                             const Dataset& train, const Dataset* eval,
                                             const AdmmSchedule& schedule,
                                             const RetrainOptions& retrain);

// CSV with header "iteration,loss,residual,accuracy".
std::string HistoryCsv(const std::vector<HistoryRow>& history);

}  // namespace compactnn

#endif  // COMPACTNN_COMPRESS_ADMM_H_
