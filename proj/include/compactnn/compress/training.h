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

#ifndef COMPACTNN_COMPRESS_TRAINING_H_
#define COMPACTNN_COMPRESS_TRAINING_H_

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "compactnn/compress/dataset.h"
#include "compactnn/compress/trainable_net.h"

namespace compactnn {

struct SgdOptions {
  double lr = 0.01;
  double momentum = 0.9;
  std::int64_t batch_size = 64;
};

// One 0/1 entry per weight of each parameter layer (param_layers() order).
using WeightMasks = std::vector<std::vector<std::uint8_t>>;

// Masks marking the nonzero weights of `net`.
WeightMasks SupportMasks(const TrainableNet& net);

// Mini-batch SGD with momentum. Samples are visited in an order shuffled
// per epoch from the seed, so runs are reproducible.
class SgdTrainer {
 public:
  // Called after backprop with the gradients in place; may add penalty
  // terms to them and returns the penalty value to add to the loss.
  using GradientHook = std::function<double(TrainableNet&)>;

  SgdTrainer(TrainableNet& net, SgdOptions options, std::uint64_t seed);

  // Masked weights get zero gradient and zero momentum, so a weight that
  // is zero stays exactly zero.
  void SetMasks(WeightMasks masks);
  // Only biases are updated.
  void FreezeWeights(bool frozen) { weights_frozen_ = frozen; }

  // One pass over `data`; returns the mean objective over its batches.
  double RunEpoch(const Dataset& data, const GradientHook& hook = {});

 private:
  TrainableNet& net_;
  SgdOptions options_;
  std::mt19937_64 rng_;
  WeightMasks masks_;
  bool weights_frozen_ = false;
  std::vector<std::vector<float>> vel_w_, vel_b_;
};

// Fraction of samples whose arg-max logit equals the label.
double Evaluate(const TrainableNet& net, const Dataset& data);

struct TrainOptions {
  int epochs = 20;
  SgdOptions sgd;
  std::uint64_t seed = 1;
};

struct TrainReport {
  std::vector<double> epoch_loss;
  double accuracy = 0.0;  // on the held-out set
};

// Throws TrainingDivergedError if an epoch ends with a non-finite loss.
TrainReport TrainDense(TrainableNet& net, const Dataset& train, const Dataset& held_out,
                       const TrainOptions& options);

}  // namespace compactnn

#endif  // COMPACTNN_COMPRESS_TRAINING_H_
