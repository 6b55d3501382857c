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

#include "compactnn/compress/training.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "compactnn/common/error.h"

namespace compactnn {

WeightMasks SupportMasks(const TrainableNet& net) {
  WeightMasks masks;
  for (auto i : net.param_layers()) {
    const auto& w = net.layers()[i].weight;
    std::vector<std::uint8_t> m(w.size());
    for (std::size_t j = 0; j < w.size(); ++j) m[j] = w[j] != 0.0f;
    masks.push_back(std::move(m));
  }
  return masks;
}

SgdTrainer::SgdTrainer(TrainableNet& net, SgdOptions options, std::uint64_t seed)
    : net_(net), options_(options), rng_(seed) {
  if (options_.batch_size < 1) throw ParameterError("batch size must be positive");
  for (auto i : net_.param_layers()) {
    vel_w_.emplace_back(net_.layers()[i].weight.size(), 0.0f);
    vel_b_.emplace_back(net_.layers()[i].bias.size(), 0.0f);
  }
}

void SgdTrainer::SetMasks(WeightMasks masks) {
  const auto params = net_.param_layers();
  if (masks.size() != params.size()) throw ShapeError("one mask per parameter layer expected");
  for (std::size_t p = 0; p < params.size(); ++p)
    if (masks[p].size() != net_.layers()[params[p]].weight.size())
      throw ShapeError("mask size does not match layer weights");
  masks_ = std::move(masks);
}

double SgdTrainer::RunEpoch(const Dataset& data, const GradientHook& hook) {
  if (data.size() == 0) throw ParameterError("empty dataset");
  if (data.sample_size() != net_.input_size())
    throw ShapeError("dataset samples have " + std::to_string(data.sample_size()) +
                     " values, net expects " + std::to_string(net_.input_size()));
  std::vector<std::int64_t> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng_);

  const auto params = net_.param_layers();
  const std::int64_t in = net_.input_size();
  std::vector<float> x;
  std::vector<std::int32_t> y;
  double total = 0.0;
  std::int64_t batches = 0;
  const float lr = static_cast<float>(options_.lr);
  const float mu = static_cast<float>(options_.momentum);
  for (std::int64_t start = 0; start < data.size(); start += options_.batch_size) {
    const std::int64_t b = std::min(options_.batch_size, data.size() - start);
    x.resize(static_cast<std::size_t>(b * in));
    y.resize(static_cast<std::size_t>(b));
    for (std::int64_t i = 0; i < b; ++i) {
      const std::int64_t s = order[start + i];
      std::copy(data.sample(s), data.sample(s) + in, x.begin() + i * in);
      y[i] = data.labels[s];
    }
    double loss = net_.ForwardBackward(x.data(), y, b);
    if (hook) loss += hook(net_);
    total += loss;
    ++batches;

    for (std::size_t p = 0; p < params.size(); ++p) {
      auto& l = net_.layers()[params[p]];
      if (!weights_frozen_) {
        const std::uint8_t* mask = masks_.empty() ? nullptr : masks_[p].data();
        for (std::size_t j = 0; j < l.weight.size(); ++j) {
          if (mask && !mask[j]) {
            vel_w_[p][j] = 0.0f;
            continue;
          }
          vel_w_[p][j] = mu * vel_w_[p][j] + l.grad_weight[j];
          l.weight[j] -= lr * vel_w_[p][j];
        }
      }
      for (std::size_t j = 0; j < l.bias.size(); ++j) {
        vel_b_[p][j] = mu * vel_b_[p][j] + l.grad_bias[j];
        l.bias[j] -= lr * vel_b_[p][j];
      }
    }
  }
  return total / static_cast<double>(batches);
}

double Evaluate(const TrainableNet& net, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  const std::int64_t classes = net.num_classes();
  constexpr std::int64_t kChunk = 1000;
  std::int64_t correct = 0;
  for (std::int64_t start = 0; start < data.size(); start += kChunk) {
    const std::int64_t b = std::min(kChunk, data.size() - start);
    const auto logits = net.Forward(data.sample(start), b);
    for (std::int64_t i = 0; i < b; ++i) {
      const float* row = logits.data() + i * classes;
      const auto best = std::max_element(row, row + classes) - row;
      correct += best == data.labels[start + i];
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainReport TrainDense(TrainableNet& net, const Dataset& train, const Dataset& held_out,
                       const TrainOptions& options) {
  SgdTrainer trainer(net, options.sgd, options.seed);
  TrainReport report;
  for (int e = 0; e < options.epochs; ++e) {
    const double loss = trainer.RunEpoch(train);
    if (!std::isfinite(loss))
      throw TrainingDivergedError(e, "training loss became non-finite in epoch " +
                                         std::to_string(e));
    report.epoch_loss.push_back(loss);
  }
  report.accuracy = Evaluate(net, held_out);
  return report;
}

}  // namespace compactnn
