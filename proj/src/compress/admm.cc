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

#include "compactnn/compress/admm.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "compactnn/common/error.h"
#include "compactnn/compress/projection.h"

namespace compactnn {

namespace {

std::size_t SpecLayers(const CompressionSpec& spec) {
  if (const auto* p = std::get_if<PruneSpec>(&spec)) return p->retain_k.size();
  return std::get<QuantSpec>(spec).levels.size();
}

void CheckFinite(double loss, int iteration) {
  if (!std::isfinite(loss))
    throw TrainingDivergedError(iteration, "loss became non-finite in ADMM iteration " +
                                               std::to_string(iteration));
}

}  // namespace

PruneSpec UniformPruneSpec(const TrainableNet& net, double retain_fraction) {
  if (!(retain_fraction > 0.0 && retain_fraction <= 1.0))
    throw ParameterError("retain fraction must be in (0, 1]");
  PruneSpec spec;
  for (auto i : net.param_layers()) {
    const auto n = static_cast<double>(net.layers()[i].weight.size());
    spec.retain_k.push_back(std::max<std::int64_t>(1, std::llround(retain_fraction * n)));
  }
  return spec;
}

QuantSpec MakeQuantSpec(const TrainableNet& net, int bits) {
  QuantSpec spec;
  for (auto i : net.param_layers()) {
    float max_abs = 0.0f;
    for (float v : net.layers()[i].weight) max_abs = std::max(max_abs, std::abs(v));
    spec.levels.push_back(SymmetricLevels(max_abs, bits));
    spec.bits.push_back(bits);
    spec.scale.push_back(max_abs / static_cast<float>((1 << (bits - 1)) - 1));
  }
  return spec;
}

void CheckSpec(const TrainableNet& net, const CompressionSpec& spec) {
  const auto params = net.param_layers();
  if (SpecLayers(spec) != params.size())
    throw ParameterError("spec covers " + std::to_string(SpecLayers(spec)) +
                         " layers, net has " + std::to_string(params.size()));
  if (const auto* p = std::get_if<PruneSpec>(&spec)) {
    for (std::size_t l = 0; l < params.size(); ++l) {
      const auto n = static_cast<std::int64_t>(net.layers()[params[l]].weight.size());
      if (p->retain_k[l] <= 0 || p->retain_k[l] > n)
        throw ParameterError("layer " + std::to_string(l) + " retain_k " +
                             std::to_string(p->retain_k[l]) + " outside [1, " +
                             std::to_string(n) + "]");
    }
  } else {
    for (const auto& levels : std::get<QuantSpec>(spec).levels) {
      if (levels.empty()) throw ParameterError("empty level set");
      if (!std::is_sorted(levels.begin(), levels.end()) ||
          std::adjacent_find(levels.begin(), levels.end()) != levels.end())
        throw ParameterError("levels must be sorted and distinct");
    }
  }
}

bool Satisfies(const TrainableNet& net, const CompressionSpec& spec) {
  const auto params = net.param_layers();
  if (SpecLayers(spec) != params.size()) return false;
  for (std::size_t l = 0; l < params.size(); ++l) {
    const auto& w = net.layers()[params[l]].weight;
    if (const auto* p = std::get_if<PruneSpec>(&spec)) {
      const auto nnz = std::count_if(w.begin(), w.end(), [](float v) { return v != 0.0f; });
      if (nnz > p->retain_k[l]) return false;
    } else if (!AllInLevels(w, std::get<QuantSpec>(spec).levels[l])) {
      return false;
    }
  }
  return true;
}

void DualUpdate(std::span<const float> x, std::span<const float> z, std::span<float> u) {
  if (x.size() != z.size() || x.size() != u.size()) throw ShapeError("dual update size mismatch");
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = u[i] + (x[i] - z[i]);
}

std::vector<float> ProjectLayer(const CompressionSpec& spec, std::size_t layer,
                                std::span<const float> v,
                                const std::vector<std::uint8_t>* support) {
  std::vector<float> z;
  if (const auto* p = std::get_if<PruneSpec>(&spec)) {
    if (support) {
      // Nearest point with <= k nonzeros inside the support: project the
      // restricted vector.
      std::vector<float> r(v.begin(), v.end());
      for (std::size_t j = 0; j < r.size(); ++j)
        if (!(*support)[j]) r[j] = 0.0f;
      z = ProjectSparsity(r, p->retain_k[layer]);
    } else {
      z = ProjectSparsity(v, p->retain_k[layer]);
    }
  } else {
    z = ProjectQuantization(v, std::get<QuantSpec>(spec).levels[layer]);
    if (support)
      for (std::size_t j = 0; j < z.size(); ++j)
        if (!(*support)[j]) z[j] = 0.0f;
  }
  return z;
}

AdmmResult AdmmCompress(TrainableNet& net, const CompressionSpec& spec, const Dataset& train,
                        const Dataset* eval, const AdmmSchedule& schedule,
                        const WeightMasks* support) {
  CheckSpec(net, spec);
  if (schedule.rho_stages < 1 || schedule.iterations_per_stage < 1 ||
      schedule.epochs_per_update < 1 || !(schedule.rho_initial > 0.0))
    throw ParameterError("ADMM schedule needs positive stages, iterations, epochs and rho");
  const auto params = net.param_layers();
  if (support && support->size() != params.size())
    throw ShapeError("one support mask per parameter layer expected");
  auto mask_of = [&](std::size_t p) { return support ? &(*support)[p] : nullptr; };

  AdmmResult result;
  AdmmState& st = result.state;
  for (std::size_t p = 0; p < params.size(); ++p) {
    const auto& w = net.layers()[params[p]].weight;
    st.layers.push_back({ProjectLayer(spec, p, w, mask_of(p)), std::vector<float>(w.size(), 0.0f)});
  }

  SgdTrainer trainer(net, schedule.sgd, schedule.seed);
  if (support) trainer.SetMasks(*support);
  double rho = schedule.rho_initial;
  int iteration = 0;
  for (int stage = 0; stage < schedule.rho_stages; ++stage) {
    for (int it = 0; it < schedule.iterations_per_stage; ++it, ++iteration) {
      st.rho = rho;
      const float r = static_cast<float>(rho);
      auto penalty = [&](TrainableNet& n) {
        double sq = 0.0;
        for (std::size_t p = 0; p < params.size(); ++p) {
          auto& l = n.layers()[params[p]];
          const auto& z = st.layers[p].z;
          const auto& u = st.layers[p].u;
          for (std::size_t j = 0; j < l.weight.size(); ++j) {
            const float d = l.weight[j] - z[j] + u[j];
            l.grad_weight[j] += r * d;
            sq += static_cast<double>(d) * d;
          }
        }
        return 0.5 * rho * sq;
      };
      double loss = 0.0;
      for (int e = 0; e < schedule.epochs_per_update; ++e) {
        loss = trainer.RunEpoch(train, penalty);
        CheckFinite(loss, iteration);
      }

      double residual_sq = 0.0;
      for (std::size_t p = 0; p < params.size(); ++p) {
        const auto& x = net.layers()[params[p]].weight;
        auto& ls = st.layers[p];
        std::vector<float> v(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) v[j] = x[j] + ls.u[j];
        ls.z = ProjectLayer(spec, p, v, mask_of(p));
        DualUpdate(x, ls.z, ls.u);
        for (std::size_t j = 0; j < x.size(); ++j) {
          const double d = static_cast<double>(x[j]) - ls.z[j];
          residual_sq += d * d;
        }
      }
      HistoryRow row;
      row.iteration = iteration;
      row.loss = loss;
      row.residual = std::sqrt(residual_sq);
      row.accuracy = eval ? Evaluate(net, *eval) : std::numeric_limits<double>::quiet_NaN();
      result.history.push_back(row);
    }
    rho *= schedule.rho_multiplier;
  }
  return result;
}

void MaskedRetrain(TrainableNet& net, const CompressionSpec& spec, const AdmmState& state,
                   const Dataset& train, const RetrainOptions& options,
                   const WeightMasks* support) {
  CheckSpec(net, spec);
  const auto params = net.param_layers();
  if (state.layers.size() != params.size())
    throw ShapeError("ADMM state does not match the net's parameter layers");
  SgdTrainer trainer(net, options.sgd, options.seed);
  if (std::holds_alternative<PruneSpec>(spec)) {
    WeightMasks masks;
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto& w = net.layers()[params[p]].weight;
      const auto& z = state.layers[p].z;
      std::vector<std::uint8_t> m(w.size());
      for (std::size_t j = 0; j < w.size(); ++j) {
        m[j] = z[j] != 0.0f && (!support || (*support)[p][j]);
        if (!m[j]) w[j] = 0.0f;
      }
      masks.push_back(std::move(m));
    }
    trainer.SetMasks(std::move(masks));
  } else {
    for (std::size_t p = 0; p < params.size(); ++p) net.layers()[params[p]].weight = state.layers[p].z;
    trainer.FreezeWeights(true);
  }
  for (int e = 0; e < options.epochs; ++e) CheckFinite(trainer.RunEpoch(train), e);
}

std::vector<StageReport> ProgressiveCompress(TrainableNet& net,
                                             const std::vector<PruneSpec>& stages,
                                             const Dataset& train, const Dataset* eval,
                                             const AdmmSchedule& schedule,
                                             const RetrainOptions& retrain) {
  if (stages.empty()) throw ParameterError("progressive compression needs at least one stage");
  for (std::size_t s = 1; s < stages.size(); ++s) {
    if (stages[s].retain_k.size() != stages[s - 1].retain_k.size())
      throw ParameterError("stages cover different layer counts");
    for (std::size_t l = 0; l < stages[s].retain_k.size(); ++l)
      if (stages[s].retain_k[l] > stages[s - 1].retain_k[l])
        throw ParameterError("stage " + std::to_string(s) + " loosens layer " +
                             std::to_string(l) + " (retain_k " +
                             std::to_string(stages[s - 1].retain_k[l]) + " -> " +
                             std::to_string(stages[s].retain_k[l]) + ")");
  }
  for (const auto& s : stages) CheckSpec(net, s);

  std::vector<StageReport> reports;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    AdmmSchedule sched = schedule;
    sched.seed = schedule.seed + 1000 * s;
    RetrainOptions ro = retrain;
    ro.seed = retrain.seed + 1000 * s;
    AdmmResult admm = AdmmCompress(net, stages[s], train, eval, sched);
    MaskedRetrain(net, stages[s], admm.state, train, ro);
    StageReport r;
    r.spec = stages[s];
    r.history = std::move(admm.history);
    r.accuracy = eval ? Evaluate(net, *eval) : std::numeric_limits<double>::quiet_NaN();
    reports.push_back(std::move(r));
  }
  return reports;
}

std::string HistoryCsv(const std::vector<HistoryRow>& history) {
  std::string out = "iteration,loss,residual,accuracy\n";
  char line[160];
  for (const auto& h : history) {
    std::snprintf(line, sizeof(line), "%d,%.9g,%.9g,%.6f\n", h.iteration, h.loss, h.residual,
                  h.accuracy);
    out += line;
  }
  return out;
}

}  // namespace compactnn
