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

#include "compactnn/cli/compress_config.h"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "compactnn/common/error.h"

namespace compactnn {

namespace {

using nlohmann::json;

void RejectUnknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.count(it.key())) throw UsageError("unknown key \"" + it.key() + "\" in " + where);
}

double Fraction(const json& v, const std::string& what) {
  const double f = v.get<double>();
  if (!(f >= 0.0 && f < 1.0)) throw UsageError(what + " must be in [0, 1)");
  return f;
}

StageConfig ParseStage(const json& s, std::size_t index) {
  const std::string where = "stage " + std::to_string(index);
  if (!s.is_object()) throw UsageError(where + " must be an object");
  RejectUnknown(s, {"sparsity", "retain_k"}, where);
  if (s.contains("sparsity") == s.contains("retain_k"))
    throw UsageError(where + " needs exactly one of \"sparsity\" and \"retain_k\"");
  StageConfig st;
  if (s.contains("sparsity")) {
    const json& v = s["sparsity"];
    if (v.is_array()) {
      for (const auto& e : v) st.layer_sparsity.push_back(Fraction(e, where + " sparsity"));
    } else {
      st.sparsity = Fraction(v, where + " sparsity");
    }
  } else {
    for (const auto& e : s["retain_k"]) {
      const auto k = e.get<std::int64_t>();
      if (k < 1) throw UsageError(where + " retain_k entries must be positive");
      st.retain_k.push_back(k);
    }
  }
  return st;
}

}  // namespace

CompressConfig ParseCompressConfig(const std::string& json_text) {
  CompressConfig c;
  try {
    const json j = json::parse(json_text);
    if (!j.is_object()) throw UsageError("compression config must be a JSON object");
    RejectUnknown(j,
                  {"data", "stages", "quant_bits", "rho", "epochs_per_update", "retrain_epochs",
                   "lr", "momentum", "batch_size", "seed", "train_limit"},
                  "compression config");
    if (!j.contains("stages")) throw UsageError("compression config needs \"stages\"");
    c.data_dir = j.value("data", std::string());
    for (std::size_t i = 0; i < j["stages"].size(); ++i) c.stages.push_back(ParseStage(j["stages"][i], i));
    c.quant_bits = j.value("quant_bits", 0);
    if (c.quant_bits != 0 && (c.quant_bits < 2 || c.quant_bits > 16))
      throw UsageError("quant_bits must be 0 or in [2, 16]");
    if (c.stages.empty() && c.quant_bits == 0)
      throw UsageError("compression config asks for neither pruning nor quantization");

    auto& s = c.schedule;
    if (j.contains("rho")) {
      const json& r = j["rho"];
      RejectUnknown(r, {"initial", "multiplier", "stages", "iterations"}, "rho");
      s.rho_initial = r.value("initial", s.rho_initial);
      s.rho_multiplier = r.value("multiplier", s.rho_multiplier);
      s.rho_stages = r.value("stages", s.rho_stages);
      s.iterations_per_stage = r.value("iterations", s.iterations_per_stage);
    }
    s.epochs_per_update = j.value("epochs_per_update", s.epochs_per_update);
    s.sgd.lr = j.value("lr", s.sgd.lr);
    s.sgd.momentum = j.value("momentum", s.sgd.momentum);
    s.sgd.batch_size = j.value("batch_size", s.sgd.batch_size);
    c.retrain_epochs = j.value("retrain_epochs", c.retrain_epochs);
    c.seed = j.value("seed", c.seed);
    c.train_limit = j.value("train_limit", c.train_limit);
  } catch (const json::exception& e) {
    throw UsageError(std::string("compression config: ") + e.what());
  }
  const auto& s = c.schedule;
  if (!(s.rho_initial > 0.0) || !(s.rho_multiplier >= 1.0) || s.rho_stages < 1 ||
      s.iterations_per_stage < 1 || s.epochs_per_update < 1)
    throw UsageError("rho schedule needs initial > 0, multiplier >= 1 and positive counts");
  if (!(s.sgd.lr >= 0.0) || !(s.sgd.momentum >= 0.0 && s.sgd.momentum < 1.0) ||
      s.sgd.batch_size < 1)
    throw UsageError("lr must be >= 0, momentum in [0, 1), batch_size >= 1");
  if (c.retrain_epochs < 0 || c.train_limit < 0)
    throw UsageError("retrain_epochs and train_limit must be non-negative");
  return c;
}

CompressConfig LoadCompressConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseCompressConfig(ss.str());
}

PruneSpec ResolveStage(const StageConfig& stage, const TrainableNet& net) {
  const auto params = net.param_layers();
  PruneSpec spec;
  if (stage.sparsity) return UniformPruneSpec(net, 1.0 - *stage.sparsity);
  if (!stage.layer_sparsity.empty()) {
    if (stage.layer_sparsity.size() != params.size())
      throw UsageError("per-layer sparsity lists " + std::to_string(stage.layer_sparsity.size()) +
                       " layers, the model has " + std::to_string(params.size()));
    for (std::size_t l = 0; l < params.size(); ++l) {
      const auto n = static_cast<double>(net.layers()[params[l]].weight.size());
      spec.retain_k.push_back(
          std::max<std::int64_t>(1, std::llround((1.0 - stage.layer_sparsity[l]) * n)));
    }
    return spec;
  }
  spec.retain_k = stage.retain_k;
  try {
    CheckSpec(net, spec);
  } catch (const ParameterError& e) {
    throw UsageError(e.what());
  }
  return spec;
}

}  // namespace compactnn
