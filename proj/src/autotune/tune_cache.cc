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

#include "compactnn/autotune/tune_cache.h"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "compactnn/common/error.h"

namespace compactnn {

using nlohmann::json;

std::optional<KernelConfig> TuneCache::Lookup(const ShapeKey& key) const {
  if (const TuneEntry* e = Find(key)) return e->config;
  return std::nullopt;
}

const TuneEntry* TuneCache::Find(const ShapeKey& key) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

bool TuneCache::Record(const ShapeKey& key, const KernelConfig& config, double micros,
                       std::int64_t trials) {
  auto [it, inserted] = entries_.try_emplace(key, TuneEntry{config, micros, 0});
  TuneEntry& e = it->second;
  e.trials += trials;
  if (inserted) return true;
  if (micros < e.micros) {
    e.config = config;
    e.micros = micros;
    return true;
  }
  return false;
}

std::string TuneCache::ToJson() const {
  json arr = json::array();
  for (const auto& [key, e] : entries_) {
    arr.push_back({
        {"key",
         {{"kind", KernelKindName(key.kind)},
          {"m", key.m},
          {"n", key.n},
          {"k", key.k},
          {"sparsity_bucket", key.sparsity_bucket}}},
        {"config",
         {{"tile_m", e.config.tile_m},
          {"tile_n", e.config.tile_n},
          {"tile_k", e.config.tile_k},
          {"unroll", e.config.unroll},
          {"loop_order", LoopOrderName(e.config.loop_order)}}},
        {"micros", e.micros},
        {"trials", e.trials},
    });
  }
  return arr.dump(2) + "\n";
}

TuneCache TuneCache::FromJson(const std::string& text) {
  TuneCache cache;
  try {
    const json arr = json::parse(text);
    if (!arr.is_array()) throw FormatError("tune cache must be a JSON array");
    for (const auto& item : arr) {
      const json& k = item.at("key");
      const json& c = item.at("config");
      ShapeKey key;
      const auto kind = ParseKernelKind(k.at("kind").get<std::string>());
      if (!kind) throw FormatError("unknown kernel kind in tune cache");
      key.kind = *kind;
      key.m = k.at("m").get<std::int64_t>();
      key.n = k.at("n").get<std::int64_t>();
      key.k = k.at("k").get<std::int64_t>();
      key.sparsity_bucket = k.at("sparsity_bucket").get<int>();
      TuneEntry e;
      e.config.tile_m = c.at("tile_m").get<std::int64_t>();
      e.config.tile_n = c.at("tile_n").get<std::int64_t>();
      e.config.tile_k = c.at("tile_k").get<std::int64_t>();
      e.config.unroll = c.at("unroll").get<std::int64_t>();
      const auto order = ParseLoopOrder(c.at("loop_order").get<std::string>());
      if (!order) throw FormatError("unknown loop order in tune cache");
      e.config.loop_order = *order;
      if (!e.config.Valid()) throw FormatError("invalid kernel config in tune cache");
      e.micros = item.at("micros").get<double>();
      e.trials = item.at("trials").get<std::int64_t>();
      cache.entries_[key] = e;
    }
  } catch (const json::exception& ex) {
    throw FormatError(std::string("malformed tune cache: ") + ex.what());
  }
  return cache;
}

void TuneCache::Save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write tune cache " + path.string());
  out << ToJson();
  if (!out) throw Error("failed writing tune cache " + path.string());
}

TuneCache TuneCache::Load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  std::ifstream in(path);
  if (!in) throw Error("cannot read tune cache " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return FromJson(ss.str());
}

}  // namespace compactnn
