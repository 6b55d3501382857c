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

#ifndef COMPACTNN_AUTOTUNE_TUNE_CACHE_H_
#define COMPACTNN_AUTOTUNE_TUNE_CACHE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "compactnn/engine/kernel_config.h"

namespace compactnn {

struct TuneEntry {
  KernelConfig config;
  double micros = 0.0;
  std::int64_t trials = 0;
};

// Best known config per shape key. Recorded times only ever go down.
class TuneCache : public ConfigSource {
 public:
  std::optional<KernelConfig> Lookup(const ShapeKey& key) const override;
  const TuneEntry* Find(const ShapeKey& key) const;

  // Adds `trials` to the entry's count and adopts `config` if it beats the
  // stored time (or nothing is stored). Returns true when adopted.
  bool Record(const ShapeKey& key, const KernelConfig& config, double micros,
              std::int64_t trials = 1);

  std::size_t size() const { return entries_.size(); }
  const std::map<ShapeKey, TuneEntry>& entries() const { return entries_; }

  // JSON array of {key, config, micros, trials}. Parsing throws
  // FormatError on malformed documents.
  std::string ToJson() const;
  static TuneCache FromJson(const std::string& text);
  void Save(const std::filesystem::path& path) const;
  // A missing file yields an empty cache.
  static TuneCache Load(const std::filesystem::path& path);

 private:
  std::map<ShapeKey, TuneEntry> entries_;
};

}  // namespace compactnn

#endif  // COMPACTNN_AUTOTUNE_TUNE_CACHE_H_
