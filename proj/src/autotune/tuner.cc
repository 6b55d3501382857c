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

#include "compactnn/autotune/tuner.h"

#include <algorithm>
#include <chrono>
#include <limits>
#include <random>

#include "compactnn/common/error.h"
#include "compactnn/common/numeric.h"
#include "compactnn/engine/kernels.h"

namespace compactnn {

double Median(std::vector<double> samples) {
  if (samples.empty()) throw ParameterError("median of no samples");
  const std::size_t mid = samples.size() / 2;
  std::nth_element(samples.begin(), samples.begin() + static_cast<std::ptrdiff_t>(mid),
                   samples.end());
  const double hi = samples[mid];
  if (samples.size() % 2 == 1) return hi;
  const double lo = *std::max_element(samples.begin(),
                                      samples.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

KernelBench::KernelBench(const ShapeKey& key, std::uint64_t seed) : key_(key) {
  if (key.m < 1 || key.n < 1 || key.k < 1)
    throw ParameterError("shape key needs positive dims: " + key.ToString());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::bernoulli_distribution keep(key.kind == KernelKind::kSpmm
                                       ? 1.0 - BucketRepresentativeSparsity(key.sparsity_bucket)
                                       : 1.0);
  weights_ = Tensor({key.m, key.k}, Layout::kRowMajor2D);
  for (auto& v : weights_.data()) {
    const float r = dist(rng);
    v = keep(rng) ? (r == 0.0f ? 0.5f : r) : 0.0f;
  }
  x_ = Tensor({key.k, key.n}, Layout::kRowMajor2D);
  for (auto& v : x_.data()) v = dist(rng);
  out_ = Tensor({key.m, key.n}, Layout::kRowMajor2D);
  if (key.kind == KernelKind::kSpmm) csr_ = CsrFromDense(weights_);

  // Oracle in double, accumulated row by row.
  std::vector<double> acc(static_cast<std::size_t>(key.n));
  oracle_.resize(static_cast<std::size_t>(key.m * key.n));
  for (std::int64_t i = 0; i < key.m; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::int64_t p = 0; p < key.k; ++p) {
      const double a = weights_.at(i, p);
      if (a == 0.0) continue;
      for (std::int64_t j = 0; j < key.n; ++j) acc[j] += a * x_.at(p, j);
    }
    for (std::int64_t j = 0; j < key.n; ++j) oracle_[i * key.n + j] = static_cast<float>(acc[j]);
  }
}

void KernelBench::Run(const KernelConfig& cfg, const SparseMatrixCSR* packed, int threads) {
  if (packed != nullptr) {
    SpmmCsrTiled(*packed, x_.data(), out_.data(), key_.n, cfg, threads);
  } else {
    GemmTiled(weights_.data(), x_.data(), out_.data(), key_.m, key_.n, key_.k, cfg, threads);
  }
}

Measurement KernelBench::Measure(const KernelConfig& cfg, int repeats, int threads) {
  if (repeats < 3) throw ParameterError("measurement needs at least 3 repeats");
  std::optional<SparseMatrixCSR> packed;
  if (csr_) packed = PackWeightsTiled(*csr_, cfg);
  const SparseMatrixCSR* w = packed ? &*packed : nullptr;

  Run(cfg, w, threads);  // warmup, also the correctness gate
  const double err = MaxRelativeError(out_.data(), oracle_);
  if (!(err <= 1e-5))
    throw ExecutionError("kernel output for " + key_.ToString() + " with " + cfg.ToString() +
                         " deviates from the oracle by " + std::to_string(err));
  Measurement m;
  for (int r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    Run(cfg, w, threads);
    const auto stop = std::chrono::steady_clock::now();
    m.samples.push_back(std::chrono::duration<double, std::micro>(stop - start).count());
  }
  m.median_micros = Median(m.samples);
  return m;
}

double MeasureConfig(const ShapeKey& key, const KernelConfig& cfg, int repeats, int threads) {
  KernelBench bench(key);
  return bench.Measure(cfg, repeats, threads).median_micros;
}

namespace {

constexpr std::size_t kConfirmLeaders = 4;
constexpr int kConfirmRounds = 3;

}  // namespace

KernelConfig Tuner::TuneLayer(const ShapeKey& key, std::int64_t budget) {
  if (budget < 1) throw ParameterError("tuning budget must be at least 1");
  if (const TuneEntry* hit = cache_.Find(key)) return hit->config;

  const double sparsity =
      key.kind == KernelKind::kSpmm ? BucketRepresentativeSparsity(key.sparsity_bucket) : 0.0;
  const auto candidates =
      PruneSearchSpace(EnumerateSearchSpace(key), key, sparsity, options_.footprint_budget)
          .Expand();
  KernelBench bench(key, options_.seed);
  std::vector<std::pair<double, KernelConfig>> timed;
  std::int64_t trials = 0;
  for (const auto& cfg : candidates) {
    if (trials >= budget) break;
    ++trials;
    ++measurements_;
    try {
      timed.emplace_back(bench.Measure(cfg, options_.repeats, options_.threads).median_micros, cfg);
    } catch (const Error&) {
      // A failing config is skipped; the next candidate is tried.
    }
  }
  if (timed.empty()) return DefaultKernelConfig();

  // The fastest of many short medians is biased toward a lucky draw.
  // Re-time the leaders in interleaved rounds and keep each one's best
  // round median before choosing.
  std::stable_sort(timed.begin(), timed.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  if (timed.size() > kConfirmLeaders) timed.resize(kConfirmLeaders);
  if (timed.size() > 1) {
    std::vector<double> confirmed(timed.size(), std::numeric_limits<double>::infinity());
    for (int round = 0; round < kConfirmRounds; ++round)
      for (std::size_t i = 0; i < timed.size(); ++i)
        confirmed[i] = std::min(
            confirmed[i],
            bench.Measure(timed[i].second, options_.repeats, options_.threads).median_micros);
    for (std::size_t i = 0; i < timed.size(); ++i) timed[i].first = confirmed[i];
    std::stable_sort(timed.begin(), timed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
  }
  const std::optional<KernelConfig> best = timed.front().second;
  const double best_micros = timed.front().first;
  cache_.Record(key, *best, best_micros, trials);
  return *best;
}

}  // namespace compactnn
