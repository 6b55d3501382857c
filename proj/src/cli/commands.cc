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

#include "compactnn/cli/commands.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>
#include <set>

#include <CLI11.hpp>

#include "compactnn/cli/compress_config.h"
#include "compactnn/cli/mnist_idx.h"
#include "compactnn/cli/run_manifest.h"
#include "compactnn/common/error.h"
#include "compactnn/common/numeric.h"
#include "compactnn/compress/admm.h"
#include "compactnn/compress/export.h"
#include "compactnn/compress/training.h"
#include "compactnn/engine/executor.h"
#include "compactnn/fusion/passes.h"
#include "compactnn/graph/model_file.h"
#include "compactnn/graph/reference_graphs.h"

namespace compactnn {

std::vector<ShapeKey> TuneGraph(const Graph& g, TuneCache& cache, std::int64_t budget,
                                const TunerOptions& options) {
  Tuner tuner(cache, options);
  std::vector<ShapeKey> keys;
  std::set<ShapeKey> seen;
  for (const auto& nk : CollectShapeKeys(g)) {
    if (!seen.insert(nk.key).second) continue;
    tuner.TuneLayer(nk.key, budget);
    keys.push_back(nk.key);
  }
  return keys;
}

namespace {

Tensor RandomInput(const Graph& g, std::uint64_t seed) {
  const auto inputs = g.Inputs();
  if (inputs.size() != 1) throw UnsupportedError("model must have exactly one input");
  const Shape dims = g.Node(inputs[0]).input_dims;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  std::vector<float> data(static_cast<std::size_t>(NumElements(dims)));
  for (auto& v : data) v = dist(rng);
  return Tensor(dims, dims.size() == 4 ? Layout::kNCHW : Layout::kRowMajor2D, std::move(data));
}

bool HasSparseWeights(const Graph& g) {
  return std::any_of(g.nodes.begin(), g.nodes.end(),
                     [](const LayerSpec& n) { return n.has_sparse_weights(); });
}

}  // namespace

std::vector<BenchRow> BenchModel(const std::string& name, const Graph& model,
                                 const BenchOptions& options, TuneCache& cache) {
  if (options.runs < 1) throw UsageError("--runs must be at least 1");
  const Graph sparse = HasSparseWeights(model) ? model : PruneGraphWeights(model, options.sparsity);
  const Graph dense = DensifyWeights(sparse);
  const Tensor input = RandomInput(dense, options.seed);

  TunerOptions topts;
  topts.repeats = options.tune_repeats;
  topts.threads = options.threads;
  topts.seed = options.seed;

  std::vector<BenchRow> rows;
  Tensor reference;
  double baseline_ms = 0.0;
  for (const bool is_sparse : {false, true}) {
    for (const bool fused : {false, true}) {
      for (const bool tuned : {false, true}) {
        Graph g = fused ? RunFusionPipeline(is_sparse ? sparse : dense).first
                        : (is_sparse ? sparse : dense);
        const ConfigSource* configs = nullptr;
        if (tuned) {
          TuneGraph(g, cache, options.tune_budget, topts);
          configs = &cache;
        }
        PackSparseWeights(g, configs);
        ExecuteOptions eo;
        eo.threads = options.threads;
        eo.configs = configs;
        Tensor out = ExecuteGraph(g, input, eo);
        std::vector<double> ms;
        for (int r = 0; r < options.runs; ++r) {
          const auto t0 = std::chrono::steady_clock::now();
          ExecuteGraph(g, input, eo);
          ms.push_back(std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - t0)
                           .count());
        }
        BenchRow row;
        row.model = name;
        row.storage = is_sparse ? "SC" : "DC";
        row.fused = fused;
        row.tuned = tuned;
        row.median_ms = Median(ms);
        if (rows.empty()) {
          reference = out;
          baseline_ms = row.median_ms;
        }
        row.max_rel_err = MaxRelativeError(out.data(), reference.data());
        row.passed = row.max_rel_err <= options.gate;
        row.speedup = baseline_ms / row.median_ms;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::string FormatBenchTable(const std::vector<BenchRow>& rows) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-16s %-4s %-8s %-8s %12s %9s %12s\n", "model", "var",
                "fusion", "configs", "median_ms", "speedup", "max_rel_err");
  out += line;
  for (const auto& r : rows) {
    if (!r.passed) continue;
    std::snprintf(line, sizeof(line), "%-16s %-4s %-8s %-8s %12.3f %9.2f %12.2e\n",
                  r.model.c_str(), r.storage.c_str(), r.fused ? "fused" : "unfused",
                  r.tuned ? "tuned" : "default", r.median_ms, r.speedup, r.max_rel_err);
    out += line;
  }
  return out;
}

namespace {

struct MnistFiles {
  std::string train_images, train_labels, test_images, test_labels;
};

std::string DefaultDataDir() {
  const char* env = std::getenv("COMPACTNN_MNIST_DIR");
  return env ? env : "data/mnist";
}

MnistFiles MnistIn(const std::string& dir) {
  const std::filesystem::path d(dir);
  return {(d / "train-images-idx3-ubyte").string(), (d / "train-labels-idx1-ubyte").string(),
          (d / "t10k-images-idx3-ubyte").string(), (d / "t10k-labels-idx1-ubyte").string()};
}

void RequireMnist(RunManifest& m) {
  const MnistFiles f = MnistIn(m.data_dir);
  m.required_inputs.insert(m.required_inputs.end(),
                           {f.train_images, f.train_labels, f.test_images, f.test_labels});
}

struct Flags {
  std::string model, config, input, output, tune_cache, data, history;
  std::vector<std::string> models, references;
  std::uint64_t seed = 7;
  int threads = 1;
  bool profile = false;
  int epochs = 20;
  double lr = 0.01;
  std::int64_t batch_size = 64;
  std::int64_t train_limit = 0;
  std::int64_t budget = 16;
  int repeats = 5;
  int runs = 7;
  double sparsity = 0.9;
  double tune_sparsity = 0.0;
  bool no_fuse = false;
  bool explain = false;
};

int CmdTrain(const Flags& f, std::ostream& out) {
  RunManifest m;
  m.command = "train";
  m.data_dir = f.data;
  m.output_paths = {f.output};
  m.seed = f.seed;
  m.threads = f.threads;
  RequireMnist(m);
  ValidateManifest(m);
  if (f.epochs < 0 || !(f.lr >= 0.0) || f.batch_size < 1)
    throw UsageError("train needs epochs >= 0, lr >= 0 and batch size >= 1");

  const MnistFiles files = MnistIn(f.data);
  Dataset train = LoadMnistIdx(files.train_images, files.train_labels);
  if (f.train_limit > 0) train = train.Slice(0, f.train_limit);
  const Dataset test = LoadMnistIdx(files.test_images, files.test_labels);

  TrainableNet net = MakeLeNet300100(f.seed);
  TrainOptions to;
  to.epochs = f.epochs;
  to.sgd.lr = f.lr;
  to.sgd.batch_size = f.batch_size;
  to.seed = f.seed;
  const TrainReport report = TrainDense(net, train, test, to);
  for (std::size_t e = 0; e < report.epoch_loss.size(); ++e) {
    char line[64];
    std::snprintf(line, sizeof(line), "epoch %zu loss %.6f\n", e, report.epoch_loss[e]);
    out << line;
  }
  SaveModel(ExportCompressed(net), f.output);
  char line[96];
  std::snprintf(line, sizeof(line), "held-out accuracy: %.4f (%lld images)\n", report.accuracy,
                static_cast<long long>(test.size()));
  out << line << "model: " << f.output << "\n";
  return 0;
}

int CmdCompress(const Flags& f, bool seed_given, bool data_given, std::ostream& out) {
  RunManifest m;
  m.command = "compress";
  m.config_path = f.config;
  m.model_paths = {f.model};
  m.output_paths = {f.output};
  m.threads = f.threads;
  m.required_inputs = {f.config, f.model};
  ValidateManifest(m);

  CompressConfig cfg = LoadCompressConfig(f.config);
  if (seed_given) cfg.seed = f.seed;
  m.seed = cfg.seed;
  m.data_dir = data_given || cfg.data_dir.empty() ? f.data : cfg.data_dir;
  m.required_inputs.clear();
  RequireMnist(m);
  ValidateManifest(m);

  const MnistFiles files = MnistIn(m.data_dir);
  Dataset train = LoadMnistIdx(files.train_images, files.train_labels);
  if (cfg.train_limit > 0) train = train.Slice(0, cfg.train_limit);
  const Dataset test = LoadMnistIdx(files.test_images, files.test_labels);

  TrainableNet net = NetFromGraph(LoadModel(f.model));
  char line[160];
  std::snprintf(line, sizeof(line), "baseline accuracy: %.4f\n", Evaluate(net, test));
  out << line;

  AdmmSchedule schedule = cfg.schedule;
  schedule.seed = cfg.seed;
  RetrainOptions retrain;
  retrain.epochs = cfg.retrain_epochs;
  retrain.sgd = schedule.sgd;
  retrain.seed = cfg.seed + 1;

  std::vector<HistoryRow> history;
  auto append = [&](const std::vector<HistoryRow>& rows) {
    for (HistoryRow r : rows) {
      r.iteration = static_cast<int>(history.size());
      history.push_back(r);
    }
  };

  std::vector<PruneSpec> stages;
  for (const auto& s : cfg.stages) stages.push_back(ResolveStage(s, net));
  if (!stages.empty()) {
    const auto reports = ProgressiveCompress(net, stages, train, &test, schedule, retrain);
    for (std::size_t s = 0; s < reports.size(); ++s) {
      append(reports[s].history);
      std::snprintf(line, sizeof(line), "prune stage %zu: accuracy %.4f\n", s,
                    reports[s].accuracy);
      out << line;
    }
  }
  std::optional<QuantSpec> quant;
  if (cfg.quant_bits > 0) {
    quant = MakeQuantSpec(net, cfg.quant_bits);
    const WeightMasks support = SupportMasks(net);
    AdmmSchedule qs = schedule;
    qs.seed = cfg.seed + 2;
    RetrainOptions qr = retrain;
    qr.seed = cfg.seed + 3;
    const AdmmResult res = AdmmCompress(net, *quant, train, &test, qs, &support);
    MaskedRetrain(net, *quant, res.state, train, qr, &support);
    append(res.history);
    std::snprintf(line, sizeof(line), "quantize %d-bit: accuracy %.4f\n", cfg.quant_bits,
                  Evaluate(net, test));
    out << line;
  }

  if (!stages.empty() && !Satisfies(net, stages.back()))
    throw FeasibilityError("compressed net exceeds the final stage's nonzero budget");
  ExportOptions eo;
  CompressionSpec spec;
  if (quant) {
    spec = *quant;
    eo.spec = &spec;
  } else if (!stages.empty()) {
    spec = stages.back();
    eo.spec = &spec;
  }
  SaveModel(ExportCompressed(net, eo), f.output);
  const std::string history_path = f.history.empty() ? f.output + ".history.csv" : f.history;
  const std::string csv = HistoryCsv(history);
  WriteFileBytes(history_path, std::vector<std::uint8_t>(csv.begin(), csv.end()));
  out << "model: " << f.output << "\nhistory: " << history_path << "\n";
  return 0;
}

Graph LoadOrBuild(const std::string& model, const std::string& reference, std::uint64_t seed) {
  if (!model.empty()) return LoadModel(model);
  ReferenceOptions ro;
  ro.seed = seed;
  return BuildReferenceGraph(ParseReferenceModel(reference), ro);
}

int CmdTune(const Flags& f, std::ostream& out) {
  if (f.model.empty() == f.references.empty() || f.references.size() > 1)
    throw UsageError("tune needs exactly one of --model and --reference");
  RunManifest m;
  m.command = "tune";
  m.tune_cache_path = f.tune_cache;
  m.threads = f.threads;
  m.seed = f.seed;
  if (!f.model.empty()) m.required_inputs = {f.model};
  ValidateManifest(m);
  if (f.budget < 1 || f.repeats < 3) throw UsageError("tune needs --budget >= 1 and --repeats >= 3");

  Graph g = LoadOrBuild(f.model, f.references.empty() ? "" : f.references[0], f.seed);
  if (f.tune_sparsity > 0.0) g = PruneGraphWeights(g, f.tune_sparsity);
  if (!f.no_fuse) {
    auto [fused, report] = RunFusionPipeline(g);
    if (f.explain) out << report.ToText();
    g = std::move(fused);
  }
  TuneCache cache = TuneCache::Load(f.tune_cache);
  TunerOptions to;
  to.repeats = f.repeats;
  to.threads = f.threads;
  to.seed = f.seed;
  Tuner tuner(cache, to);
  std::set<ShapeKey> seen;
  for (const auto& nk : CollectShapeKeys(g)) {
    if (!seen.insert(nk.key).second) continue;
    const KernelConfig cfg = tuner.TuneLayer(nk.key, f.budget);
    const TuneEntry* e = cache.Find(nk.key);
    char line[64];
    std::snprintf(line, sizeof(line), " %.1f us", e ? e->micros : 0.0);
    out << nk.key.ToString() << " -> " << cfg.ToString() << (e ? line : " (untuned)") << "\n";
  }
  cache.Save(f.tune_cache);
  out << "measurements: " << tuner.measurements() << "\nentries: " << cache.size()
      << "\ncache: " << f.tune_cache << "\n";
  return 0;
}

int CmdInfer(const Flags& f, std::ostream& out) {
  RunManifest m;
  m.command = "infer";
  m.model_paths = {f.model};
  m.input_path = f.input;
  m.tune_cache_path = f.tune_cache;
  m.threads = f.threads;
  m.profile = f.profile;
  m.required_inputs = {f.model, f.input};
  if (!f.tune_cache.empty()) m.required_inputs.push_back(f.tune_cache);
  ValidateManifest(m);

  Graph g = LoadModel(f.model);
  std::optional<TuneCache> cache;
  if (!f.tune_cache.empty()) cache = TuneCache::Load(f.tune_cache);
  const ConfigSource* configs = cache ? &*cache : nullptr;
  PackSparseWeights(g, configs);

  const Dataset images = LoadIdxImagesAsDataset(f.input);
  const auto inputs = g.Inputs();
  if (inputs.size() != 1) throw UnsupportedError("model must have exactly one input");
  Shape dims = g.Node(inputs[0]).input_dims;
  if (NumElements(dims) / std::max<std::int64_t>(dims[0], 1) != images.sample_size())
    throw UsageError("input images have " + std::to_string(images.sample_size()) +
                     " values, the model expects " + ShapeToString(dims) + " per batch row");
  dims[0] = images.size();
  const Tensor x(dims, dims.size() == 4 ? Layout::kNCHW : Layout::kRowMajor2D, images.images);

  std::vector<LayerProfile> profile;
  ExecuteOptions eo;
  eo.threads = f.threads;
  eo.configs = configs;
  if (f.profile) eo.profile = &profile;
  const Tensor logits = ExecuteGraph(g, x, eo);
  const std::int64_t classes = logits.size() / images.size();
  for (std::int64_t i = 0; i < images.size(); ++i) {
    const auto row = logits.data().subspan(static_cast<std::size_t>(i * classes),
                                           static_cast<std::size_t>(classes));
    out << "image " << i << ": class " << (std::max_element(row.begin(), row.end()) - row.begin())
        << "\n";
  }
  if (f.profile) out << "profile:\nnode\tkind\tmicros\tweight_loads\n" << FormatProfile(profile);
  return 0;
}

int CmdBench(const Flags& f, std::ostream& out, std::ostream& err) {
  RunManifest m;
  m.command = "bench";
  m.model_paths = f.models;
  m.tune_cache_path = f.tune_cache;
  m.threads = f.threads;
  m.seed = f.seed;
  m.required_inputs = f.models;
  ValidateManifest(m);
  if (f.models.empty() && f.references.empty())
    throw UsageError("bench needs at least one --model or --reference");
  if (!(f.sparsity >= 0.0 && f.sparsity < 1.0)) throw UsageError("--sparsity must be in [0, 1)");

  BenchOptions bo;
  bo.runs = f.runs;
  bo.sparsity = f.sparsity;
  bo.threads = f.threads;
  bo.tune_budget = f.budget;
  bo.seed = f.seed;
  TuneCache cache = f.tune_cache.empty() ? TuneCache{} : TuneCache::Load(f.tune_cache);

  std::vector<BenchRow> rows;
  auto run = [&](const std::string& name, const Graph& g) {
    if (f.explain) out << "fusion of " << name << ":\n" << RunFusionPipeline(g).second.ToText();
    const auto r = BenchModel(name, g, bo, cache);
    rows.insert(rows.end(), r.begin(), r.end());
  };
  for (const auto& p : f.models) run(std::filesystem::path(p).stem().string(), LoadModel(p));
  for (const auto& name : f.references) run(name, LoadOrBuild("", name, f.seed));
  if (!f.tune_cache.empty()) cache.Save(f.tune_cache);
  const std::string table = FormatBenchTable(rows);
  out << table;
  if (!f.output.empty()) WriteFileBytes(f.output, std::vector<std::uint8_t>(table.begin(), table.end()));
  int failed = 0;
  for (const auto& r : rows)
    if (!r.passed) {
      ++failed;
      err << "withheld " << r.model << " " << r.storage << (r.fused ? " fused" : " unfused")
          << (r.tuned ? " tuned" : " default") << ": max relative error " << r.max_rel_err
          << " exceeds " << bo.gate << "\n";
    }
  return failed ? 1 : 0;
}

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"compactnn: compress small networks and run them on a sparse-aware engine",
               "compactnn"};
  app.require_subcommand(1);
  Flags f;
  f.data = DefaultDataDir();

  auto shared = [&](CLI::App* c) {
    c->add_option("--seed", f.seed, "Random seed");
    c->add_option("--threads", f.threads, "Engine worker threads")->check(CLI::PositiveNumber);
  };

  CLI::App* train = app.add_subcommand("train", "Train the dense lenet_300_100 baseline on MNIST");
  shared(train);
  train->add_option("--data", f.data, "Directory with the MNIST IDX files");
  train->add_option("--output", f.output, "Model file to write")->required();
  train->add_option("--epochs", f.epochs, "Training epochs");
  train->add_option("--lr", f.lr, "SGD learning rate");
  train->add_option("--batch-size", f.batch_size, "Minibatch size");
  train->add_option("--train-limit", f.train_limit, "Use only the first N training images");

  CLI::App* compress = app.add_subcommand("compress", "ADMM prune and/or quantize a model");
  shared(compress);
  CLI::Option* data_opt = compress->add_option("--data", f.data, "Directory with the MNIST IDX files");
  compress->add_option("--model", f.model, "Baseline model file")->required();
  compress->add_option("--config", f.config, "Compression config JSON")->required();
  compress->add_option("--output", f.output, "Compressed model file to write")->required();
  compress->add_option("--history", f.history, "History CSV (default: <output>.history.csv)");

  CLI::App* tune = app.add_subcommand("tune", "Autotune kernel configs for a model's layers");
  shared(tune);
  tune->add_option("--model", f.model, "Model file");
  tune->add_option("--reference", f.references, "Reference topology name instead of a file");
  tune->add_option("--tune-cache", f.tune_cache, "Tune cache JSON to update")->required();
  tune->add_option("--budget", f.budget, "Configs measured per layer shape");
  tune->add_option("--repeats", f.repeats, "Timed runs per config");
  tune->add_option("--sparsity", f.tune_sparsity, "Magnitude-prune weights to this sparsity first");
  tune->add_flag("--no-fuse", f.no_fuse, "Tune the graph as stored, without fusion");
  tune->add_flag("--explain", f.explain, "Print the fusion rewrites before tuning");

  CLI::App* infer = app.add_subcommand("infer", "Classify the images of an IDX file");
  shared(infer);
  infer->add_option("--model", f.model, "Model file")->required();
  infer->add_option("--input", f.input, "IDX image file")->required();
  infer->add_option("--tune-cache", f.tune_cache, "Tuned kernel configs to use");
  infer->add_flag("--profile", f.profile, "Print per-layer timings and weight loads");

  CLI::App* bench = app.add_subcommand("bench", "Latency table over storage, fusion and tuning");
  shared(bench);
  bench->add_option("--model", f.models, "Model file (repeatable)");
  bench->add_option("--reference", f.references, "Reference topology name (repeatable)");
  bench->add_option("--runs", f.runs, "Timed runs per variant (median reported)");
  bench->add_option("--sparsity", f.sparsity, "Sparsity for models without CSR layers");
  bench->add_option("--tune-cache", f.tune_cache, "Tune cache JSON to read and extend");
  bench->add_option("--budget", f.budget, "Configs measured per layer shape when tuning");
  bench->add_option("--output", f.output, "Also write the table to this file");
  bench->add_flag("--explain", f.explain, "Print each model's fusion rewrites");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (train->parsed()) return CmdTrain(f, out);
    if (compress->parsed())
      return CmdCompress(f, compress->count("--seed") > 0, data_opt->count() > 0, out);
    if (tune->parsed()) return CmdTune(f, out);
    if (infer->parsed()) return CmdInfer(f, out);
    return CmdBench(f, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const TrainingDivergedError& e) {
    err << "error: training diverged at iteration " << e.iteration() << ": " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace compactnn
