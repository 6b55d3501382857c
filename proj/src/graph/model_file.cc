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

#include "compactnn/graph/model_file.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "compactnn/common/error.h"

namespace compactnn {

namespace {

constexpr std::uint8_t kMagic[4] = {0x43, 0x41, 0x44, 0x4D};

class ByteWriter {
 public:
  template <typename T>
  void Put(T value) {
    using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
              std::conditional_t<sizeof(T) == 2, std::uint16_t,
              std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
    const U bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(U); ++i)
      bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  void U8(std::uint8_t v) { Put(v); }
  void U16(std::uint16_t v) { Put(v); }
  void U32(std::uint64_t v) {
    if (v > 0xFFFFFFFFull) throw FormatError("value does not fit a u32 field");
    Put(static_cast<std::uint32_t>(v));
  }
  void U64(std::uint64_t v) { Put(v); }
  void F32(float v) { Put(v); }
  void Floats(const std::vector<float>& v) {
    for (float f : v) F32(f);
  }
  std::vector<std::uint8_t> Take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename U>
  U Get() {
    Need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
      v |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return v;
  }
  std::uint8_t U8() { return Get<std::uint8_t>(); }
  std::uint16_t U16() { return Get<std::uint16_t>(); }
  std::uint32_t U32() { return Get<std::uint32_t>(); }
  std::uint64_t U64() { return Get<std::uint64_t>(); }
  float F32() { return std::bit_cast<float>(Get<std::uint32_t>()); }
  std::vector<float> Floats(std::uint64_t n) {
    Need(n * 4);
    std::vector<float> v(static_cast<std::size_t>(n));
    for (auto& f : v) f = F32();
    return v;
  }
  std::vector<std::uint32_t> U32s(std::uint64_t n) {
    Need(n * 4);
    std::vector<std::uint32_t> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = U32();
    return v;
  }
  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  void Need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_)
      throw CorruptionError("model file truncated at byte " + std::to_string(pos_));
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

void WriteBias(ByteWriter& w, const std::optional<std::vector<float>>& bias) {
  w.U8(bias ? 1 : 0);
  if (bias) {
    w.U32(bias->size());
    w.Floats(*bias);
  }
}

std::optional<std::vector<float>> ReadBias(ByteReader& r) {
  const auto present = r.U8();
  if (present > 1) throw FormatError("bad bias flag");
  if (!present) return std::nullopt;
  return r.Floats(r.U32());
}

void WriteConvFields(ByteWriter& w, const ConvAttrs& c) {
  w.U32(static_cast<std::uint64_t>(c.in_channels));
  w.U32(static_cast<std::uint64_t>(c.out_channels));
  w.U32(static_cast<std::uint64_t>(c.kernel_h));
  w.U32(static_cast<std::uint64_t>(c.kernel_w));
  w.U32(static_cast<std::uint64_t>(c.stride));
  w.U32(static_cast<std::uint64_t>(c.padding));
}

ConvAttrs ReadConvFields(ByteReader& r) {
  ConvAttrs c;
  c.in_channels = r.U32();
  c.out_channels = r.U32();
  c.kernel_h = r.U32();
  c.kernel_w = r.U32();
  c.stride = r.U32();
  c.padding = r.U32();
  return c;
}

Activation ReadActivation(ByteReader& r) {
  const auto a = r.U8();
  if (a > static_cast<std::uint8_t>(Activation::kRelu6)) throw FormatError("bad activation code");
  return static_cast<Activation>(a);
}

void WriteAttrs(ByteWriter& w, const LayerSpec& n) {
  switch (n.kind) {
    case LayerKind::kInput:
      w.U32(n.input_dims.size());
      for (auto d : n.input_dims) w.U64(static_cast<std::uint64_t>(d));
      break;
    case LayerKind::kConv2D:
    case LayerKind::kDepthwiseConv2D:
      WriteConvFields(w, n.conv);
      WriteBias(w, n.bias);
      break;
    case LayerKind::kFusedConvBnAct:
      w.U16(static_cast<std::uint16_t>(n.core));
      WriteConvFields(w, n.conv);
      w.U8(static_cast<std::uint8_t>(n.activation));
      WriteBias(w, n.bias);
      break;
    case LayerKind::kBatchNorm: {
      if (!n.bn) throw FormatError("batchnorm node without parameters");
      const auto& bn = *n.bn;
      w.U32(bn.gamma.size());
      w.F32(bn.eps);
      for (const auto* v : {&bn.gamma, &bn.beta, &bn.mean, &bn.var}) {
        if (v->size() != bn.gamma.size())
          throw FormatError("batchnorm parameter lengths differ");
        w.Floats(*v);
      }
      break;
    }
    case LayerKind::kActivation:
      w.U8(static_cast<std::uint8_t>(n.activation));
      break;
    case LayerKind::kPool:
      w.U8(static_cast<std::uint8_t>(n.pool.kind));
      w.U8(n.pool.global ? 1 : 0);
      w.U32(static_cast<std::uint64_t>(n.pool.window));
      w.U32(static_cast<std::uint64_t>(n.pool.stride));
      break;
    case LayerKind::kFullyConnected:
      w.U32(static_cast<std::uint64_t>(n.conv.in_channels));
      w.U32(static_cast<std::uint64_t>(n.conv.out_channels));
      WriteBias(w, n.bias);
      break;
    case LayerKind::kGemm:
      w.U32(static_cast<std::uint64_t>(n.conv.in_channels));
      w.U32(static_cast<std::uint64_t>(n.conv.out_channels));
      w.U8(static_cast<std::uint8_t>(n.activation));
      WriteBias(w, n.bias);
      break;
    case LayerKind::kAdd:
    case LayerKind::kSoftmax:
      break;
  }
}

void ReadAttrs(ByteReader& r, LayerSpec& n) {
  switch (n.kind) {
    case LayerKind::kInput: {
      const auto rank = r.U32();
      if (rank > 8) throw FormatError("input rank too large");
      for (std::uint32_t i = 0; i < rank; ++i)
        n.input_dims.push_back(static_cast<std::int64_t>(r.U64()));
      break;
    }
    case LayerKind::kConv2D:
    case LayerKind::kDepthwiseConv2D:
      n.conv = ReadConvFields(r);
      n.bias = ReadBias(r);
      break;
    case LayerKind::kFusedConvBnAct: {
      const auto core = r.U16();
      if (core != static_cast<std::uint16_t>(LayerKind::kConv2D) &&
          core != static_cast<std::uint16_t>(LayerKind::kDepthwiseConv2D))
        throw FormatError("bad fused core kind");
      n.core = static_cast<LayerKind>(core);
      n.conv = ReadConvFields(r);
      n.activation = ReadActivation(r);
      n.bias = ReadBias(r);
      break;
    }
    case LayerKind::kBatchNorm: {
      BatchNormParams bn;
      const auto ch = r.U32();
      bn.eps = r.F32();
      bn.gamma = r.Floats(ch);
      bn.beta = r.Floats(ch);
      bn.mean = r.Floats(ch);
      bn.var = r.Floats(ch);
      n.bn = std::move(bn);
      break;
    }
    case LayerKind::kActivation:
      n.activation = ReadActivation(r);
      break;
    case LayerKind::kPool: {
      const auto kind = r.U8();
      if (kind > 1) throw FormatError("bad pool kind");
      n.pool.kind = static_cast<PoolKind>(kind);
      const auto global = r.U8();
      if (global > 1) throw FormatError("bad pool global flag");
      n.pool.global = global == 1;
      n.pool.window = r.U32();
      n.pool.stride = r.U32();
      break;
    }
    case LayerKind::kFullyConnected:
      n.conv.in_channels = r.U32();
      n.conv.out_channels = r.U32();
      n.bias = ReadBias(r);
      break;
    case LayerKind::kGemm:
      n.conv.in_channels = r.U32();
      n.conv.out_channels = r.U32();
      n.activation = ReadActivation(r);
      n.bias = ReadBias(r);
      break;
    case LayerKind::kAdd:
    case LayerKind::kSoftmax:
      break;
  }
}

void WriteWeights(ByteWriter& w, const Weights& weights) {
  if (const auto* t = std::get_if<Tensor>(&weights)) {
    w.U8(1);
    w.U8(static_cast<std::uint8_t>(t->layout()));
    w.U32(t->rank());
    for (auto d : t->dims()) w.U64(static_cast<std::uint64_t>(d));
    for (auto d : t->logical_dims()) w.U64(static_cast<std::uint64_t>(d));
    for (float f : t->data()) w.F32(f);
  } else if (const auto* s = std::get_if<SparseMatrixCSR>(&weights)) {
    w.U8(2);
    w.U64(static_cast<std::uint64_t>(s->rows()));
    w.U64(static_cast<std::uint64_t>(s->cols()));
    w.U64(static_cast<std::uint64_t>(s->nnz()));
    w.Floats(s->values());
    for (auto c : s->col_idx()) w.U32(c);
    for (auto p : s->row_ptr()) w.U32(p);
  } else {
    w.U8(0);
  }
}

Weights ReadWeights(ByteReader& r) {
  const auto tag = r.U8();
  switch (tag) {
    case 0:
      return std::monostate{};
    case 1: {
      const auto layout = r.U8();
      if (layout > static_cast<std::uint8_t>(Layout::kRowMajor2D))
        throw FormatError("bad tensor layout code");
      const auto rank = r.U32();
      if (rank > 8) throw FormatError("tensor rank too large");
      Shape dims(rank), logical(rank);
      for (auto& d : dims) d = static_cast<std::int64_t>(r.U64());
      for (auto& d : logical) d = static_cast<std::int64_t>(r.U64());
      std::uint64_t count = rank ? 1 : 0;
      for (auto d : dims) {
        if (d < 0 || (d > 0 && count > (std::uint64_t{1} << 40) / static_cast<std::uint64_t>(d)))
          throw CorruptionError("tensor dims out of range");
        count *= static_cast<std::uint64_t>(d);
      }
      auto data = r.Floats(count);
      try {
        return Tensor(std::move(dims), std::move(logical), static_cast<Layout>(layout),
                      std::move(data));
      } catch (const ShapeError& e) {
        throw FormatError(std::string("bad dense blob: ") + e.what());
      }
    }
    case 2: {
      const auto rows = r.U64();
      const auto cols = r.U64();
      const auto nnz = r.U64();
      if (rows > 0xFFFFFFFFull || cols > 0xFFFFFFFFull || nnz > 0xFFFFFFFFull)
        throw CorruptionError("csr extents out of range");
      auto values = r.Floats(nnz);
      auto col_idx = r.U32s(nnz);
      auto row_ptr = r.U32s(rows + 1);
      return SparseMatrixCSR(static_cast<std::int64_t>(rows), static_cast<std::int64_t>(cols),
                             std::move(values), std::move(col_idx), std::move(row_ptr));
    }
    default:
      throw FormatError("bad weight encoding tag " + std::to_string(tag));
  }
}

}  // namespace

std::vector<std::uint8_t> SerializeModel(const Graph& g) {
  ByteWriter w;
  for (auto b : kMagic) w.U8(b);
  w.U32(kModelFileVersion);
  w.U32(g.nodes.size());
  for (const auto& n : g.nodes) {
    w.U16(static_cast<std::uint16_t>(n.kind));
    w.U32(n.id);
    WriteAttrs(w, n);
    WriteWeights(w, n.weights);
  }
  w.U32(g.edges.size());
  for (const auto& e : g.edges) {
    w.U32(e.producer);
    w.U32(e.consumer);
  }
  return w.Take();
}

Graph DeserializeModel(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("not a CADM model file (bad magic)");
  ByteReader r(bytes);
  for (int i = 0; i < 4; ++i) r.U8();
  const auto version = r.U32();
  if (version != kModelFileVersion)
    throw FormatError("unsupported CADM version " + std::to_string(version));
  Graph g;
  const auto count = r.U32();
  for (std::uint32_t i = 0; i < count; ++i) {
    LayerSpec n;
    const auto kind = r.U16();
    if (!IsValidLayerKind(kind)) throw FormatError("unknown layer kind code " + std::to_string(kind));
    n.kind = static_cast<LayerKind>(kind);
    n.id = r.U32();
    ReadAttrs(r, n);
    n.weights = ReadWeights(r);
    g.nodes.push_back(std::move(n));
  }
  const auto edges = r.U32();
  for (std::uint32_t i = 0; i < edges; ++i) {
    Edge e;
    e.producer = r.U32();
    e.consumer = r.U32();
    g.edges.push_back(e);
  }
  if (!r.AtEnd()) throw CorruptionError("trailing bytes after model payload");
  return g;
}

void SaveModel(const Graph& g, const std::filesystem::path& path) {
  const auto bytes = SerializeModel(g);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing " + path.string());
}

Graph LoadModel(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return DeserializeModel(bytes);
}

}  // namespace compactnn
