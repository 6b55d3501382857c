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

#include "compactnn/cli/mnist_idx.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>

#include "compactnn/common/error.h"

namespace compactnn {

namespace {

std::uint32_t ReadBe32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

void PutBe32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<std::uint8_t>(v >> s));
}

void CheckHeader(const std::vector<std::uint8_t>& bytes, std::uint32_t magic, std::size_t header,
                 const char* what) {
  if (bytes.size() < 4) throw CorruptionError(std::string(what) + " file shorter than its magic");
  const std::uint32_t m = ReadBe32(bytes, 0);
  if (m != magic) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s file has magic 0x%08x, expected 0x%08x", what, m, magic);
    throw FormatError(buf);
  }
  if (bytes.size() < header) throw CorruptionError(std::string(what) + " header is truncated");
}

void CheckBody(std::size_t have, std::size_t header, std::uint64_t body, const char* what) {
  if (have - header < body)
    throw CorruptionError(std::string(what) + " file truncated: " + std::to_string(have - header) +
                          " of " + std::to_string(body) + " body bytes");
  if (have - header > body) throw CorruptionError(std::string(what) + " file has trailing bytes");
}

}  // namespace

IdxImages ParseIdxImages(const std::vector<std::uint8_t>& bytes) {
  CheckHeader(bytes, kIdxImageMagic, 16, "image");
  IdxImages img;
  img.count = ReadBe32(bytes, 4);
  img.rows = ReadBe32(bytes, 8);
  img.cols = ReadBe32(bytes, 12);
  const auto body = static_cast<std::uint64_t>(img.count) * img.rows * img.cols;
  CheckBody(bytes.size(), 16, body, "image");
  img.pixels.assign(bytes.begin() + 16, bytes.end());
  return img;
}

std::vector<std::uint8_t> ParseIdxLabels(const std::vector<std::uint8_t>& bytes) {
  CheckHeader(bytes, kIdxLabelMagic, 8, "label");
  CheckBody(bytes.size(), 8, ReadBe32(bytes, 4), "label");
  return {bytes.begin() + 8, bytes.end()};
}

std::vector<std::uint8_t> EncodeIdxImages(const IdxImages& images) {
  std::vector<std::uint8_t> out;
  PutBe32(out, kIdxImageMagic);
  PutBe32(out, static_cast<std::uint32_t>(images.count));
  PutBe32(out, static_cast<std::uint32_t>(images.rows));
  PutBe32(out, static_cast<std::uint32_t>(images.cols));
  out.insert(out.end(), images.pixels.begin(), images.pixels.end());
  return out;
}

std::vector<std::uint8_t> EncodeIdxLabels(const std::vector<std::uint8_t>& labels) {
  std::vector<std::uint8_t> out;
  PutBe32(out, kIdxLabelMagic);
  PutBe32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

Dataset MakeMnistDataset(const IdxImages& images, const std::vector<std::uint8_t>& labels) {
  if (static_cast<std::int64_t>(labels.size()) != images.count)
    throw ConsistencyError(std::to_string(images.count) + " images but " +
                           std::to_string(labels.size()) + " labels");
  Dataset d;
  d.sample_shape = {1, images.rows, images.cols};
  d.images.resize(images.pixels.size());
  for (std::size_t i = 0; i < images.pixels.size(); ++i)
    d.images[i] = static_cast<float>(images.pixels[i]) / 255.0f;
  d.labels.reserve(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 9)
      throw ConsistencyError("label " + std::to_string(labels[i]) + " at index " +
                             std::to_string(i) + " is not a digit");
    d.labels.push_back(labels[i]);
  }
  return d;
}

Dataset LoadMnistIdx(const std::string& images_path, const std::string& labels_path) {
  return MakeMnistDataset(ParseIdxImages(ReadFileBytes(images_path)),
                          ParseIdxLabels(ReadFileBytes(labels_path)));
}

Dataset LoadIdxImagesAsDataset(const std::string& images_path) {
  const IdxImages img = ParseIdxImages(ReadFileBytes(images_path));
  Dataset d = MakeMnistDataset(img, std::vector<std::uint8_t>(img.count, 0));
  std::fill(d.labels.begin(), d.labels.end(), -1);
  return d;
}

std::vector<std::uint8_t> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void WriteFileBytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw UsageError("short write to " + path);
}

}  // namespace compactnn
