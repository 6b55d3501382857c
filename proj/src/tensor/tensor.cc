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

#include "compactnn/tensor/tensor.h"

#include <cstring>
#include <sstream>

#include "compactnn/common/error.h"

namespace compactnn {

const char* LayoutName(Layout layout) {
  switch (layout) {
    case Layout::kNCHW:
      return "NCHW";
    case Layout::kNHWC:
      return "NHWC";
    case Layout::kRowMajor2D:
      return "RowMajor2D";
  }
  return "?";
}

std::int64_t NumElements(const Shape& dims) {
  std::int64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::string ShapeToString(const Shape& dims) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (i) os << ',';
    os << dims[i];
  }
  os << ')';
  return os.str();
}

Tensor::Tensor(Shape dims, Layout layout)
    : dims_(std::move(dims)), logical_dims_(dims_), layout_(layout) {
  for (auto d : dims_) {
    if (d < 0) throw ShapeError("negative extent in " + ShapeToString(dims_));
  }
  if (!dims_.empty()) data_.assign(static_cast<std::size_t>(NumElements(dims_)), 0.0f);
  Check();
}

Tensor::Tensor(Shape dims, Layout layout, std::vector<float> data)
    : dims_(std::move(dims)),
      logical_dims_(dims_),
      layout_(layout),
      data_(std::move(data)) {
  Check();
}

Tensor::Tensor(Shape dims, Shape logical_dims, Layout layout,
               std::vector<float> data)
    : dims_(std::move(dims)),
      logical_dims_(std::move(logical_dims)),
      layout_(layout),
      data_(std::move(data)) {
  Check();
}

Tensor Tensor::Matrix(const std::vector<std::vector<float>>& rows) {
  const auto r = static_cast<std::int64_t>(rows.size());
  const auto c = r ? static_cast<std::int64_t>(rows[0].size()) : 0;
  std::vector<float> data;
  data.reserve(static_cast<std::size_t>(r * c));
  for (const auto& row : rows) {
    if (static_cast<std::int64_t>(row.size()) != c)
      throw ShapeError("ragged matrix rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, Layout::kRowMajor2D, std::move(data));
}

void Tensor::Check() const {
  for (auto d : dims_) {
    if (d < 0) throw ShapeError("negative extent in " + ShapeToString(dims_));
  }
  // A tensor with no dims holds no data (the default-constructed state).
  const std::int64_t expected = dims_.empty() ? 0 : NumElements(dims_);
  if (static_cast<std::int64_t>(data_.size()) != expected)
    throw ShapeError("data length " + std::to_string(data_.size()) +
                     " does not match dims " + ShapeToString(dims_));
  if (logical_dims_.size() != dims_.size())
    throw ShapeError("logical dims rank differs from dims rank");
  for (std::size_t i = 0; i < dims_.size(); ++i) {
    if (logical_dims_[i] > dims_[i] || logical_dims_[i] < 0)
      throw ShapeError("logical dims " + ShapeToString(logical_dims_) +
                       " exceed dims " + ShapeToString(dims_));
  }
  if (layout_ != Layout::kRowMajor2D && !dims_.empty() && dims_.size() != 4)
    throw ShapeError(std::string(LayoutName(layout_)) + " tensor must be 4-D");
}

std::size_t Tensor::Offset4(std::int64_t n, std::int64_t c, std::int64_t h,
                            std::int64_t w) const {
  if (layout_ == Layout::kNHWC) {
    return static_cast<std::size_t>(((n * dims_[1] + h) * dims_[2] + w) *
                                        dims_[3] +
                                    c);
  }
  return static_cast<std::size_t>(((n * dims_[1] + c) * dims_[2] + h) *
                                      dims_[3] +
                                  w);
}

std::int64_t Tensor::batch() const { return dims_.at(0); }
std::int64_t Tensor::channels() const {
  return layout_ == Layout::kNHWC ? dims_.at(3) : dims_.at(1);
}
std::int64_t Tensor::height() const {
  return layout_ == Layout::kNHWC ? dims_.at(1) : dims_.at(2);
}
std::int64_t Tensor::width() const {
  return layout_ == Layout::kNHWC ? dims_.at(2) : dims_.at(3);
}

Tensor Tensor::Reshaped(Shape dims, Layout layout) const& {
  return Tensor(std::move(dims), layout, data_);
}

Tensor Tensor::Reshaped(Shape dims, Layout layout) && {
  return Tensor(std::move(dims), layout, std::move(data_));
}

bool Tensor::BitEquals(const Tensor& other) const {
  return dims_ == other.dims_ && logical_dims_ == other.logical_dims_ &&
         layout_ == other.layout_ && data_.size() == other.data_.size() &&
         (data_.empty() ||
          std::memcmp(data_.data(), other.data_.data(),
                      data_.size() * sizeof(float)) == 0);
}

}  // namespace compactnn
