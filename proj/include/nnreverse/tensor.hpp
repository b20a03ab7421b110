// Copyright 2026 The NNReverse Authors. All Rights Reserved.
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

#ifndef NNREVERSE_TENSOR_HPP_
#define NNREVERSE_TENSOR_HPP_

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace nnreverse {

using Shape = std::vector<size_t>;

std::string ShapeString(const Shape& shape);
size_t ShapeVolume(const Shape& shape);

// Dense row-major float32 tensor.
struct Tensor {
  Shape shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(std::move(s)), data(ShapeVolume(shape), 0.0f) {}
  Tensor(Shape s, std::vector<float> values);

  size_t size() const { return data.size(); }
  size_t rank() const { return shape.size(); }
  bool AllFinite() const;

  bool operator==(const Tensor&) const = default;
};

// Supported kernel operators.
inline constexpr std::string_view kKernelTypes[] = {
    "conv2d", "dense", "bias_add", "relu", "add", "max_pool2d",
    "flatten", "softmax", "conv2d_relu", "dense_relu"};

bool IsSupportedKernel(std::string_view kernel_type);

// Executes one kernel. Throws DataError for an unknown kernel or
// incompatible shapes.
//   conv2d(data NCHW, weight OIHW[, bias O]) attrs: strides, padding
//   dense(data NK, weight MK[, bias M])
//   bias_add(data, bias) attrs: axis (default 1)
//   max_pool2d(data NCHW) attrs: pool_size, strides, padding
//   softmax(data) attrs: axis (default -1)
//   add(a, b) with numpy broadcasting
Tensor RunKernel(std::string_view kernel_type, std::span<const Tensor> inputs,
                 const nlohmann::json& attrs = nlohmann::json::object());

// Named tensors in one file: a JSON header listing name, shape and byte
// offset of each tensor, then the float32 blob.
using TensorMap = std::map<std::string, Tensor>;

void SaveTensors(const TensorMap& tensors, const std::filesystem::path& path);
TensorMap LoadTensors(const std::filesystem::path& path);

}  // namespace nnreverse

#endif  // NNREVERSE_TENSOR_HPP_
