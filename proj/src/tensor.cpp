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

#include "nnreverse/tensor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "nnreverse/error.hpp"
#include "nnreverse/util.hpp"

namespace nnreverse {

using nlohmann::json;

std::string ShapeString(const Shape& shape) {
  std::string out = "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

size_t ShapeVolume(const Shape& shape) {
  size_t n = 1;
  for (size_t d : shape) n *= d;
  return n;
}

Tensor::Tensor(Shape s, std::vector<float> values) : shape(std::move(s)), data(std::move(values)) {
  if (data.size() != ShapeVolume(shape)) {
    throw DataError("tensor of shape " + ShapeString(shape) + " given " +
                    std::to_string(data.size()) + " values");
  }
}

bool Tensor::AllFinite() const {
  return std::all_of(data.begin(), data.end(), [](float x) { return std::isfinite(x); });
}

bool IsSupportedKernel(std::string_view kernel_type) {
  return std::find(std::begin(kKernelTypes), std::end(kKernelTypes), kernel_type) !=
         std::end(kKernelTypes);
}

namespace {

[[noreturn]] void ShapeMismatch(std::string_view op, const std::string& expected,
                                const Shape& got) {
  throw DataError(std::string(op) + ": expected " + expected + ", got " + ShapeString(got));
}

void RequireInputs(std::string_view op, std::span<const Tensor> inputs, size_t lo, size_t hi) {
  if (inputs.size() < lo || inputs.size() > hi) {
    throw DataError(std::string(op) + ": expected " + std::to_string(lo) +
                    (lo == hi ? "" : ".." + std::to_string(hi)) + " inputs, got " +
                    std::to_string(inputs.size()));
  }
}

// Reads a pair attribute given either as one integer or a list of two.
std::pair<size_t, size_t> Pair(const json& attrs, const char* key, size_t fallback) {
  auto it = attrs.find(key);
  if (it == attrs.end()) return {fallback, fallback};
  if (it->is_number_integer()) {
    size_t v = it->get<size_t>();
    return {v, v};
  }
  auto v = it->get<std::vector<size_t>>();
  if (v.size() == 1) return {v[0], v[0]};
  if (v.size() >= 2) return {v[0], v[1]};
  throw DataError(std::string("attribute '") + key + "' is empty");
}

// Padding as (top, left, bottom, right); accepts 1, 2 or 4 values.
std::array<size_t, 4> Padding(const json& attrs) {
  auto it = attrs.find("padding");
  if (it == attrs.end()) return {0, 0, 0, 0};
  if (it->is_number_integer()) {
    size_t p = it->get<size_t>();
    return {p, p, p, p};
  }
  auto v = it->get<std::vector<size_t>>();
  if (v.size() == 1) return {v[0], v[0], v[0], v[0]};
  if (v.size() == 2) return {v[0], v[1], v[0], v[1]};
  if (v.size() == 4) return {v[0], v[1], v[2], v[3]};
  throw DataError("padding must have 1, 2 or 4 values");
}

Tensor Relu(Tensor t) {
  for (float& x : t.data) x = x > 0.0f ? x : 0.0f;
  return t;
}

Tensor Conv2d(std::span<const Tensor> inputs, const json& attrs) {
  RequireInputs("conv2d", inputs, 2, 3);
  const Tensor& x = inputs[0];
  const Tensor& w = inputs[1];
  if (x.rank() != 4) ShapeMismatch("conv2d", "NCHW data", x.shape);
  if (w.rank() != 4 || w.shape[1] != x.shape[1]) {
    ShapeMismatch("conv2d", "weight [O," + std::to_string(x.shape[1]) + ",KH,KW]", w.shape);
  }
  const size_t n = x.shape[0], c = x.shape[1], h = x.shape[2], wd = x.shape[3];
  const size_t o = w.shape[0], kh = w.shape[2], kw = w.shape[3];
  const float* bias = nullptr;
  if (inputs.size() == 3) {
    if (inputs[2].shape != Shape{o}) ShapeMismatch("conv2d", "bias [" + std::to_string(o) + "]", inputs[2].shape);
    bias = inputs[2].data.data();
  }
  auto [sh, sw] = Pair(attrs, "strides", 1);
  auto pad = Padding(attrs);
  if (sh == 0 || sw == 0) throw DataError("conv2d: zero stride");
  const size_t hp = h + pad[0] + pad[2], wp = wd + pad[1] + pad[3];
  if (hp < kh || wp < kw) ShapeMismatch("conv2d", "kernel no larger than padded input", w.shape);
  const size_t oh = (hp - kh) / sh + 1, ow = (wp - kw) / sw + 1;
  Tensor y({n, o, oh, ow});
  for (size_t b = 0; b < n; ++b) {
    for (size_t oc = 0; oc < o; ++oc) {
      for (size_t i = 0; i < oh; ++i) {
        for (size_t j = 0; j < ow; ++j) {
          double acc = bias ? bias[oc] : 0.0;
          for (size_t ic = 0; ic < c; ++ic) {
            for (size_t di = 0; di < kh; ++di) {
              const long long yi = static_cast<long long>(i * sh + di) - static_cast<long long>(pad[0]);
              if (yi < 0 || yi >= static_cast<long long>(h)) continue;
              for (size_t dj = 0; dj < kw; ++dj) {
                const long long xj = static_cast<long long>(j * sw + dj) - static_cast<long long>(pad[1]);
                if (xj < 0 || xj >= static_cast<long long>(wd)) continue;
                acc += static_cast<double>(
                           x.data[((b * c + ic) * h + static_cast<size_t>(yi)) * wd + static_cast<size_t>(xj)]) *
                       w.data[((oc * c + ic) * kh + di) * kw + dj];
              }
            }
          }
          y.data[((b * o + oc) * oh + i) * ow + j] = static_cast<float>(acc);
        }
      }
    }
  }
  return y;
}

Tensor Dense(std::span<const Tensor> inputs) {
  RequireInputs("dense", inputs, 2, 3);
  const Tensor& x = inputs[0];
  const Tensor& w = inputs[1];
  if (x.rank() != 2) ShapeMismatch("dense", "2-d data [N,K]", x.shape);
  const size_t n = x.shape[0], k = x.shape[1];
  if (w.rank() != 2 || w.shape[1] != k) {
    ShapeMismatch("dense", "weight [M," + std::to_string(k) + "]", w.shape);
  }
  const size_t m = w.shape[0];
  const float* bias = nullptr;
  if (inputs.size() == 3) {
    if (inputs[2].shape != Shape{m}) ShapeMismatch("dense", "bias [" + std::to_string(m) + "]", inputs[2].shape);
    bias = inputs[2].data.data();
  }
  Tensor y({n, m});
  for (size_t r = 0; r < n; ++r) {
    for (size_t col = 0; col < m; ++col) {
      double acc = bias ? bias[col] : 0.0;
      for (size_t i = 0; i < k; ++i) {
        acc += static_cast<double>(x.data[r * k + i]) * w.data[col * k + i];
      }
      y.data[r * m + col] = static_cast<float>(acc);
    }
  }
  return y;
}

size_t ResolveAxis(long long axis, size_t rank, std::string_view op) {
  long long r = static_cast<long long>(rank);
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) throw DataError(std::string(op) + ": axis out of range");
  return static_cast<size_t>(axis);
}

Tensor BiasAdd(std::span<const Tensor> inputs, const json& attrs) {
  RequireInputs("bias_add", inputs, 2, 2);
  const Tensor& x = inputs[0];
  const Tensor& bias = inputs[1];
  const size_t axis = ResolveAxis(attrs.value("axis", 1LL), x.rank(), "bias_add");
  if (bias.rank() != 1 || bias.shape[0] != x.shape[axis]) {
    ShapeMismatch("bias_add", "bias [" + std::to_string(x.shape[axis]) + "]", bias.shape);
  }
  size_t inner = 1;
  for (size_t d = axis + 1; d < x.rank(); ++d) inner *= x.shape[d];
  Tensor y = x;
  for (size_t i = 0; i < y.size(); ++i) y.data[i] += bias.data[(i / inner) % x.shape[axis]];
  return y;
}

Tensor Add(std::span<const Tensor> inputs) {
  RequireInputs("add", inputs, 2, 2);
  const Tensor& a = inputs[0];
  const Tensor& b = inputs[1];
  const size_t rank = std::max(a.rank(), b.rank());
  Shape out(rank);
  auto dim = [rank](const Tensor& t, size_t d) -> size_t {
    size_t offset = rank - t.rank();
    return d < offset ? 1 : t.shape[d - offset];
  };
  for (size_t d = 0; d < rank; ++d) {
    size_t da = dim(a, d), db = dim(b, d);
    if (da != db && da != 1 && db != 1) ShapeMismatch("add", "shape broadcastable with " + ShapeString(a.shape), b.shape);
    out[d] = std::max(da, db);
  }
  Tensor y(out);
  std::vector<size_t> index(rank, 0);
  for (size_t flat = 0; flat < y.size(); ++flat) {
    size_t rem = flat;
    for (size_t d = rank; d-- > 0;) {
      index[d] = rem % out[d];
      rem /= out[d];
    }
    auto offset_of = [&](const Tensor& t) {
      size_t off = 0;
      for (size_t d = 0; d < rank; ++d) {
        size_t extent = dim(t, d);
        off = off * extent + (extent == 1 ? 0 : index[d]);
      }
      return off;
    };
    y.data[flat] = a.data[offset_of(a)] + b.data[offset_of(b)];
  }
  return y;
}

Tensor MaxPool2d(std::span<const Tensor> inputs, const json& attrs) {
  RequireInputs("max_pool2d", inputs, 1, 1);
  const Tensor& x = inputs[0];
  if (x.rank() != 4) ShapeMismatch("max_pool2d", "NCHW data", x.shape);
  auto [ph, pw] = Pair(attrs, "pool_size", 2);
  auto [sh, sw] = attrs.contains("strides") ? Pair(attrs, "strides", 1) : std::make_pair(ph, pw);
  auto pad = Padding(attrs);
  if (ph == 0 || pw == 0 || sh == 0 || sw == 0) throw DataError("max_pool2d: zero window or stride");
  const size_t n = x.shape[0], c = x.shape[1], h = x.shape[2], w = x.shape[3];
  const size_t hp = h + pad[0] + pad[2], wp = w + pad[1] + pad[3];
  if (hp < ph || wp < pw) ShapeMismatch("max_pool2d", "input at least as large as the window", x.shape);
  const size_t oh = (hp - ph) / sh + 1, ow = (wp - pw) / sw + 1;
  Tensor y({n, c, oh, ow});
  for (size_t b = 0; b < n; ++b) {
    for (size_t ch = 0; ch < c; ++ch) {
      const float* plane = x.data.data() + (b * c + ch) * h * w;
      for (size_t i = 0; i < oh; ++i) {
        for (size_t j = 0; j < ow; ++j) {
          float best = -std::numeric_limits<float>::infinity();
          for (size_t di = 0; di < ph; ++di) {
            const long long yi = static_cast<long long>(i * sh + di) - static_cast<long long>(pad[0]);
            if (yi < 0 || yi >= static_cast<long long>(h)) continue;
            for (size_t dj = 0; dj < pw; ++dj) {
              const long long xj = static_cast<long long>(j * sw + dj) - static_cast<long long>(pad[1]);
              if (xj < 0 || xj >= static_cast<long long>(w)) continue;
              best = std::max(best, plane[static_cast<size_t>(yi) * w + static_cast<size_t>(xj)]);
            }
          }
          y.data[((b * c + ch) * oh + i) * ow + j] = best;
        }
      }
    }
  }
  return y;
}

Tensor Flatten(std::span<const Tensor> inputs) {
  RequireInputs("flatten", inputs, 1, 1);
  const Tensor& x = inputs[0];
  if (x.rank() < 1) ShapeMismatch("flatten", "rank >= 1", x.shape);
  size_t rest = 1;
  for (size_t d = 1; d < x.rank(); ++d) rest *= x.shape[d];
  return Tensor({x.shape[0], rest}, x.data);
}

Tensor Softmax(std::span<const Tensor> inputs, const json& attrs) {
  RequireInputs("softmax", inputs, 1, 1);
  const Tensor& x = inputs[0];
  if (x.rank() < 1) ShapeMismatch("softmax", "rank >= 1", x.shape);
  const size_t axis = ResolveAxis(attrs.value("axis", -1LL), x.rank(), "softmax");
  size_t inner = 1;
  for (size_t d = axis + 1; d < x.rank(); ++d) inner *= x.shape[d];
  const size_t extent = x.shape[axis];
  const size_t outer = x.size() / (extent * inner);
  Tensor y(x.shape);
  for (size_t o = 0; o < outer; ++o) {
    for (size_t in = 0; in < inner; ++in) {
      auto at = [&](size_t k) { return (o * extent + k) * inner + in; };
      double peak = -std::numeric_limits<double>::infinity();
      for (size_t k = 0; k < extent; ++k) peak = std::max(peak, static_cast<double>(x.data[at(k)]));
      double total = 0.0;
      for (size_t k = 0; k < extent; ++k) total += std::exp(x.data[at(k)] - peak);
      for (size_t k = 0; k < extent; ++k) {
        y.data[at(k)] = static_cast<float>(std::exp(x.data[at(k)] - peak) / total);
      }
    }
  }
  return y;
}

}  // namespace

Tensor RunKernel(std::string_view kernel_type, std::span<const Tensor> inputs, const json& attrs) {
  const json& a = attrs.is_object() ? attrs : json::object();
  if (kernel_type == "conv2d") return Conv2d(inputs, a);
  if (kernel_type == "conv2d_relu") return Relu(Conv2d(inputs, a));
  if (kernel_type == "dense") return Dense(inputs);
  if (kernel_type == "dense_relu") return Relu(Dense(inputs));
  if (kernel_type == "bias_add") return BiasAdd(inputs, a);
  if (kernel_type == "relu") {
    RequireInputs("relu", inputs, 1, 1);
    return Relu(inputs[0]);
  }
  if (kernel_type == "add") return Add(inputs);
  if (kernel_type == "max_pool2d") return MaxPool2d(inputs, a);
  if (kernel_type == "flatten") return Flatten(inputs);
  if (kernel_type == "softmax") return Softmax(inputs, a);
  throw DataError("unsupported kernel type '" + std::string(kernel_type) + "'");
}

void SaveTensors(const TensorMap& tensors, const std::filesystem::path& path) {
  json entries = json::array();
  std::string payload;
  for (const auto& [name, t] : tensors) {
    entries.push_back({{"name", name}, {"shape", t.shape}, {"offset", payload.size()},
                       {"count", t.size()}});
    AppendFloats(payload, t.data);
  }
  json header = {{"format", "nnreverse-tensors"}, {"version", 1}, {"dtype", "float32"},
                 {"tensors", std::move(entries)}};
  WriteBlobFile(path, header, payload);
}

TensorMap LoadTensors(const std::filesystem::path& path) {
  BlobFile file = ReadBlobFile(path);
  if (file.header.value("format", "") != "nnreverse-tensors") {
    throw DataError(path.string() + ": not a tensor file");
  }
  TensorMap tensors;
  try {
    for (const auto& e : file.header.at("tensors")) {
      size_t offset = e.at("offset").get<size_t>();
      Shape shape = e.at("shape").get<Shape>();
      size_t count = e.at("count").get<size_t>();
      if (count != ShapeVolume(shape)) throw DataError(path.string() + ": count disagrees with shape");
      std::vector<float> values = ReadFloats(file.payload, offset, count);
      tensors.emplace(e.at("name").get<std::string>(), Tensor(std::move(shape), std::move(values)));
    }
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": bad tensor header: " + e.what());
  }
  return tensors;
}

}  // namespace nnreverse
