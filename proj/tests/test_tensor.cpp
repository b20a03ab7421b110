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

#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "nnreverse/error.hpp"
#include "nnreverse/tensor.hpp"

namespace nnreverse {
namespace {

using nlohmann::json;

double MaxAbsDiff(const Tensor& a, const Tensor& b) {
  REQUIRE(a.shape == b.shape);
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a.data[i]) - b.data[i]));
  return m;
}

Tensor Run(std::string_view type, std::vector<Tensor> inputs, const json& attrs = json::object()) {
  return RunKernel(type, inputs, attrs);
}

TEST_CASE("conv2d equals direct convolution on random shapes") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    size_t n = 1 + rng.Below(2), c = 1 + rng.Below(3), o = 1 + rng.Below(4);
    size_t kh = 1 + rng.Below(3), kw = 1 + rng.Below(3);
    size_t sh = 1 + rng.Below(2), sw = 1 + rng.Below(2);
    size_t ph = rng.Below(2), pw = rng.Below(2);
    size_t h = kh + rng.Below(6), w = kw + rng.Below(6);
    Tensor x = testing::RandomTensor(rng, {n, c, h, w});
    Tensor k = testing::RandomTensor(rng, {o, c, kh, kw});
    Tensor b = testing::RandomTensor(rng, {o});
    bool with_bias = rng.Below(2) == 1;
    json attrs = {{"strides", {sh, sw}}, {"padding", {ph, pw}}};
    std::vector<Tensor> in = {x, k};
    if (with_bias) in.push_back(b);
    Tensor got = RunKernel("conv2d", in, attrs);
    Tensor want = testing::BruteConv2d(x, k, with_bias ? &b : nullptr, sh, sw, ph, pw);
    CHECK(MaxAbsDiff(got, want) <= 1e-5);
  }
}

TEST_CASE("conv2d padding spellings agree") {
  Rng rng(2);
  Tensor x = testing::RandomTensor(rng, {1, 2, 5, 5});
  Tensor k = testing::RandomTensor(rng, {3, 2, 3, 3});
  Tensor a = Run("conv2d", {x, k}, {{"padding", 1}});
  Tensor b = Run("conv2d", {x, k}, {{"padding", {1, 1, 1, 1}}});
  CHECK(a == b);
  CHECK(a.shape == Shape{1, 3, 5, 5});
  CHECK_THROWS_AS(Run("conv2d", {x, testing::RandomTensor(rng, {3, 4, 3, 3})}), DataError);
}

TEST_CASE("softmax rows sum to one and are stable") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    size_t rows = 1 + rng.Below(5), cols = 1 + rng.Below(20);
    Tensor x = testing::RandomTensor(rng, {rows, cols}, -50, 50);
    if (trial % 10 == 0) x.data[0] = 1e30f;
    Tensor y = Run("softmax", {x});
    CHECK(y.AllFinite());
    for (size_t r = 0; r < rows; ++r) {
      double s = 0;
      for (size_t c = 0; c < cols; ++c) {
        s += y.data[r * cols + c];
        CHECK(y.data[r * cols + c] >= 0.0f);
      }
      CHECK(std::abs(s - 1.0) <= 1e-6);
    }
  }
  Tensor x({1, 3}, {1, 2, 3});
  Tensor y = Run("softmax", {x});
  double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  CHECK(y.data[2] == doctest::Approx(std::exp(3.0) / z).epsilon(1e-6));
  Tensor cols = Run("softmax", {Tensor({2, 2}, {0, 0, 5, 5})}, {{"axis", 0}});
  CHECK(cols.data[0] + cols.data[2] == doctest::Approx(1.0));
}

TEST_CASE("dense, relu, bias_add, add, flatten") {
  Tensor x({2, 3}, {1, 2, 3, -1, 0, 1});
  Tensor w({2, 3}, {1, 0, 0, 0, 1, 1});
  Tensor b({2}, {0.5f, -10});
  CHECK(Run("dense", {x, w, b}).data == std::vector<float>{1.5f, -5, -0.5f, -9});
  CHECK(Run("dense_relu", {x, w, b}).data == std::vector<float>{1.5f, 0, 0, 0});
  CHECK(Run("relu", {x}).data == std::vector<float>{1, 2, 3, 0, 0, 1});
  CHECK(Run("bias_add", {Tensor({1, 2, 1, 2}, {1, 1, 1, 1}), b}).data ==
        std::vector<float>{1.5f, 1.5f, -9, -9});
  Tensor row({3}, {10, 20, 30});
  CHECK(Run("add", {x, row}).data == std::vector<float>{11, 22, 33, 9, 20, 31});
  Tensor col({2, 1}, {100, 200});
  CHECK(Run("add", {x, col}).data == std::vector<float>{101, 102, 103, 199, 200, 201});
  CHECK_THROWS_AS(Run("add", {x, Tensor({2}, {1, 1})}), DataError);
  Tensor f = Run("flatten", {Tensor({2, 2, 2, 1})});
  CHECK(f.shape == Shape{2, 4});
  CHECK_THROWS_AS(Run("dense", {x, Tensor({2, 4})}), DataError);
}

TEST_CASE("max_pool2d windows and default strides") {
  std::vector<float> d(16);
  for (size_t i = 0; i < 16; ++i) d[i] = static_cast<float>((i * 7) % 16);
  Tensor x({1, 1, 4, 4}, d);
  Tensor y = Run("max_pool2d", {x}, {{"pool_size", {2, 2}}});
  CHECK(y.shape == Shape{1, 1, 2, 2});
  for (size_t i = 0; i < 2; ++i) {
    for (size_t j = 0; j < 2; ++j) {
      float m = -1;
      for (size_t u = 0; u < 2; ++u) {
        for (size_t v = 0; v < 2; ++v) m = std::max(m, d[(2 * i + u) * 4 + 2 * j + v]);
      }
      CHECK(y.data[i * 2 + j] == m);
    }
  }
  Tensor s = Run("max_pool2d", {x}, {{"pool_size", 3}, {"strides", 1}});
  CHECK(s.shape == Shape{1, 1, 2, 2});
}

TEST_CASE("tensor validation, kernel set and file round trip") {
  CHECK_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), DataError);
  for (auto k : kKernelTypes) CHECK(IsSupportedKernel(k));
  CHECK_FALSE(IsSupportedKernel("lstm"));
  CHECK_THROWS_AS(Run("lstm", {Tensor({1})}), DataError);
  auto dir = testing::ScratchDir("tensors");
  TensorMap m = {{"a", Tensor({2, 1}, {1, -2})}, {"b", Tensor({3}, {0.5f, 0.25f, 8})}};
  SaveTensors(m, dir / "t.bin");
  CHECK(LoadTensors(dir / "t.bin") == m);
}

}  // namespace
}  // namespace nnreverse
