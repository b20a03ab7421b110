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

// Shared fixtures and independent oracles for the unit and acceptance tests.

#ifndef NNREVERSE_TESTS_FIXTURES_HPP_
#define NNREVERSE_TESTS_FIXTURES_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <string>
#include <vector>

#include "json.hpp"
#include "nnreverse/corpus.hpp"
#include "nnreverse/reconstruct.hpp"
#include "nnreverse/tensor.hpp"
#include "nnreverse/util.hpp"

namespace nnreverse::testing {

inline std::filesystem::path ScratchDir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("nnreverse_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Tensor RandomTensor(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (float& x : t.data) x = static_cast<float>(rng.Uniform(lo, hi));
  return t;
}

// Direct convolution, one output element at a time, accumulated in double.
inline Tensor BruteConv2d(const Tensor& x, const Tensor& w, const Tensor* bias, size_t stride_h,
                          size_t stride_w, size_t pad_h, size_t pad_w) {
  const size_t n = x.shape[0], c = x.shape[1], h = x.shape[2], wd = x.shape[3];
  const size_t o = w.shape[0], kh = w.shape[2], kw = w.shape[3];
  const size_t oh = (h + 2 * pad_h - kh) / stride_h + 1;
  const size_t ow = (wd + 2 * pad_w - kw) / stride_w + 1;
  Tensor y({n, o, oh, ow});
  for (size_t b = 0; b < n; ++b) {
    for (size_t oc = 0; oc < o; ++oc) {
      for (size_t i = 0; i < oh; ++i) {
        for (size_t j = 0; j < ow; ++j) {
          double acc = bias ? bias->data[oc] : 0.0;
          for (size_t ic = 0; ic < c; ++ic) {
            for (size_t u = 0; u < kh; ++u) {
              for (size_t v = 0; v < kw; ++v) {
                long r = static_cast<long>(i * stride_h + u) - static_cast<long>(pad_h);
                long s = static_cast<long>(j * stride_w + v) - static_cast<long>(pad_w);
                if (r < 0 || s < 0 || r >= static_cast<long>(h) || s >= static_cast<long>(wd)) {
                  continue;
                }
                acc += static_cast<double>(x.data[((b * c + ic) * h + r) * wd + s]) *
                       w.data[((oc * c + ic) * kh + u) * kw + v];
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

// conv2d(3x3, pad 1) -> relu -> max_pool2d(2) -> flatten -> dense -> softmax
// over a 1x1x8x8 input.
struct SmallCnn {
  GraphDescriptor graph;
  ParamStore params;
  KernelLabels labels;
};

inline nlohmann::json SmallCnnGraphJson() {
  using nlohmann::json;
  return json{
      {"nodes",
       json::array({
           {{"id", 0}, {"kind", "input"}, {"name", "data"}},
           {{"id", 1}, {"kind", "param"}, {"name", "conv_w"}},
           {{"id", 2}, {"kind", "param"}, {"name", "conv_b"}},
           {{"id", 3},
            {"kind", "kernel"},
            {"symbol", "tvmgen_default_fused_nn_conv2d"},
            {"inputs", {0, 1, 2}},
            {"attrs", {{"strides", {1, 1}}, {"padding", {1, 1}}}}},
           {{"id", 4}, {"kind", "kernel"}, {"symbol", "tvmgen_default_fused_nn_relu"}, {"inputs", {3}}},
           {{"id", 5},
            {"kind", "kernel"},
            {"symbol", "tvmgen_default_fused_nn_max_pool2d"},
            {"inputs", {4}},
            {"attrs", {{"pool_size", {2, 2}}}}},
           {{"id", 6}, {"kind", "kernel"}, {"symbol", "tvmgen_default_fused_flatten"}, {"inputs", {5}}},
           {{"id", 7}, {"kind", "param"}, {"name", "fc_w"}},
           {{"id", 8}, {"kind", "param"}, {"name", "fc_b"}},
           {{"id", 9}, {"kind", "kernel"}, {"symbol", "tvmgen_default_fused_nn_dense"}, {"inputs", {6, 7, 8}}},
           {{"id", 10}, {"kind", "kernel"}, {"symbol", "tvmgen_default_fused_nn_softmax"}, {"inputs", {9}}},
       })},
      {"output_id", 10},
      {"input_shapes", {{"data", {1, 1, 8, 8}}}}};
}

inline SmallCnn MakeSmallCnn(uint64_t seed) {
  SmallCnn cnn;
  cnn.graph = GraphFromJson(SmallCnnGraphJson());
  Rng rng(seed);
  cnn.params["conv_w"] = RandomTensor(rng, {4, 1, 3, 3}, -0.5, 0.5);
  cnn.params["conv_b"] = RandomTensor(rng, {4}, -0.1, 0.1);
  cnn.params["fc_w"] = RandomTensor(rng, {10, 64}, -0.3, 0.3);
  cnn.params["fc_b"] = RandomTensor(rng, {10}, -0.1, 0.1);
  cnn.labels = {{"tvmgen_default_fused_nn_conv2d", "conv2d"},
                {"tvmgen_default_fused_nn_relu", "relu"},
                {"tvmgen_default_fused_nn_max_pool2d", "max_pool2d"},
                {"tvmgen_default_fused_flatten", "flatten"},
                {"tvmgen_default_fused_nn_dense", "dense"},
                {"tvmgen_default_fused_nn_softmax", "softmax"}};
  return cnn;
}

// The same network written out as straight-line loops.
inline std::vector<double> SmallCnnOracle(const ParamStore& p, const Tensor& input) {
  const auto& cw = p.at("conv_w").data;
  const auto& cb = p.at("conv_b").data;
  const auto& fw = p.at("fc_w").data;
  const auto& fb = p.at("fc_b").data;
  double conv[4][8][8];
  for (int o = 0; o < 4; ++o) {
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < 8; ++j) {
        double acc = cb[o];
        for (int u = 0; u < 3; ++u) {
          for (int v = 0; v < 3; ++v) {
            int r = i + u - 1, s = j + v - 1;
            if (r < 0 || s < 0 || r >= 8 || s >= 8) continue;
            acc += static_cast<double>(input.data[r * 8 + s]) * cw[o * 9 + u * 3 + v];
          }
        }
        conv[o][i][j] = std::max(0.0, static_cast<double>(static_cast<float>(acc)));
      }
    }
  }
  double flat[64];
  for (int o = 0; o < 4; ++o) {
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        double m = conv[o][2 * i][2 * j];
        m = std::max(m, conv[o][2 * i][2 * j + 1]);
        m = std::max(m, conv[o][2 * i + 1][2 * j]);
        m = std::max(m, conv[o][2 * i + 1][2 * j + 1]);
        flat[o * 16 + i * 4 + j] = m;
      }
    }
  }
  double logits[10];
  double top = -1e300;
  for (int k = 0; k < 10; ++k) {
    double acc = fb[k];
    for (int t = 0; t < 64; ++t) acc += flat[t] * fw[k * 64 + t];
    logits[k] = acc;
    top = std::max(top, acc);
  }
  double z = 0.0;
  for (double& l : logits) {
    l = std::exp(l - top);
    z += l;
  }
  std::vector<double> out(10);
  for (int k = 0; k < 10; ++k) out[k] = logits[k] / z;
  return out;
}

// Random CFG with `n` blocks drawn from a small opcode pool, so that several
// blocks share depth-0 labels.
inline AsmFunction RandomCfgFunction(Rng& rng, size_t n, const std::string& id) {
  static const char* kOps[] = {"mov rax, rbx", "add rax, 1", "cmp rax, rcx", "jl 0x10",
                               "vmulps ymm0, ymm1, ymm2", "ret", "push rbx", "pop rbx"};
  AsmFunction f;
  f.function_id = id;
  f.symbol = id;
  f.platform = "x86";
  f.label = "k";
  for (size_t i = 0; i < n; ++i) {
    BasicBlock b;
    b.block_id = static_cast<int64_t>(i);
    size_t len = 1 + rng.Below(3);
    for (size_t k = 0; k < len; ++k) b.instructions.push_back(kOps[rng.Below(std::size(kOps))]);
    f.blocks.push_back(b);
  }
  size_t edges = n + rng.Below(n + 1);
  for (size_t e = 0; e < edges; ++e) {
    f.edges.push_back({static_cast<int64_t>(rng.Below(n)), static_cast<int64_t>(rng.Below(n))});
  }
  return f;
}

// Relabels block ids through a random permutation (offset so ids change) and
// shuffles block and edge order.
inline AsmFunction PermuteBlocks(const AsmFunction& f, Rng& rng) {
  std::vector<int64_t> perm(f.blocks.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int64_t>(i) * 7 + 100;
  rng.Shuffle(perm);
  std::unordered_map<int64_t, int64_t> map;
  for (size_t i = 0; i < f.blocks.size(); ++i) map[f.blocks[i].block_id] = perm[i];
  AsmFunction g = f;
  for (auto& b : g.blocks) b.block_id = map.at(b.block_id);
  for (auto& [s, d] : g.edges) {
    s = map.at(s);
    d = map.at(d);
  }
  rng.Shuffle(g.blocks);
  rng.Shuffle(g.edges);
  return g;
}

inline double Cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

inline double CosineF(std::span<const float> a, std::span<const float> b) {
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  return Cosine(x, y);
}

// Norm-wise relative error ||a - b|| / max(||a||, ||b||).
inline double RelativeError(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

// Central differences of `loss` over the entries of `param`.
template <typename Loss>
std::vector<double> NumericGradient(std::span<float> param, Loss loss, float eps) {
  std::vector<double> g(param.size());
  for (size_t i = 0; i < param.size(); ++i) {
    const float saved = param[i];
    param[i] = saved + eps;
    const double up = loss();
    param[i] = saved - eps;
    const double down = loss();
    param[i] = saved;
    g[i] = (up - down) / (2.0 * static_cast<double>(eps));
  }
  return g;
}

// Gradient implied by one SGD step: -(after - before) / lr.
inline std::vector<double> StepGradient(std::span<const float> before, std::span<const float> after,
                                        double lr) {
  std::vector<double> g(before.size());
  for (size_t i = 0; i < before.size(); ++i) {
    g[i] = -(static_cast<double>(after[i]) - static_cast<double>(before[i])) / lr;
  }
  return g;
}

}  // namespace nnreverse::testing

#endif  // NNREVERSE_TESTS_FIXTURES_HPP_
