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

#ifndef NNREVERSE_SGNS_HPP_
#define NNREVERSE_SGNS_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "nnreverse/util.hpp"

namespace nnreverse {

// Dense row-major float matrix used for embedding tables.
struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<float> data;

  Matrix() = default;
  Matrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0f) {}

  std::span<float> Row(size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const float> Row(size_t r) const { return {data.data() + r * cols, cols}; }

  void FillUniform(Rng& rng, double lo, double hi) {
    for (float& v : data) v = static_cast<float>(rng.Uniform(lo, hi));
  }
  bool AllFinite() const {
    for (float v : data) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }
  uint64_t Checksum() const;

  bool operator==(const Matrix&) const = default;
};

// Samples indices proportionally to count^power (word2vec's unigram^(3/4)
// noise distribution). Zero-count entries are never drawn.
class NoiseSampler {
 public:
  NoiseSampler() = default;
  NoiseSampler(std::span<const uint64_t> counts, double power = 0.75);

  int32_t Sample(Rng& rng) const;
  bool empty() const { return cumulative_.empty() || cumulative_.back() <= 0.0; }

 private:
  std::vector<double> cumulative_;
};

inline double Dot(std::span<const float> a, std::span<const float> b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

inline double Sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// -log(sigmoid(x)), stable for large |x|.
inline double LogLoss(double x) {
  return x >= 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

// Negative-sampling term for one output row: -log sigmoid(+-h.u).
inline double SgnsTermLoss(std::span<const float> h, std::span<const float> u,
                           bool positive) {
  double score = Dot(h, u);
  return LogLoss(positive ? score : -score);
}

// SGD on one output row with label 1 (positive) or 0 (noise). Adds the
// descent step for h into `grad_h` using the row's value before the update,
// then moves the row. Returns the term's loss before the update.
inline double SgnsTermStep(std::span<const float> h, std::span<float> u,
                           bool positive, double lr, std::span<double> grad_h) {
  double score = Dot(h, u);
  double label = positive ? 1.0 : 0.0;
  double g = lr * (label - Sigmoid(score));
  for (size_t i = 0; i < h.size(); ++i) grad_h[i] += g * u[i];
  for (size_t i = 0; i < h.size(); ++i) u[i] += static_cast<float>(g * h[i]);
  return LogLoss(positive ? score : -score);
}

// Same as SgnsTermStep but leaves the output row untouched.
inline double SgnsTermFrozen(std::span<const float> h, std::span<const float> u,
                             bool positive, double lr, std::span<double> grad_h) {
  double score = Dot(h, u);
  double label = positive ? 1.0 : 0.0;
  double g = lr * (label - Sigmoid(score));
  for (size_t i = 0; i < h.size(); ++i) grad_h[i] += g * u[i];
  return LogLoss(positive ? score : -score);
}

// Learning rate after `done` of `total` steps, decaying linearly.
inline double LinearRate(double start, double end, uint64_t done, uint64_t total) {
  if (total == 0) return start;
  double t = static_cast<double>(done) / static_cast<double>(total);
  return start + (end - start) * t;
}

}  // namespace nnreverse

#endif  // NNREVERSE_SGNS_HPP_
