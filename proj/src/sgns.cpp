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

#include "nnreverse/sgns.hpp"

#include <algorithm>
#include <cstring>

namespace nnreverse {

uint64_t Matrix::Checksum() const {
  uint64_t h = kFnvOffset;
  h = Fnv1a64(std::to_string(rows) + "x" + std::to_string(cols), h);
  std::string_view bytes(reinterpret_cast<const char*>(data.data()),
                         data.size() * sizeof(float));
  return Fnv1a64(bytes, h);
}

NoiseSampler::NoiseSampler(std::span<const uint64_t> counts, double power) {
  cumulative_.reserve(counts.size());
  double total = 0.0;
  for (uint64_t c : counts) {
    total += c == 0 ? 0.0 : std::pow(static_cast<double>(c), power);
    cumulative_.push_back(total);
  }
}

int32_t NoiseSampler::Sample(Rng& rng) const {
  double r = rng.Uniform() * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
  if (it == cumulative_.end()) --it;
  return static_cast<int32_t>(it - cumulative_.begin());
}

}  // namespace nnreverse
