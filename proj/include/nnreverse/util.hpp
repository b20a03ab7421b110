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

#ifndef NNREVERSE_UTIL_HPP_
#define NNREVERSE_UTIL_HPP_

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace nnreverse {

// 64-bit FNV-1a.
constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr uint64_t kFnvPrime = 0x100000001b3ULL;

inline uint64_t Fnv1a64(std::string_view text, uint64_t hash = kFnvOffset) {
  for (unsigned char c : text) {
    hash ^= c;
    hash *= kFnvPrime;
  }
  return hash;
}

// Deterministic random source. Floating-point draws are derived from the raw
// 64-bit engine output so results do not depend on the standard library's
// distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t Next() { return engine_(); }

  // Uniform in [0, 1).
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }

  // Uniform integer in [0, n).
  uint64_t Below(uint64_t n) { return n == 0 ? 0 : engine_() % n; }

  template <typename T>
  void Shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[Below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Files made of one JSON header line followed by raw little-endian blobs.
// Used by the model, database and parameter formats.
struct BlobFile {
  nlohmann::json header;
  std::string payload;  // bytes following the header line
};

void WriteBlobFile(const std::filesystem::path& path,
                   const nlohmann::json& header, std::string_view payload);
BlobFile ReadBlobFile(const std::filesystem::path& path);

void AppendFloats(std::string& out, std::span<const float> values);
void AppendDoubles(std::string& out, std::span<const double> values);
// Reads `count` values starting at byte `offset`; advances offset.
std::vector<float> ReadFloats(const std::string& payload, size_t& offset,
                              size_t count);
std::vector<double> ReadDoubles(const std::string& payload, size_t& offset,
                                size_t count);

// Writes text to path atomically enough for our purposes: path + ".partial"
// first, then rename.
void WriteTextFile(const std::filesystem::path& path, std::string_view text);
std::string ReadTextFile(const std::filesystem::path& path);

// Hex rendering of a 64-bit value, zero padded.
std::string Hex64(uint64_t value);

}  // namespace nnreverse

#endif  // NNREVERSE_UTIL_HPP_
