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

#ifndef NNREVERSE_SYNTH_HPP_
#define NNREVERSE_SYNTH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "nnreverse/corpus.hpp"

namespace nnreverse {

// Parameters of the synthetic corpus generator. Each kernel class gets its
// own loop nest (class k has depth k + 1) and its own instruction mix;
// members of one class differ only by per-instruction noise.
struct SynthSpec {
  int classes = 5;
  int per_class = 40;
  std::vector<std::string> platforms = {"x86"};
  double noise_rate = 0.1;
  uint64_t seed = 1;
};

// Kernel type name for class index k.
std::string SynthKernelName(int k);

// Throws ConfigError when classes < 2, per_class < 2, noise_rate outside
// [0,1] or no platform is given.
Corpus GenerateSyntheticCorpus(const SynthSpec& spec);

}  // namespace nnreverse

#endif  // NNREVERSE_SYNTH_HPP_
