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

#ifndef NNREVERSE_CORPUS_HPP_
#define NNREVERSE_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace nnreverse {

struct BasicBlock {
  int64_t block_id = 0;
  std::vector<std::string> instructions;
  // Entry/exit stubs are the only blocks allowed to be empty.
  bool stub = false;

  bool operator==(const BasicBlock&) const = default;
};

using CfgEdge = std::pair<int64_t, int64_t>;

struct AsmFunction {
  std::string function_id;
  std::string symbol;
  std::string platform;
  int opt_level = 0;
  std::optional<std::string> label;
  std::vector<BasicBlock> blocks;
  std::vector<CfgEdge> edges;

  bool operator==(const AsmFunction&) const = default;

  // Instructions as one stream, blocks visited in ascending block_id order.
  std::vector<std::string_view> InstructionStream() const;
  size_t InstructionCount() const;
};

struct Corpus {
  std::vector<std::string> kernel_types;
  std::vector<AsmFunction> functions;
  uint64_t split_seed = 0;
  double train_fraction = 0.8;

  bool operator==(const Corpus&) const = default;
};

// JSONL codec. The first line is the header
// {"kernel_types": [...], "version": 1}; every following line is one function.
AsmFunction FunctionFromJson(const nlohmann::json& j);
nlohmann::json FunctionToJson(const AsmFunction& f);

Corpus ParseCorpus(std::string_view text, std::string_view source = "<memory>");
std::string SerializeCorpus(const Corpus& corpus);
Corpus LoadCorpus(const std::filesystem::path& path);
void SaveCorpus(const Corpus& corpus, const std::filesystem::path& path);

// Throws DataError on the first violated invariant.
void ValidateFunction(const AsmFunction& f);
void ValidateCorpus(const Corpus& corpus);

struct CorpusSplit {
  Corpus train;
  Corpus test;
};

// Deterministic in corpus.split_seed. With `stratify`, every label group of
// at least two members contributes to both sides. Unlabeled functions form
// their own group. Within each side, corpus order is preserved.
CorpusSplit SplitCorpus(const Corpus& corpus, bool stratify = true);

// Order-sensitive digest of the function ids on both sides of a split.
uint64_t SplitChecksum(const CorpusSplit& split);

}  // namespace nnreverse

#endif  // NNREVERSE_CORPUS_HPP_
