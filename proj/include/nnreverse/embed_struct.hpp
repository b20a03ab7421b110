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

#ifndef NNREVERSE_EMBED_STRUCT_HPP_
#define NNREVERSE_EMBED_STRUCT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "nnreverse/corpus.hpp"
#include "nnreverse/embed_text.hpp"
#include "nnreverse/sgns.hpp"

namespace nnreverse {

struct WlConfig {
  int iterations = 2;
  int dim = 100;
  int epochs = 30;
  double lr_start = 0.025;
  double lr_end = 0.0001;
  int negatives = 5;
  uint64_t seed = 1;
  int infer_epochs = 60;

  void Validate() const;
  nlohmann::json ToJson() const;
  static WlConfig FromJson(const nlohmann::json& j);
  bool operator==(const WlConfig&) const = default;
};

struct WlToken {
  uint64_t key = 0;
  int depth = 0;

  auto operator<=>(const WlToken&) const = default;
};

// Directed Weisfeiler-Lehman relabeling of the CFG. Depth 0 labels hash the
// sorted opcode multiset of each block; depth t+1 hashes the depth-t label
// together with the sorted successor labels and, separately, the sorted
// predecessor labels. Returns every node's label at every depth, so the
// result always holds (h + 1) * |blocks| tokens.
std::vector<WlToken> WlTokens(const AsmFunction& f, int iterations);

struct WlVocabEntry {
  uint64_t key = 0;
  int depth = 0;
  uint64_t count = 0;

  bool operator==(const WlVocabEntry&) const = default;
};

// graph2vec style model: each graph vector predicts the subgraph tokens of
// its own CFG against unigram^(3/4) noise tokens.
struct StructModel {
  WlConfig config;
  std::vector<WlVocabEntry> wl_vocab;
  Matrix out_subgraphs;  // |W| x dim
  std::vector<std::string> doc_ids;
  Matrix graph_vectors;  // |doc_ids| x dim

  std::unordered_map<uint64_t, int32_t> token_index;
  std::unordered_map<std::string, size_t> doc_index;

  std::optional<int32_t> Lookup(uint64_t key) const;
  std::optional<std::span<const float>> StoredVector(const std::string& function_id) const;
  std::vector<uint64_t> Counts() const;
  bool AllFinite() const { return out_subgraphs.AllFinite() && graph_vectors.AllFinite(); }
  void RebuildIndex();

  bool operator==(const StructModel& o) const {
    return config == o.config && wl_vocab == o.wl_vocab && out_subgraphs == o.out_subgraphs &&
           doc_ids == o.doc_ids && graph_vectors == o.graph_vectors;
  }
};

double StructExampleLoss(const StructModel& model, std::span<const float> graph_vector,
                         int32_t target, std::span<const int32_t> negatives);
// SGD on one (graph, token) pair; moves out_subgraphs rows when
// `update_weights` is set, plus the graph vector. Returns the prior loss.
double StructExampleStep(StructModel& model, std::span<float> graph_vector, int32_t target,
                         std::span<const int32_t> negatives, double lr, bool update_weights);

StructModel TrainStructModel(const Corpus& train, const WlConfig& config,
                             TrainingLog* log = nullptr);

struct InferredStructVector {
  std::vector<float> vector;
  // Set when none of the graph's tokens is in the vocabulary; `vector` is
  // then the seeded initialization.
  bool unknown_tokens = false;
  size_t dropped_tokens = 0;
};

std::vector<float> InitialGraphVector(const WlConfig& config, const std::string& function_id);
InferredStructVector InferStructVector(const StructModel& model, const AsmFunction& f);

void SaveStructModel(const StructModel& model, const std::filesystem::path& path);
StructModel LoadStructModel(const std::filesystem::path& path);

}  // namespace nnreverse

#endif  // NNREVERSE_EMBED_STRUCT_HPP_
