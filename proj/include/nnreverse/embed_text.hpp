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

#ifndef NNREVERSE_EMBED_TEXT_HPP_
#define NNREVERSE_EMBED_TEXT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "nnreverse/asm_lang.hpp"
#include "nnreverse/corpus.hpp"
#include "nnreverse/sgns.hpp"

namespace nnreverse {

struct TextModelConfig {
  int dim = 100;      // instruction width: dim/2 opcode + dim/2 operand mean
  int context = 5;    // instructions on each side of the center
  int epochs = 30;
  double lr_start = 0.025;
  double lr_end = 0.0001;
  int negatives = 5;
  uint64_t seed = 1;
  int infer_epochs = 60;

  void Validate() const;  // throws ConfigError
  nlohmann::json ToJson() const;
  static TextModelConfig FromJson(const nlohmann::json& j);
  bool operator==(const TextModelConfig&) const = default;
};

// PV-DM style paragraph-vector model over instructions. An instruction's
// input vector is its opcode row concatenated with the mean of its operand
// rows; the hidden vector averages the function's doc vector with the
// surrounding instruction vectors and predicts every token of the center
// instruction through negative sampling.
struct TextModel {
  TextModelConfig config;
  Vocabulary vocab;
  Matrix in_opcode;   // |V| x dim/2
  Matrix in_operand;  // |V| x dim/2
  Matrix out_tokens;  // |V| x dim
  std::vector<std::string> doc_ids;
  Matrix doc_vectors;  // |doc_ids| x dim

  size_t half() const { return static_cast<size_t>(config.dim / 2); }
  std::optional<std::span<const float>> StoredVector(const std::string& function_id) const;
  bool AllFinite() const;
  // Digest of the token matrices only (not doc vectors).
  uint64_t WeightsChecksum() const;
  void RebuildIndex();

  bool operator==(const TextModel& o) const {
    return config == o.config && vocab == o.vocab && in_opcode == o.in_opcode &&
           in_operand == o.in_operand && out_tokens == o.out_tokens &&
           doc_ids == o.doc_ids && doc_vectors == o.doc_vectors;
  }

  std::unordered_map<std::string, size_t> doc_index;
};

std::vector<float> InstructionVector(const TextModel& model, const ParsedInstruction& ins);
std::vector<float> InstructionVector(const TextModel& model, const EncodedInstruction& ins);

// One prediction: the center instruction of `stream` with `negatives_per_target`
// noise tokens drawn for each of its target tokens (laid out target-major).
struct TextExample {
  std::span<const EncodedInstruction> stream;
  size_t center = 0;
  std::span<const int32_t> negatives;
};

// Target tokens of an instruction: opcode then operands, UNK dropped.
std::vector<int32_t> TextTargets(const Vocabulary& vocab, const EncodedInstruction& ins);

double TextExampleLoss(const TextModel& model, std::span<const float> doc,
                       const TextExample& example);

// SGD step on one example. `update_weights` false freezes all token
// matrices and only moves `doc`. Returns the loss before the update.
double TextExampleStep(TextModel& model, std::span<float> doc,
                       const TextExample& example, double lr, bool update_weights);
double TextDocStep(const TextModel& model, std::span<float> doc,
                   const TextExample& example, double lr);

struct TrainingLog {
  std::vector<double> epoch_mean_loss;
};

TextModel TrainTextModel(const Corpus& train, const Vocabulary& vocab,
                         const TextModelConfig& config, TrainingLog* log = nullptr);

// Seeded initial doc vector for a query function.
std::vector<float> InitialDocVector(const TextModelConfig& config,
                                    const std::string& function_id);

// Fits a fresh doc vector against the frozen token matrices.
std::vector<float> InferTextVector(const TextModel& model, const AsmFunction& f);

void SaveTextModel(const TextModel& model, const std::filesystem::path& path);
TextModel LoadTextModel(const std::filesystem::path& path);

}  // namespace nnreverse

#endif  // NNREVERSE_EMBED_TEXT_HPP_
