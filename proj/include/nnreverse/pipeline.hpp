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

#ifndef NNREVERSE_PIPELINE_HPP_
#define NNREVERSE_PIPELINE_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nnreverse/asm_lang.hpp"
#include "nnreverse/corpus.hpp"
#include "nnreverse/embed_struct.hpp"
#include "nnreverse/embed_text.hpp"
#include "nnreverse/match_db.hpp"

namespace nnreverse {

struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path out_dir = "nnreverse_out";
  TextModelConfig text;
  WlConfig wl;
  DbMode mode = DbMode::kFused;
  uint64_t seed = 1;
  uint64_t min_count = 1;
  double train_fraction = 0.8;
  bool stratify = true;
  // Evaluate on the training corpus itself instead of a held-out split.
  bool closed_world = false;

  // Copies `seed` into every stochastic component.
  void PropagateSeed();
  nlohmann::json ToJson() const;
  static RunConfig FromJson(const nlohmann::json& j);
};

// Stage failures keep the error kind and prefix the message with the stage.
[[noreturn]] void RethrowInStage(const std::string& stage);

CorpusSplit MakeSplit(const Corpus& corpus, const RunConfig& config);

struct TrainedModels {
  CorpusSplit split;
  Vocabulary vocab;
  TextModel text;
  StructModel structure;
};

TrainedModels TrainModels(CorpusSplit split, const RunConfig& config);
EvalReport EvaluateMode(const TrainedModels& models, DbMode mode);

struct PipelineResult {
  EvalReport report;
  std::filesystem::path text_model;
  std::filesystem::path struct_model;
  std::filesystem::path db;
  std::filesystem::path report_path;
};

// ingest -> vocab -> train-text -> train-struct -> build-db -> eval. Each
// artifact is written with a ".partial" suffix and only renamed once every
// stage has succeeded.
PipelineResult RunPipeline(const RunConfig& config);

struct SweepSpec {
  std::vector<int> dims = {100, 200, 300};
  std::vector<int> contexts = {3, 5, 7};
  // Test hook run before each cell; throwing marks the cell failed.
  std::function<void(int dim, int context)> before_cell;
};

struct SweepCell {
  int dim = 0;
  int context = 0;
  std::optional<double> f1;
  std::string error;
};

struct SweepResult {
  std::vector<SweepCell> cells;  // dims-major
  std::vector<int> dims;
  std::vector<int> contexts;

  std::optional<double> Range() const;  // max - min over populated cells
  nlohmann::json ToJson() const;
  std::string RenderTable() const;
};

SweepResult RunSweep(const Corpus& corpus, const RunConfig& config, const SweepSpec& spec);

struct AblationResult {
  uint64_t split_checksum = 0;
  EvalReport fused;
  EvalReport text_only;
  EvalReport struct_only;

  nlohmann::json ToJson() const;
};

AblationResult RunAblation(const Corpus& corpus, const RunConfig& config);

}  // namespace nnreverse

#endif  // NNREVERSE_PIPELINE_HPP_
