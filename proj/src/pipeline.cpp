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

#include "nnreverse/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "nnreverse/error.hpp"
#include "nnreverse/util.hpp"

namespace nnreverse {

namespace fs = std::filesystem;
using nlohmann::json;

void RunConfig::PropagateSeed() {
  text.seed = seed;
  wl.seed = seed;
}

json RunConfig::ToJson() const {
  return {{"corpus", corpus.string()},
          {"out_dir", out_dir.string()},
          {"text", text.ToJson()},
          {"wl", wl.ToJson()},
          {"mode", DbModeName(mode)},
          {"seed", seed},
          {"min_count", min_count},
          {"train_fraction", train_fraction},
          {"stratify", stratify},
          {"closed_world", closed_world}};
}

RunConfig RunConfig::FromJson(const json& j) {
  RunConfig c;
  try {
    c.corpus = j.value("corpus", std::string());
    c.out_dir = j.value("out_dir", c.out_dir.string());
    if (j.contains("text")) c.text = TextModelConfig::FromJson(j.at("text"));
    if (j.contains("wl")) c.wl = WlConfig::FromJson(j.at("wl"));
    c.mode = ParseDbMode(j.value("mode", std::string("fused")));
    c.seed = j.value("seed", c.seed);
    c.min_count = j.value("min_count", c.min_count);
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.stratify = j.value("stratify", c.stratify);
    c.closed_world = j.value("closed_world", c.closed_world);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad run config: ") + e.what());
  }
  c.PropagateSeed();
  return c;
}

void RethrowInStage(const std::string& stage) {
  try {
    throw;
  } catch (const Error& e) {
    throw Error(e.kind(), "stage '" + stage + "': " + e.what());
  } catch (const std::exception& e) {
    throw DataError("stage '" + stage + "': " + e.what());
  }
}

CorpusSplit MakeSplit(const Corpus& corpus, const RunConfig& config) {
  if (config.closed_world) return {corpus, corpus};
  Corpus c = corpus;
  c.split_seed = config.seed;
  c.train_fraction = config.train_fraction;
  return SplitCorpus(c, config.stratify);
}

TrainedModels TrainModels(CorpusSplit split, const RunConfig& config) {
  TrainedModels m;
  m.split = std::move(split);
  try {
    m.vocab = BuildVocab(m.split.train, config.min_count);
  } catch (...) {
    RethrowInStage("vocab");
  }
  try {
    m.text = TrainTextModel(m.split.train, m.vocab, config.text);
  } catch (...) {
    RethrowInStage("train-text");
  }
  try {
    m.structure = TrainStructModel(m.split.train, config.wl);
  } catch (...) {
    RethrowInStage("train-struct");
  }
  return m;
}

EvalReport EvaluateMode(const TrainedModels& models, DbMode mode) {
  EmbeddingDb db;
  try {
    db = BuildDb(models.split.train, &models.text, &models.structure, mode);
  } catch (...) {
    RethrowInStage("build-db");
  }
  try {
    return Evaluate(db, models.split.test, &models.text, &models.structure, mode);
  } catch (...) {
    RethrowInStage("eval");
  }
}

PipelineResult RunPipeline(const RunConfig& config) {
  Corpus corpus;
  try {
    if (config.corpus.empty()) throw ConfigError("no corpus path given");
    if (!fs::exists(config.corpus)) throw DataError("corpus not found: " + config.corpus.string());
    corpus = LoadCorpus(config.corpus);
  } catch (...) {
    RethrowInStage("ingest");
  }
  fs::create_directories(config.out_dir);
  PipelineResult result;
  result.text_model = config.out_dir / "text_model.bin";
  result.struct_model = config.out_dir / "struct_model.bin";
  result.db = config.out_dir / "db.bin";
  result.report_path = config.out_dir / "eval.json";
  auto partial = [](const fs::path& p) {
    fs::path q = p;
    q += ".partial";
    return q;
  };

  CorpusSplit split;
  try {
    split = MakeSplit(corpus, config);
  } catch (...) {
    RethrowInStage("ingest");
  }
  TrainedModels models = TrainModels(std::move(split), config);
  try {
    SaveTextModel(models.text, partial(result.text_model));
    SaveStructModel(models.structure, partial(result.struct_model));
  } catch (...) {
    RethrowInStage("train");
  }
  EmbeddingDb db;
  try {
    db = BuildDb(models.split.train, &models.text, &models.structure, config.mode);
    SaveDb(db, partial(result.db));
  } catch (...) {
    RethrowInStage("build-db");
  }
  try {
    result.report = Evaluate(db, models.split.test, &models.text, &models.structure, config.mode);
    json report = result.report.ToJson();
    report["split_checksum"] = Hex64(SplitChecksum(models.split));
    report["train_functions"] = models.split.train.functions.size();
    report["test_functions"] = models.split.test.functions.size();
    WriteTextFile(partial(result.report_path), report.dump(2) + "\n");
  } catch (...) {
    RethrowInStage("eval");
  }
  for (const fs::path* p :
       {&result.text_model, &result.struct_model, &result.db, &result.report_path}) {
    fs::rename(partial(*p), *p);
  }
  return result;
}

std::optional<double> SweepResult::Range() const {
  std::optional<double> lo, hi;
  for (const auto& c : cells) {
    if (!c.f1) continue;
    lo = lo ? std::min(*lo, *c.f1) : *c.f1;
    hi = hi ? std::max(*hi, *c.f1) : *c.f1;
  }
  if (!lo) return std::nullopt;
  return *hi - *lo;
}

json SweepResult::ToJson() const {
  json matrix = json::array();
  json cell_list = json::array();
  size_t k = 0;
  for (size_t i = 0; i < dims.size(); ++i) {
    json row = json::array();
    for (size_t j = 0; j < contexts.size(); ++j, ++k) {
      const SweepCell& c = cells[k];
      row.push_back(c.f1 ? json(*c.f1) : json(nullptr));
      json jc = {{"dim", c.dim}, {"context", c.context}, {"f1", c.f1 ? json(*c.f1) : json(nullptr)}};
      if (!c.error.empty()) jc["error"] = c.error;
      cell_list.push_back(std::move(jc));
    }
    matrix.push_back(std::move(row));
  }
  auto range = Range();
  return {{"version", 1},         {"dims", dims},
          {"contexts", contexts}, {"weighted_f1", std::move(matrix)},
          {"cells", std::move(cell_list)},
          {"f1_range", range ? json(*range) : json(nullptr)}};
}

std::string SweepResult::RenderTable() const {
  // Rendered from the JSON form so the two never disagree.
  const json j = ToJson();
  std::ostringstream out;
  out << "dim\\context";
  for (int c : j.at("contexts")) out << "\t" << c;
  out << "\n";
  for (size_t i = 0; i < j.at("dims").size(); ++i) {
    out << j.at("dims")[i].get<int>();
    for (const auto& v : j.at("weighted_f1")[i]) {
      char buf[32];
      if (v.is_null()) {
        std::snprintf(buf, sizeof(buf), "FAILED");
      } else {
        std::snprintf(buf, sizeof(buf), "%.4f", v.get<double>());
      }
      out << "\t" << buf;
    }
    out << "\n";
  }
  return out.str();
}

SweepResult RunSweep(const Corpus& corpus, const RunConfig& config, const SweepSpec& spec) {
  if (spec.dims.empty() || spec.contexts.empty()) {
    throw ConfigError("sweep needs at least one dim and one context");
  }
  SweepResult result;
  result.dims = spec.dims;
  result.contexts = spec.contexts;
  CorpusSplit split = MakeSplit(corpus, config);
  for (int dim : spec.dims) {
    for (int context : spec.contexts) {
      SweepCell cell;
      cell.dim = dim;
      cell.context = context;
      try {
        if (spec.before_cell) spec.before_cell(dim, context);
        RunConfig cfg = config;
        cfg.text.dim = dim;
        cfg.text.context = context;
        cfg.wl.dim = dim;
        TrainedModels models = TrainModels(split, cfg);
        cell.f1 = EvaluateMode(models, cfg.mode).weighted.f1;
      } catch (const std::exception& e) {
        cell.error = e.what();
        std::cerr << "sweep: cell dim=" << dim << " context=" << context
                  << " failed: " << e.what() << "\n";
      }
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

json AblationResult::ToJson() const {
  const std::string checksum = Hex64(split_checksum);
  json modes = json::object();
  for (const EvalReport* r : {&fused, &text_only, &struct_only}) {
    json jr = r->ToJson();
    jr["split_checksum"] = checksum;
    modes[r->mode] = std::move(jr);
  }
  return {{"version", 1}, {"split_checksum", checksum}, {"modes", std::move(modes)}};
}

AblationResult RunAblation(const Corpus& corpus, const RunConfig& config) {
  CorpusSplit split;
  try {
    split = MakeSplit(corpus, config);
  } catch (...) {
    RethrowInStage("ingest");
  }
  AblationResult result;
  result.split_checksum = SplitChecksum(split);
  TrainedModels models = TrainModels(std::move(split), config);
  result.fused = EvaluateMode(models, DbMode::kFused);
  result.text_only = EvaluateMode(models, DbMode::kTextOnly);
  result.struct_only = EvaluateMode(models, DbMode::kStructOnly);
  return result;
}

}  // namespace nnreverse
