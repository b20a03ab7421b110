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

#include "nnreverse/cli.hpp"

#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "nnreverse/asm_lang.hpp"
#include "nnreverse/corpus.hpp"
#include "nnreverse/embed_struct.hpp"
#include "nnreverse/embed_text.hpp"
#include "nnreverse/error.hpp"
#include "nnreverse/match_db.hpp"
#include "nnreverse/pipeline.hpp"
#include "nnreverse/reconstruct.hpp"
#include "nnreverse/synth.hpp"
#include "nnreverse/util.hpp"

namespace nnreverse {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Flags shared by the training-related subcommands. Each one overrides the
// matching field of the --config file when given.
struct Overrides {
  std::string config;
  std::optional<std::string> corpus;
  std::optional<std::string> out_dir;
  std::optional<uint64_t> seed;
  std::optional<int> dim;
  std::optional<int> context;
  std::optional<int> epochs;
  std::optional<int> infer_epochs;
  std::optional<int> negatives;
  std::optional<double> lr_start;
  std::optional<double> lr_end;
  std::optional<int> wl_iterations;
  std::optional<uint64_t> min_count;
  std::optional<std::string> mode;
  std::optional<double> train_fraction;
  bool no_stratify = false;
  bool closed_world = false;
};

void AddModelFlags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run config; flags override its fields");
  cmd->add_option("--seed", o.seed, "Seed for every stochastic component");
  cmd->add_option("--dim", o.dim, "Embedding width (text and structure)");
  cmd->add_option("--context", o.context, "Text context window per side");
  cmd->add_option("--epochs", o.epochs, "Training epochs");
  cmd->add_option("--infer-epochs", o.infer_epochs, "Inference epochs for unseen functions");
  cmd->add_option("--negatives", o.negatives, "Negative samples per target");
  cmd->add_option("--lr-start", o.lr_start, "Initial learning rate");
  cmd->add_option("--lr-end", o.lr_end, "Final learning rate");
  cmd->add_option("--wl-iterations", o.wl_iterations, "Weisfeiler-Lehman iterations");
  cmd->add_option("--min-count", o.min_count, "Vocabulary min count");
}

void AddSplitFlags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--train-fraction", o.train_fraction, "Training share of the split");
  cmd->add_flag("--no-stratify", o.no_stratify, "Split without label stratification");
}

RunConfig Resolve(const Overrides& o) {
  RunConfig c;
  if (!o.config.empty()) {
    json j;
    try {
      j = json::parse(ReadTextFile(o.config));
    } catch (const json::exception& e) {
      throw ConfigError(o.config + ": " + e.what());
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
    c = RunConfig::FromJson(j);
  }
  if (o.corpus) c.corpus = *o.corpus;
  if (o.out_dir) c.out_dir = *o.out_dir;
  if (o.seed) c.seed = *o.seed;
  c.PropagateSeed();
  if (o.dim) c.text.dim = c.wl.dim = *o.dim;
  if (o.context) c.text.context = *o.context;
  if (o.epochs) c.text.epochs = c.wl.epochs = *o.epochs;
  if (o.infer_epochs) c.text.infer_epochs = c.wl.infer_epochs = *o.infer_epochs;
  if (o.negatives) c.text.negatives = c.wl.negatives = *o.negatives;
  if (o.lr_start) c.text.lr_start = c.wl.lr_start = *o.lr_start;
  if (o.lr_end) c.text.lr_end = c.wl.lr_end = *o.lr_end;
  if (o.wl_iterations) c.wl.iterations = *o.wl_iterations;
  if (o.min_count) c.min_count = *o.min_count;
  if (o.mode) c.mode = ParseDbMode(*o.mode);
  if (o.train_fraction) c.train_fraction = *o.train_fraction;
  if (o.no_stratify) c.stratify = false;
  if (o.closed_world) c.closed_world = true;
  c.text.Validate();
  c.wl.Validate();
  return c;
}

void Emit(const json& j, const std::string& path, std::ostream& out) {
  std::string text = j.dump(2) + "\n";
  if (path.empty()) {
    out << text;
  } else {
    WriteTextFile(path, text);
  }
}

Corpus RequireCorpus(const std::string& path) {
  if (path.empty()) throw ConfigError("--corpus is required");
  return LoadCorpus(path);
}

std::vector<std::string> SplitList(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

std::vector<int> IntList(const std::string& text) {
  std::vector<int> values;
  for (const auto& s : SplitList(text)) {
    try {
      values.push_back(std::stoi(s));
    } catch (const std::exception&) {
      throw ConfigError("not an integer list: " + text);
    }
  }
  return values;
}

AsmFunction ReadSingleFunction(const std::string& path) {
  std::string text;
  if (path == "-") {
    std::ostringstream buffer;
    buffer << std::cin.rdbuf();
    text = buffer.str();
  } else {
    text = ReadTextFile(path);
  }
  size_t start = text.find_first_not_of(" \t\r\n");
  if (start == std::string::npos) throw DataError("no function record in " + path);
  size_t end = text.find('\n', start);
  std::string line = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw DataError(path + ": malformed JSON: " + e.what());
  }
  AsmFunction f = FunctionFromJson(j);
  ValidateFunction(f);
  return f;
}

json TensorJson(const Tensor& t) { return {{"version", 1}, {"shape", t.shape}, {"data", t.data}}; }

}  // namespace

int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Embed disassembled DNN kernel functions, classify them against a labeled "
               "database, and rebuild the model from its compiled graph."};
  app.name("nnreverse");
  app.require_subcommand(1);
  std::function<void()> action;
  Overrides o;
  std::string out_path, corpus_path;

  // gen-synth
  SynthSpec synth;
  std::string platforms = "x86";
  auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic labeled corpus");
  gen->add_option("--classes", synth.classes, "Kernel classes")->capture_default_str();
  gen->add_option("--per-class", synth.per_class, "Functions per class")->capture_default_str();
  gen->add_option("--platforms", platforms, "Comma-separated platform tags")->capture_default_str();
  gen->add_option("--noise", synth.noise_rate, "Fraction of mutated instructions")->capture_default_str();
  gen->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
  gen->add_option("--out", out_path, "Output corpus (JSONL)")->required();
  gen->callback([&] {
    action = [&] {
      synth.platforms = SplitList(platforms);
      SaveCorpus(GenerateSyntheticCorpus(synth), out_path);
    };
  });

  // ingest
  std::string train_out, test_out;
  auto* ingest = app.add_subcommand("ingest", "Validate a corpus and split it into train/test");
  ingest->add_option("--corpus", corpus_path, "Corpus (JSONL)")->required();
  ingest->add_option("--seed", o.seed, "Split seed");
  AddSplitFlags(ingest, o);
  ingest->add_option("--train-out", train_out, "Write the training side here");
  ingest->add_option("--test-out", test_out, "Write the test side here");
  ingest->add_option("--out", out_path, "Summary JSON (default stdout)");
  ingest->callback([&] {
    action = [&] {
      Corpus corpus = RequireCorpus(corpus_path);
      RunConfig cfg = Resolve(o);
      CorpusSplit split = MakeSplit(corpus, cfg);
      if (!train_out.empty()) SaveCorpus(split.train, train_out);
      if (!test_out.empty()) SaveCorpus(split.test, test_out);
      size_t labeled = 0;
      for (const auto& f : corpus.functions) labeled += f.label ? 1 : 0;
      Emit({{"version", 1},
            {"functions", corpus.functions.size()},
            {"labeled", labeled},
            {"kernel_types", corpus.kernel_types},
            {"train", split.train.functions.size()},
            {"test", split.test.functions.size()},
            {"split_checksum", Hex64(SplitChecksum(split))}},
           out_path, out);
    };
  });

  // oov
  std::string train_path, test_path;
  auto* oov = app.add_subcommand("oov", "Report native vs fine-grained OOV ratios");
  oov->add_option("--corpus", corpus_path, "Corpus to split (alternative to --train/--test)");
  oov->add_option("--train", train_path, "Training corpus");
  oov->add_option("--test", test_path, "Test corpus");
  oov->add_option("--seed", o.seed, "Split seed");
  oov->add_option("--min-count", o.min_count, "Vocabulary min count");
  AddSplitFlags(oov, o);
  oov->add_option("--out", out_path, "Report JSON (default stdout)");
  oov->callback([&] {
    action = [&] {
      RunConfig cfg = Resolve(o);
      CorpusSplit split;
      if (!corpus_path.empty()) {
        split = MakeSplit(LoadCorpus(corpus_path), cfg);
      } else if (!train_path.empty() && !test_path.empty()) {
        split = {LoadCorpus(train_path), LoadCorpus(test_path)};
      } else {
        throw ConfigError("oov needs --corpus or both --train and --test");
      }
      Vocabulary vocab = BuildVocab(split.train, cfg.min_count);
      Emit(ComputeOovReport(vocab, split.train, split.test).ToJson(), out_path, out);
    };
  });

  // train-text
  auto* train_text = app.add_subcommand("train-text", "Train the instruction-text embedding");
  train_text->add_option("--corpus", corpus_path, "Training corpus (JSONL)")->required();
  train_text->add_option("--out", out_path, "Model file")->required();
  AddModelFlags(train_text, o);
  train_text->callback([&] {
    action = [&] {
      RunConfig cfg = Resolve(o);
      Corpus train = RequireCorpus(corpus_path);
      Vocabulary vocab = BuildVocab(train, cfg.min_count);
      SaveTextModel(TrainTextModel(train, vocab, cfg.text), out_path);
    };
  });

  // train-struct
  auto* train_struct = app.add_subcommand("train-struct", "Train the CFG structure embedding");
  train_struct->add_option("--corpus", corpus_path, "Training corpus (JSONL)")->required();
  train_struct->add_option("--out", out_path, "Model file")->required();
  AddModelFlags(train_struct, o);
  train_struct->callback([&] {
    action = [&] {
      RunConfig cfg = Resolve(o);
      SaveStructModel(TrainStructModel(RequireCorpus(corpus_path), cfg.wl), out_path);
    };
  });

  // build-db / match / eval share model paths.
  std::string text_model_path, struct_model_path, db_path, function_path;
  auto load_models = [&](DbMode mode, std::optional<TextModel>& tm,
                         std::optional<StructModel>& sm) {
    if (mode != DbMode::kStructOnly) {
      if (text_model_path.empty()) throw ConfigError("--text-model is required for this mode");
      tm = LoadTextModel(text_model_path);
    }
    if (mode != DbMode::kTextOnly) {
      if (struct_model_path.empty()) throw ConfigError("--struct-model is required for this mode");
      sm = LoadStructModel(struct_model_path);
    }
  };
  auto ptr = [](auto& opt) { return opt ? &*opt : nullptr; };

  auto* build_db = app.add_subcommand("build-db", "Build the labeled function database");
  build_db->add_option("--corpus", corpus_path, "Training corpus (JSONL)")->required();
  build_db->add_option("--text-model", text_model_path, "Text model file");
  build_db->add_option("--struct-model", struct_model_path, "Structure model file");
  build_db->add_option("--mode", o.mode, "fused | text | struct");
  build_db->add_option("--out", out_path, "Database file")->required();
  build_db->callback([&] {
    action = [&] {
      DbMode mode = o.mode ? ParseDbMode(*o.mode) : DbMode::kFused;
      std::optional<TextModel> tm;
      std::optional<StructModel> sm;
      load_models(mode, tm, sm);
      SaveDb(BuildDb(RequireCorpus(corpus_path), ptr(tm), ptr(sm), mode), out_path);
    };
  });

  auto* match = app.add_subcommand("match", "Classify one function against the database");
  match->add_option("--db", db_path, "Database file")->required();
  match->add_option("--function", function_path, "File holding one function JSON line ('-' = stdin)")
      ->required();
  match->add_option("--text-model", text_model_path, "Text model file");
  match->add_option("--struct-model", struct_model_path, "Structure model file");
  match->add_option("--out", out_path, "Result JSON (default stdout)");
  match->callback([&] {
    action = [&] {
      EmbeddingDb db = LoadDb(db_path);
      std::optional<TextModel> tm;
      std::optional<StructModel> sm;
      load_models(db.mode, tm, sm);
      AsmFunction f = ReadSingleFunction(function_path);
      QueryVector q = ComputeQueryVector(f, ptr(tm), ptr(sm), db.mode);
      MatchResult r = Match(db, q.fused.values);
      r.degenerate = r.degenerate || q.fused.degenerate;
      json j = r.ToJson();
      j["function_id"] = f.function_id;
      j["unknown_structure"] = q.unknown_structure;
      Emit(j, out_path, out);
    };
  });

  auto* eval = app.add_subcommand("eval", "Evaluate held-out functions against the database");
  eval->add_option("--db", db_path, "Database file")->required();
  eval->add_option("--test", test_path, "Test corpus (JSONL)")->required();
  eval->add_option("--text-model", text_model_path, "Text model file");
  eval->add_option("--struct-model", struct_model_path, "Structure model file");
  eval->add_option("--out", out_path, "Report JSON (default stdout)");
  eval->callback([&] {
    action = [&] {
      EmbeddingDb db = LoadDb(db_path);
      std::optional<TextModel> tm;
      std::optional<StructModel> sm;
      load_models(db.mode, tm, sm);
      Emit(Evaluate(db, LoadCorpus(test_path), ptr(tm), ptr(sm), db.mode).ToJson(), out_path, out);
    };
  });

  // sweep / ablate / pipeline
  std::string dims = "100,200,300", contexts = "3,5,7", table_path;
  auto* sweep = app.add_subcommand("sweep", "Dimension x context sensitivity sweep");
  sweep->add_option("--corpus", o.corpus, "Corpus (JSONL)");
  sweep->add_option("--dims", dims, "Comma-separated embedding widths")->capture_default_str();
  sweep->add_option("--contexts", contexts, "Comma-separated context sizes")->capture_default_str();
  sweep->add_option("--mode", o.mode, "fused | text | struct");
  sweep->add_option("--out", out_path, "Sweep JSON (default stdout)");
  sweep->add_option("--table-out", table_path, "Plain-text F1 matrix");
  AddModelFlags(sweep, o);
  AddSplitFlags(sweep, o);
  sweep->callback([&] {
    action = [&] {
      RunConfig cfg = Resolve(o);
      SweepSpec spec;
      spec.dims = IntList(dims);
      spec.contexts = IntList(contexts);
      SweepResult r = RunSweep(RequireCorpus(cfg.corpus.string()), cfg, spec);
      Emit(r.ToJson(), out_path, out);
      if (!table_path.empty()) WriteTextFile(table_path, r.RenderTable());
      err << r.RenderTable();
    };
  });

  auto* ablate = app.add_subcommand("ablate", "Compare fused, text-only and structure-only");
  ablate->add_option("--corpus", o.corpus, "Corpus (JSONL)");
  ablate->add_option("--out", out_path, "Ablation JSON (default stdout)");
  AddModelFlags(ablate, o);
  AddSplitFlags(ablate, o);
  ablate->callback([&] {
    action = [&] {
      RunConfig cfg = Resolve(o);
      Emit(RunAblation(RequireCorpus(cfg.corpus.string()), cfg).ToJson(), out_path, out);
    };
  });

  auto* pipeline = app.add_subcommand("pipeline", "Run ingest through eval and write all artifacts");
  pipeline->add_option("--corpus", o.corpus, "Corpus (JSONL)");
  pipeline->add_option("--out-dir", o.out_dir, "Artifact directory");
  pipeline->add_option("--mode", o.mode, "fused | text | struct");
  pipeline->add_flag("--closed-world", o.closed_world, "Evaluate on the training corpus");
  AddModelFlags(pipeline, o);
  AddSplitFlags(pipeline, o);
  pipeline->callback([&] {
    action = [&] {
      PipelineResult r = RunPipeline(Resolve(o));
      out << r.report.ToJson().dump(2) << "\n";
    };
  });

  // reconstruct
  std::string graph_path, params_path, labels_path, functions_path, input_path, summary_path;
  auto* rec = app.add_subcommand("reconstruct", "Rebuild and execute a model from its graph");
  rec->add_option("--graph", graph_path, "Graph descriptor JSON")->required();
  rec->add_option("--params", params_path, "Parameter tensor file")->required();
  rec->add_option("--labels", labels_path, "JSON map symbol -> kernel type");
  rec->add_option("--db", db_path, "Classify kernel symbols live with this database");
  rec->add_option("--functions", functions_path, "Corpus holding the kernel functions (with --db)");
  rec->add_option("--text-model", text_model_path, "Text model file (with --db)");
  rec->add_option("--struct-model", struct_model_path, "Structure model file (with --db)");
  rec->add_option("--input", input_path, "Input tensor file")->required();
  rec->add_option("--summary-out", summary_path, "Architecture summary JSON");
  rec->add_option("--out", out_path, "Output tensor file (default: JSON on stdout)");
  rec->callback([&] {
    action = [&] {
      GraphDescriptor g = ParseGraph(graph_path);
      ParamStore params = LoadTensors(params_path);
      KernelLabels labels;
      json matches = json::object();
      if (!labels_path.empty()) {
        try {
          labels = json::parse(ReadTextFile(labels_path)).get<KernelLabels>();
        } catch (const json::exception& e) {
          throw DataError(labels_path + ": " + e.what());
        }
      } else if (!db_path.empty()) {
        if (functions_path.empty()) throw ConfigError("--db needs --functions");
        EmbeddingDb db = LoadDb(db_path);
        std::optional<TextModel> tm;
        std::optional<StructModel> sm;
        load_models(db.mode, tm, sm);
        Corpus victim = LoadCorpus(functions_path);
        for (int64_t id : g.KernelIds()) {
          const std::string& symbol = g.Node(id).symbol;
          if (labels.count(symbol)) continue;
          auto it = std::find_if(victim.functions.begin(), victim.functions.end(),
                                 [&](const AsmFunction& f) { return f.symbol == symbol; });
          if (it == victim.functions.end()) {
            throw DataError("no function with symbol '" + symbol + "' in " + functions_path);
          }
          MatchResult r = Match(db, ComputeQueryVector(*it, ptr(tm), ptr(sm), db.mode).fused.values);
          labels[symbol] = r.kernel_type;
          matches[symbol] = r.ToJson();
        }
      } else {
        throw ConfigError("reconstruct needs --labels or --db");
      }
      TensorMap inputs = LoadTensors(input_path);
      auto input_ids = g.InputIds();
      if (input_ids.size() == 1 && inputs.size() == 1) {
        Tensor t = inputs.begin()->second;
        inputs = {{g.Node(input_ids[0]).name, std::move(t)}};
      }
      ReconstructResult r = ReconstructRun(g, params, labels, inputs);
      if (!summary_path.empty()) {
        json summary = r.summary.ToJson();
        summary["labels"] = labels;
        if (!matches.empty()) summary["matches"] = matches;
        WriteTextFile(summary_path, summary.dump(2) + "\n");
      }
      if (out_path.empty()) {
        out << TensorJson(r.output).dump() << "\n";
      } else {
        SaveTensors({{"output", r.output}}, out_path);
      }
    };
  });

  std::vector<const char*> argv = {"nnreverse"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "nnreverse: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::kConfig);
  }
  try {
    if (action) action();
  } catch (const Error& e) {
    err << "nnreverse: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "nnreverse: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::kData);
  } catch (const std::exception& e) {
    err << "nnreverse: internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace nnreverse
