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

#include "nnreverse/embed_struct.hpp"

#include <algorithm>
#include <map>

#include "nnreverse/asm_lang.hpp"
#include "nnreverse/error.hpp"
#include "nnreverse/util.hpp"

namespace nnreverse {

using nlohmann::json;

void WlConfig::Validate() const {
  if (iterations < 0) throw ConfigError("WL iterations must be >= 0");
  if (dim < 1) throw ConfigError("struct dim must be >= 1");
  if (negatives < 1) throw ConfigError("struct negatives must be >= 1");
  if (epochs < 0 || infer_epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(lr_start > 0.0) || lr_end < 0.0) throw ConfigError("learning rates must be positive");
}

json WlConfig::ToJson() const {
  return {{"iterations", iterations}, {"dim", dim},           {"epochs", epochs},
          {"lr_start", lr_start},     {"lr_end", lr_end},     {"negatives", negatives},
          {"seed", seed},             {"infer_epochs", infer_epochs}};
}

WlConfig WlConfig::FromJson(const json& j) {
  WlConfig c;
  c.iterations = j.value("iterations", c.iterations);
  c.dim = j.value("dim", c.dim);
  c.epochs = j.value("epochs", c.epochs);
  c.lr_start = j.value("lr_start", c.lr_start);
  c.lr_end = j.value("lr_end", c.lr_end);
  c.negatives = j.value("negatives", c.negatives);
  c.seed = j.value("seed", c.seed);
  c.infer_epochs = j.value("infer_epochs", c.infer_epochs);
  return c;
}

std::vector<WlToken> WlTokens(const AsmFunction& f, int iterations) {
  const size_t n = f.blocks.size();
  std::unordered_map<int64_t, size_t> position;
  for (size_t i = 0; i < n; ++i) position.emplace(f.blocks[i].block_id, i);
  std::vector<std::vector<size_t>> succ(n), pred(n);
  for (const auto& [src, dst] : f.edges) {
    size_t s = position.at(src);
    size_t d = position.at(dst);
    succ[s].push_back(d);
    pred[d].push_back(s);
  }

  std::vector<WlToken> tokens;
  tokens.reserve(n * static_cast<size_t>(iterations + 1));
  std::vector<uint64_t> labels(n);
  for (size_t i = 0; i < n; ++i) {
    std::vector<std::string> opcodes;
    for (const auto& line : f.blocks[i].instructions) {
      opcodes.push_back(ParseInstruction(line).opcode.text);
    }
    std::sort(opcodes.begin(), opcodes.end());
    std::string canonical = "wl0(";
    for (const auto& op : opcodes) canonical += op + ",";
    canonical += ")";
    labels[i] = Fnv1a64(canonical);
    tokens.push_back({labels[i], 0});
  }

  auto neighbor_labels = [&](const std::vector<size_t>& nodes) {
    std::vector<uint64_t> out;
    out.reserve(nodes.size());
    for (size_t v : nodes) out.push_back(labels[v]);
    std::sort(out.begin(), out.end());
    std::string joined;
    for (uint64_t l : out) joined += Hex64(l) + ",";
    return joined;
  };

  for (int depth = 1; depth <= iterations; ++depth) {
    std::vector<uint64_t> next(n);
    for (size_t i = 0; i < n; ++i) {
      std::string canonical = "wl" + std::to_string(depth) + "(" + Hex64(labels[i]) +
                              "|s:" + neighbor_labels(succ[i]) +
                              "|p:" + neighbor_labels(pred[i]) + ")";
      next[i] = Fnv1a64(canonical);
    }
    labels = std::move(next);
    for (size_t i = 0; i < n; ++i) tokens.push_back({labels[i], depth});
  }
  return tokens;
}

std::optional<int32_t> StructModel::Lookup(uint64_t key) const {
  auto it = token_index.find(key);
  if (it == token_index.end()) return std::nullopt;
  return it->second;
}

std::optional<std::span<const float>> StructModel::StoredVector(
    const std::string& function_id) const {
  auto it = doc_index.find(function_id);
  if (it == doc_index.end()) return std::nullopt;
  return graph_vectors.Row(it->second);
}

std::vector<uint64_t> StructModel::Counts() const {
  std::vector<uint64_t> counts;
  counts.reserve(wl_vocab.size());
  for (const auto& e : wl_vocab) counts.push_back(e.count);
  return counts;
}

void StructModel::RebuildIndex() {
  token_index.clear();
  for (size_t i = 0; i < wl_vocab.size(); ++i) {
    token_index.emplace(wl_vocab[i].key, static_cast<int32_t>(i));
  }
  doc_index.clear();
  for (size_t i = 0; i < doc_ids.size(); ++i) doc_index.emplace(doc_ids[i], i);
}

namespace {

double RunPair(const StructModel& m, StructModel* model, std::span<float> h_vec,
               int32_t target, std::span<const int32_t> negatives, double lr, bool apply) {
  const size_t dim = h_vec.size();
  std::vector<float> h(h_vec.begin(), h_vec.end());
  std::vector<double> grad(dim, 0.0);
  double loss = 0.0;
  auto term = [&](int32_t row, bool positive) {
    if (model != nullptr) {
      loss += SgnsTermStep(h, model->out_subgraphs.Row(static_cast<size_t>(row)), positive,
                           lr, grad);
    } else {
      loss += SgnsTermFrozen(h, m.out_subgraphs.Row(static_cast<size_t>(row)), positive, lr,
                             grad);
    }
  };
  term(target, true);
  for (int32_t neg : negatives) {
    if (neg != target) term(neg, false);
  }
  if (apply) {
    for (size_t j = 0; j < dim; ++j) h_vec[j] += static_cast<float>(grad[j]);
  }
  return loss;
}

std::vector<int32_t> KnownTokens(const StructModel& m, const std::vector<WlToken>& tokens,
                                 size_t* dropped) {
  std::vector<int32_t> known;
  size_t missing = 0;
  for (const auto& t : tokens) {
    if (auto idx = m.Lookup(t.key)) {
      known.push_back(*idx);
    } else {
      ++missing;
    }
  }
  if (dropped != nullptr) *dropped = missing;
  return known;
}

}  // namespace

double StructExampleLoss(const StructModel& model, std::span<const float> graph_vector,
                         int32_t target, std::span<const int32_t> negatives) {
  std::vector<float> scratch(graph_vector.begin(), graph_vector.end());
  return RunPair(model, nullptr, scratch, target, negatives, 0.0, false);
}

double StructExampleStep(StructModel& model, std::span<float> graph_vector, int32_t target,
                         std::span<const int32_t> negatives, double lr, bool update_weights) {
  return RunPair(model, update_weights ? &model : nullptr, graph_vector, target, negatives, lr,
                 true);
}

StructModel TrainStructModel(const Corpus& train, const WlConfig& config, TrainingLog* log) {
  config.Validate();
  if (train.functions.empty()) throw DataError("cannot train on an empty corpus");
  StructModel m;
  m.config = config;

  std::vector<std::vector<WlToken>> graph_tokens;
  std::map<uint64_t, WlVocabEntry> counted;
  for (const auto& f : train.functions) {
    graph_tokens.push_back(WlTokens(f, config.iterations));
    for (const auto& t : graph_tokens.back()) {
      auto [it, inserted] = counted.try_emplace(t.key, WlVocabEntry{t.key, t.depth, 0});
      ++it->second.count;
    }
  }
  for (const auto& [key, entry] : counted) m.wl_vocab.push_back(entry);
  std::stable_sort(m.wl_vocab.begin(), m.wl_vocab.end(),
                   [](const WlVocabEntry& a, const WlVocabEntry& b) { return a.count > b.count; });
  for (const auto& f : train.functions) m.doc_ids.push_back(f.function_id);
  m.RebuildIndex();
  if (m.doc_index.size() != m.doc_ids.size()) throw DataError("duplicate function_id in training corpus");

  const size_t dim = static_cast<size_t>(config.dim);
  m.out_subgraphs = Matrix(m.wl_vocab.size(), dim);
  m.graph_vectors = Matrix(train.functions.size(), dim);
  Rng rng(config.seed);
  const double bound = 0.5 / static_cast<double>(dim);
  m.graph_vectors.FillUniform(rng, -bound, bound);

  std::vector<std::vector<int32_t>> graphs;
  uint64_t pairs = 0;
  for (const auto& tokens : graph_tokens) {
    graphs.push_back(KnownTokens(m, tokens, nullptr));
    pairs += graphs.back().size();
  }
  NoiseSampler sampler(m.Counts());
  const uint64_t total = pairs * static_cast<uint64_t>(config.epochs);
  uint64_t done = 0;
  std::vector<size_t> order(graphs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<int32_t> negatives(static_cast<size_t>(config.negatives));
  for (int e = 0; e < config.epochs; ++e) {
    rng.Shuffle(order);
    double epoch_loss = 0.0;
    for (size_t gi : order) {
      auto h = m.graph_vectors.Row(gi);
      for (int32_t target : graphs[gi]) {
        const double lr = LinearRate(config.lr_start, config.lr_end, done++, total);
        for (auto& n : negatives) n = sampler.Sample(rng);
        epoch_loss += RunPair(m, &m, h, target, negatives, lr, true);
      }
    }
    if (log != nullptr) {
      log->epoch_mean_loss.push_back(pairs == 0 ? 0.0 : epoch_loss / static_cast<double>(pairs));
    }
  }
  if (!m.AllFinite()) throw NumericError("structure model diverged: non-finite weights");
  return m;
}

std::vector<float> InitialGraphVector(const WlConfig& config, const std::string& function_id) {
  Rng rng(Fnv1a64(function_id) ^ (config.seed * 0x9e3779b97f4a7c15ULL));
  const double bound = 0.5 / static_cast<double>(config.dim);
  std::vector<float> v(static_cast<size_t>(config.dim));
  for (float& x : v) x = static_cast<float>(rng.Uniform(-bound, bound));
  return v;
}

InferredStructVector InferStructVector(const StructModel& model, const AsmFunction& f) {
  InferredStructVector result;
  result.vector = InitialGraphVector(model.config, f.function_id);
  const auto tokens = WlTokens(f, model.config.iterations);
  const auto known = KnownTokens(model, tokens, &result.dropped_tokens);
  if (known.empty()) {
    result.unknown_tokens = true;
    return result;
  }
  Rng rng(Fnv1a64(f.function_id, model.config.seed + 0x57c7));
  NoiseSampler sampler(model.Counts());
  const uint64_t total = known.size() * static_cast<uint64_t>(model.config.infer_epochs);
  uint64_t done = 0;
  std::vector<int32_t> negatives(static_cast<size_t>(model.config.negatives));
  for (int e = 0; e < model.config.infer_epochs; ++e) {
    for (int32_t target : known) {
      const double lr = LinearRate(model.config.lr_start, model.config.lr_end, done++, total);
      for (auto& n : negatives) n = sampler.Sample(rng);
      RunPair(model, nullptr, result.vector, target, negatives, lr, true);
    }
  }
  for (float x : result.vector) {
    if (!std::isfinite(x)) throw NumericError("non-finite inferred structure vector");
  }
  return result;
}

void SaveStructModel(const StructModel& model, const std::filesystem::path& path) {
  json header;
  header["format"] = "nnreverse-struct-model";
  header["version"] = 1;
  header["config"] = model.config.ToJson();
  json vocab = json::array();
  for (const auto& e : model.wl_vocab) vocab.push_back({e.key, e.depth, e.count});
  header["wl_vocab"] = std::move(vocab);
  header["doc_ids"] = model.doc_ids;
  header["dtype"] = "float32";
  header["blobs"] = json::array(
      {{{"name", "out_subgraphs"},
        {"shape", {model.out_subgraphs.rows, model.out_subgraphs.cols}}},
       {{"name", "graph_vectors"},
        {"shape", {model.graph_vectors.rows, model.graph_vectors.cols}}}});
  std::string payload;
  AppendFloats(payload, model.out_subgraphs.data);
  AppendFloats(payload, model.graph_vectors.data);
  WriteBlobFile(path, header, payload);
}

StructModel LoadStructModel(const std::filesystem::path& path) {
  BlobFile file = ReadBlobFile(path);
  const json& h = file.header;
  if (h.value("format", "") != "nnreverse-struct-model") {
    throw DataError(path.string() + ": not a structure model file");
  }
  StructModel m;
  try {
    m.config = WlConfig::FromJson(h.at("config"));
    for (const auto& e : h.at("wl_vocab")) {
      m.wl_vocab.push_back({e.at(0).get<uint64_t>(), e.at(1).get<int>(), e.at(2).get<uint64_t>()});
    }
    m.doc_ids = h.at("doc_ids").get<std::vector<std::string>>();
    const size_t dim = static_cast<size_t>(m.config.dim);
    size_t offset = 0;
    m.out_subgraphs = Matrix(m.wl_vocab.size(), dim);
    m.out_subgraphs.data = ReadFloats(file.payload, offset, m.wl_vocab.size() * dim);
    m.graph_vectors = Matrix(m.doc_ids.size(), dim);
    m.graph_vectors.data = ReadFloats(file.payload, offset, m.doc_ids.size() * dim);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": bad structure model header: " + e.what());
  }
  m.RebuildIndex();
  return m;
}

}  // namespace nnreverse
