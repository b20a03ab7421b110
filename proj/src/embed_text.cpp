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

#include "nnreverse/embed_text.hpp"

#include <algorithm>

#include "nnreverse/error.hpp"
#include "nnreverse/util.hpp"

namespace nnreverse {

using nlohmann::json;

void TextModelConfig::Validate() const {
  if (dim < 2 || dim % 2 != 0) throw ConfigError("text dim must be even and >= 2");
  if (context < 1) throw ConfigError("text context must be >= 1");
  if (negatives < 1) throw ConfigError("text negatives must be >= 1");
  if (epochs < 0 || infer_epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(lr_start > 0.0) || lr_end < 0.0) throw ConfigError("learning rates must be positive");
}

json TextModelConfig::ToJson() const {
  return {{"dim", dim},           {"context", context},   {"epochs", epochs},
          {"lr_start", lr_start}, {"lr_end", lr_end},     {"negatives", negatives},
          {"seed", seed},         {"infer_epochs", infer_epochs}};
}

TextModelConfig TextModelConfig::FromJson(const json& j) {
  TextModelConfig c;
  c.dim = j.value("dim", c.dim);
  c.context = j.value("context", c.context);
  c.epochs = j.value("epochs", c.epochs);
  c.lr_start = j.value("lr_start", c.lr_start);
  c.lr_end = j.value("lr_end", c.lr_end);
  c.negatives = j.value("negatives", c.negatives);
  c.seed = j.value("seed", c.seed);
  c.infer_epochs = j.value("infer_epochs", c.infer_epochs);
  return c;
}

std::optional<std::span<const float>> TextModel::StoredVector(
    const std::string& function_id) const {
  auto it = doc_index.find(function_id);
  if (it == doc_index.end()) return std::nullopt;
  return doc_vectors.Row(it->second);
}

bool TextModel::AllFinite() const {
  return in_opcode.AllFinite() && in_operand.AllFinite() && out_tokens.AllFinite() &&
         doc_vectors.AllFinite();
}

uint64_t TextModel::WeightsChecksum() const {
  return in_opcode.Checksum() ^ (in_operand.Checksum() * 3) ^ (out_tokens.Checksum() * 7);
}

void TextModel::RebuildIndex() {
  doc_index.clear();
  for (size_t i = 0; i < doc_ids.size(); ++i) doc_index.emplace(doc_ids[i], i);
}

namespace {

void AddInstruction(const TextModel& m, const EncodedInstruction& ins,
                    std::span<double> acc) {
  const size_t half = m.half();
  auto op = m.in_opcode.Row(static_cast<size_t>(ins.opcode));
  for (size_t j = 0; j < half; ++j) acc[j] += op[j];
  if (ins.operands.empty()) {
    auto row = m.in_operand.Row(static_cast<size_t>(m.vocab.no_operand()));
    for (size_t j = 0; j < half; ++j) acc[half + j] += row[j];
    return;
  }
  const double inv = 1.0 / static_cast<double>(ins.operands.size());
  for (int32_t a : ins.operands) {
    auto row = m.in_operand.Row(static_cast<size_t>(a));
    for (size_t j = 0; j < half; ++j) acc[half + j] += row[j] * inv;
  }
}

struct Window {
  size_t lo = 0;
  size_t hi = 0;  // inclusive
  size_t count = 0;  // doc vector + context instructions
};

Window ContextWindow(const TextModel& m, const TextExample& ex) {
  const size_t c = static_cast<size_t>(m.config.context);
  Window w;
  w.lo = ex.center >= c ? ex.center - c : 0;
  w.hi = std::min(ex.stream.size() - 1, ex.center + c);
  w.count = 1 + (w.hi - w.lo);
  return w;
}

std::vector<float> Hidden(const TextModel& m, std::span<const float> doc,
                          const TextExample& ex, const Window& w) {
  const size_t dim = static_cast<size_t>(m.config.dim);
  std::vector<double> acc(dim, 0.0);
  for (size_t j = 0; j < dim; ++j) acc[j] = doc[j];
  for (size_t k = w.lo; k <= w.hi; ++k) {
    if (k != ex.center) AddInstruction(m, ex.stream[k], acc);
  }
  std::vector<float> h(dim);
  const double inv = 1.0 / static_cast<double>(w.count);
  for (size_t j = 0; j < dim; ++j) h[j] = static_cast<float>(acc[j] * inv);
  return h;
}

size_t NegativesPerTarget(const TextExample& ex, size_t targets) {
  if (targets == 0) return 0;
  if (ex.negatives.size() % targets != 0) {
    throw ConfigError("negatives must be laid out per target");
  }
  return ex.negatives.size() / targets;
}

// Shared body of the training, frozen-inference and loss-only paths.
// `model` receives weight updates when non-null.
double RunExample(const TextModel& m, TextModel* model, std::span<float> doc,
                  const TextExample& ex, double lr, bool apply) {
  const auto targets = TextTargets(m.vocab, ex.stream[ex.center]);
  if (targets.empty()) return 0.0;
  const size_t per = NegativesPerTarget(ex, targets.size());
  const Window w = ContextWindow(m, ex);
  const std::vector<float> h = Hidden(m, doc, ex, w);
  const size_t dim = h.size();
  std::vector<double> grad(dim, 0.0);
  double loss = 0.0;
  for (size_t t = 0; t < targets.size(); ++t) {
    auto term = [&](int32_t row, bool positive) {
      if (model != nullptr) {
        loss += SgnsTermStep(h, model->out_tokens.Row(static_cast<size_t>(row)),
                             positive, lr, grad);
      } else {
        loss += SgnsTermFrozen(h, m.out_tokens.Row(static_cast<size_t>(row)),
                               positive, lr, grad);
      }
    };
    term(targets[t], true);
    for (size_t k = 0; k < per; ++k) {
      int32_t neg = ex.negatives[t * per + k];
      if (neg != targets[t]) term(neg, false);
    }
  }
  if (!apply) return loss;
  const double inv = 1.0 / static_cast<double>(w.count);
  for (size_t j = 0; j < dim; ++j) doc[j] += static_cast<float>(grad[j] * inv);
  if (model == nullptr) return loss;
  const size_t half = m.half();
  for (size_t k = w.lo; k <= w.hi; ++k) {
    if (k == ex.center) continue;
    const EncodedInstruction& ins = ex.stream[k];
    auto op = model->in_opcode.Row(static_cast<size_t>(ins.opcode));
    for (size_t j = 0; j < half; ++j) op[j] += static_cast<float>(grad[j] * inv);
    if (ins.operands.empty()) {
      auto row = model->in_operand.Row(static_cast<size_t>(m.vocab.no_operand()));
      for (size_t j = 0; j < half; ++j) row[j] += static_cast<float>(grad[half + j] * inv);
      continue;
    }
    const double share = inv / static_cast<double>(ins.operands.size());
    for (int32_t a : ins.operands) {
      auto row = model->in_operand.Row(static_cast<size_t>(a));
      for (size_t j = 0; j < half; ++j) row[j] += static_cast<float>(grad[half + j] * share);
    }
  }
  return loss;
}

void DrawNegatives(const NoiseSampler& sampler, Rng& rng, size_t count,
                   std::vector<int32_t>& out) {
  out.resize(count);
  for (auto& n : out) n = sampler.Sample(rng);
}

double FitDoc(const TextModel& m, std::span<const EncodedInstruction> stream,
              std::span<float> doc, int epochs, Rng& rng, const NoiseSampler& sampler) {
  const uint64_t total = static_cast<uint64_t>(epochs) * stream.size();
  uint64_t done = 0;
  std::vector<int32_t> negatives;
  double last = 0.0;
  for (int e = 0; e < epochs; ++e) {
    for (size_t c = 0; c < stream.size(); ++c) {
      const double lr = LinearRate(m.config.lr_start, m.config.lr_end, done++, total);
      size_t targets = TextTargets(m.vocab, stream[c]).size();
      DrawNegatives(sampler, rng, targets * static_cast<size_t>(m.config.negatives), negatives);
      TextExample ex{stream, c, negatives};
      last += RunExample(m, nullptr, doc, ex, lr, true);
    }
  }
  return last;
}

}  // namespace

std::vector<int32_t> TextTargets(const Vocabulary& vocab, const EncodedInstruction& ins) {
  std::vector<int32_t> targets;
  if (ins.opcode != vocab.unk()) targets.push_back(ins.opcode);
  for (int32_t a : ins.operands) {
    if (a != vocab.unk()) targets.push_back(a);
  }
  return targets;
}

std::vector<float> InstructionVector(const TextModel& model, const EncodedInstruction& ins) {
  std::vector<double> acc(static_cast<size_t>(model.config.dim), 0.0);
  AddInstruction(model, ins, acc);
  return std::vector<float>(acc.begin(), acc.end());
}

std::vector<float> InstructionVector(const TextModel& model, const ParsedInstruction& ins) {
  EncodedInstruction e;
  e.opcode = model.vocab.Lookup(ins.opcode.Key());
  for (const auto& op : ins.operands) e.operands.push_back(model.vocab.Lookup(op.Key()));
  return InstructionVector(model, e);
}

double TextExampleLoss(const TextModel& model, std::span<const float> doc,
                       const TextExample& example) {
  std::vector<float> scratch(doc.begin(), doc.end());
  return RunExample(model, nullptr, scratch, example, 0.0, false);
}

double TextExampleStep(TextModel& model, std::span<float> doc, const TextExample& example,
                       double lr, bool update_weights) {
  return RunExample(model, update_weights ? &model : nullptr, doc, example, lr, true);
}

double TextDocStep(const TextModel& model, std::span<float> doc, const TextExample& example,
                   double lr) {
  return RunExample(model, nullptr, doc, example, lr, true);
}

TextModel TrainTextModel(const Corpus& train, const Vocabulary& vocab,
                         const TextModelConfig& config, TrainingLog* log) {
  config.Validate();
  if (train.functions.empty()) throw DataError("cannot train on an empty corpus");
  TextModel m;
  m.config = config;
  m.vocab = vocab;
  const size_t dim = static_cast<size_t>(config.dim);
  const size_t v = vocab.size();
  m.in_opcode = Matrix(v, dim / 2);
  m.in_operand = Matrix(v, dim / 2);
  m.out_tokens = Matrix(v, dim);
  m.doc_vectors = Matrix(train.functions.size(), dim);
  Rng rng(config.seed);
  const double bound = 0.5 / static_cast<double>(dim);
  m.in_opcode.FillUniform(rng, -bound, bound);
  m.in_operand.FillUniform(rng, -bound, bound);
  m.doc_vectors.FillUniform(rng, -bound, bound);
  for (const auto& f : train.functions) m.doc_ids.push_back(f.function_id);
  m.RebuildIndex();
  if (m.doc_index.size() != m.doc_ids.size()) throw DataError("duplicate function_id in training corpus");

  std::vector<std::vector<EncodedInstruction>> streams;
  uint64_t positions = 0;
  uint64_t known = 0;
  for (const auto& f : train.functions) {
    streams.push_back(EncodeFunction(vocab, f));
    positions += streams.back().size();
    for (const auto& ins : streams.back()) known += TextTargets(vocab, ins).size();
  }
  if (known == 0) throw DataError("vocabulary does not cover the training corpus");
  NoiseSampler sampler(vocab.counts());

  const uint64_t total = positions * static_cast<uint64_t>(config.epochs);
  uint64_t done = 0;
  std::vector<size_t> order(streams.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<int32_t> negatives;
  for (int e = 0; e < config.epochs; ++e) {
    rng.Shuffle(order);
    double epoch_loss = 0.0;
    for (size_t fi : order) {
      const auto& stream = streams[fi];
      auto doc = m.doc_vectors.Row(fi);
      for (size_t c = 0; c < stream.size(); ++c) {
        const double lr = LinearRate(config.lr_start, config.lr_end, done++, total);
        size_t targets = TextTargets(vocab, stream[c]).size();
        DrawNegatives(sampler, rng, targets * static_cast<size_t>(config.negatives), negatives);
        TextExample ex{stream, c, negatives};
        epoch_loss += RunExample(m, &m, doc, ex, lr, true);
      }
    }
    if (log != nullptr) {
      log->epoch_mean_loss.push_back(positions == 0 ? 0.0
                                                    : epoch_loss / static_cast<double>(positions));
    }
  }
  // Re-fit every training doc vector against the final weights, exactly as
  // InferTextVector does for unseen functions, so stored and inferred vectors
  // live in the same space.
  for (size_t fi = 0; config.epochs > 0 && fi < train.functions.size(); ++fi) {
    std::vector<float> doc = InferTextVector(m, train.functions[fi]);
    std::copy(doc.begin(), doc.end(), m.doc_vectors.Row(fi).begin());
  }
  if (!m.AllFinite()) throw NumericError("text model diverged: non-finite weights");
  return m;
}

std::vector<float> InitialDocVector(const TextModelConfig& config,
                                    const std::string& function_id) {
  Rng rng(Fnv1a64(function_id) ^ config.seed);
  const double bound = 0.5 / static_cast<double>(config.dim);
  std::vector<float> doc(static_cast<size_t>(config.dim));
  for (float& x : doc) x = static_cast<float>(rng.Uniform(-bound, bound));
  return doc;
}

std::vector<float> InferTextVector(const TextModel& model, const AsmFunction& f) {
  const auto stream = EncodeFunction(model.vocab, f);
  if (stream.empty()) throw DataError("function '" + f.function_id + "' has no instructions");
  std::vector<float> doc = InitialDocVector(model.config, f.function_id);
  Rng rng(Fnv1a64(f.function_id, model.config.seed + 0x51ed));
  NoiseSampler sampler(model.vocab.counts());
  FitDoc(model, stream, doc, model.config.infer_epochs, rng, sampler);
  for (float x : doc) {
    if (!std::isfinite(x)) throw NumericError("non-finite inferred text vector");
  }
  return doc;
}

void SaveTextModel(const TextModel& model, const std::filesystem::path& path) {
  json header;
  header["format"] = "nnreverse-text-model";
  header["version"] = 1;
  header["config"] = model.config.ToJson();
  header["vocab"] = model.vocab.ToJson();
  header["vocab_hash"] = Hex64(model.vocab.Hash());
  header["doc_ids"] = model.doc_ids;
  header["dtype"] = "float32";
  header["blobs"] = json::array(
      {{{"name", "in_opcode"}, {"shape", {model.in_opcode.rows, model.in_opcode.cols}}},
       {{"name", "in_operand"}, {"shape", {model.in_operand.rows, model.in_operand.cols}}},
       {{"name", "out_tokens"}, {"shape", {model.out_tokens.rows, model.out_tokens.cols}}},
       {{"name", "doc_vectors"}, {"shape", {model.doc_vectors.rows, model.doc_vectors.cols}}}});
  std::string payload;
  AppendFloats(payload, model.in_opcode.data);
  AppendFloats(payload, model.in_operand.data);
  AppendFloats(payload, model.out_tokens.data);
  AppendFloats(payload, model.doc_vectors.data);
  WriteBlobFile(path, header, payload);
}

namespace {

Matrix ReadMatrix(const json& blob, const std::string& payload, size_t& offset) {
  Matrix m(blob.at("shape").at(0).get<size_t>(), blob.at("shape").at(1).get<size_t>());
  m.data = ReadFloats(payload, offset, m.rows * m.cols);
  return m;
}

}  // namespace

TextModel LoadTextModel(const std::filesystem::path& path) {
  BlobFile file = ReadBlobFile(path);
  const json& h = file.header;
  if (h.value("format", "") != "nnreverse-text-model") {
    throw DataError(path.string() + ": not a text model file");
  }
  TextModel m;
  try {
    m.config = TextModelConfig::FromJson(h.at("config"));
    m.vocab = Vocabulary::FromJson(h.at("vocab"));
    if (h.at("vocab_hash").get<std::string>() != Hex64(m.vocab.Hash())) {
      throw DataError("vocabulary hash mismatch");
    }
    m.doc_ids = h.at("doc_ids").get<std::vector<std::string>>();
    size_t offset = 0;
    const auto& blobs = h.at("blobs");
    m.in_opcode = ReadMatrix(blobs.at(0), file.payload, offset);
    m.in_operand = ReadMatrix(blobs.at(1), file.payload, offset);
    m.out_tokens = ReadMatrix(blobs.at(2), file.payload, offset);
    m.doc_vectors = ReadMatrix(blobs.at(3), file.payload, offset);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": bad text model header: " + e.what());
  }
  const size_t v = m.vocab.size();
  if (m.in_opcode.rows != v || m.in_operand.rows != v || m.out_tokens.rows != v ||
      m.doc_vectors.rows != m.doc_ids.size() ||
      m.out_tokens.cols != static_cast<size_t>(m.config.dim)) {
    throw DataError(path.string() + ": matrix shapes disagree with header");
  }
  m.RebuildIndex();
  return m;
}

}  // namespace nnreverse
