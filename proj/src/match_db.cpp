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

#include "nnreverse/match_db.hpp"

#include <cmath>
#include <set>

#include "nnreverse/error.hpp"
#include "nnreverse/util.hpp"

namespace nnreverse {

using nlohmann::json;

std::string DbModeName(DbMode mode) {
  switch (mode) {
    case DbMode::kFused:
      return "fused";
    case DbMode::kTextOnly:
      return "text";
    case DbMode::kStructOnly:
      return "struct";
  }
  return "fused";
}

DbMode ParseDbMode(std::string_view name) {
  if (name == "fused") return DbMode::kFused;
  if (name == "text" || name == "text_only") return DbMode::kTextOnly;
  if (name == "struct" || name == "struct_only") return DbMode::kStructOnly;
  throw ConfigError("unknown mode '" + std::string(name) + "'");
}

namespace {

constexpr double kZeroNorm = 1e-12;

bool AppendNormalized(std::span<const float> v, std::vector<double>& out) {
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * x;
  double norm = std::sqrt(sq);
  if (norm < kZeroNorm) {
    out.insert(out.end(), v.size(), 0.0);
    return false;
  }
  for (float x : v) out.push_back(static_cast<double>(x) / norm);
  return true;
}

}  // namespace

FusedVector NormalizeVector(std::span<const float> v) {
  FusedVector out;
  out.values.reserve(v.size());
  out.degenerate = !AppendNormalized(v, out.values);
  return out;
}

FusedVector Fuse(std::span<const float> text_vec, std::span<const float> struct_vec) {
  if (text_vec.size() != struct_vec.size()) {
    throw DataError("fuse: text width " + std::to_string(text_vec.size()) +
                    " != structure width " + std::to_string(struct_vec.size()));
  }
  FusedVector out;
  out.values.reserve(text_vec.size() * 2);
  bool text_ok = AppendNormalized(text_vec, out.values);
  bool struct_ok = AppendNormalized(struct_vec, out.values);
  out.degenerate = !text_ok || !struct_ok;
  return out;
}

namespace {

FusedVector Combine(DbMode mode, std::span<const float> text_vec,
                    std::span<const float> struct_vec) {
  switch (mode) {
    case DbMode::kFused:
      return Fuse(text_vec, struct_vec);
    case DbMode::kTextOnly:
      return NormalizeVector(text_vec);
    case DbMode::kStructOnly:
      return NormalizeVector(struct_vec);
  }
  return {};
}

void RequireModels(DbMode mode, const TextModel* text, const StructModel* structure) {
  if (mode != DbMode::kStructOnly && text == nullptr) {
    throw ConfigError("mode " + DbModeName(mode) + " needs a text model");
  }
  if (mode != DbMode::kTextOnly && structure == nullptr) {
    throw ConfigError("mode " + DbModeName(mode) + " needs a structure model");
  }
}

}  // namespace

EmbeddingDb BuildDb(const Corpus& train, const TextModel* text, const StructModel* structure,
                    DbMode mode) {
  RequireModels(mode, text, structure);
  EmbeddingDb db;
  db.mode = mode;
  std::span<const float> none;
  for (const auto& f : train.functions) {
    if (!f.label) throw DataError("build_db: function '" + f.function_id + "' is unlabeled");
    std::span<const float> tv = none, sv = none;
    if (text != nullptr && mode != DbMode::kStructOnly) {
      auto stored = text->StoredVector(f.function_id);
      if (!stored) throw DataError("text model has no vector for '" + f.function_id + "'");
      tv = *stored;
    }
    if (structure != nullptr && mode != DbMode::kTextOnly) {
      auto stored = structure->StoredVector(f.function_id);
      if (!stored) throw DataError("structure model has no vector for '" + f.function_id + "'");
      sv = *stored;
    }
    FusedVector v = Combine(mode, tv, sv);
    if (db.entries.empty()) {
      db.width = v.values.size();
    } else if (v.values.size() != db.width) {
      throw DataError("build_db: non-uniform vector widths");
    }
    db.entries.push_back({f.function_id, *f.label, std::move(v.values)});
  }
  return db;
}

json MatchResult::ToJson() const {
  return {{"version", 1},
          {"kernel_type", kernel_type},
          {"similarity", similarity},
          {"neighbor_id", neighbor_id},
          {"neighbor_index", neighbor_index},
          {"degenerate", degenerate}};
}

MatchResult Match(const EmbeddingDb& db, std::span<const double> query) {
  if (db.entries.empty()) throw DataError("match: empty database");
  if (query.size() != db.width) {
    throw DataError("match: query width " + std::to_string(query.size()) + " != db width " +
                    std::to_string(db.width));
  }
  double qn = 0.0;
  for (double x : query) qn += x * x;
  qn = std::sqrt(qn);
  MatchResult result;
  if (qn < kZeroNorm) {
    result.kernel_type = db.entries[0].kernel_type;
    result.neighbor_id = db.entries[0].function_id;
    result.degenerate = true;
    return result;
  }
  double best = -2.0;
  size_t best_index = 0;
  for (size_t j = 0; j < db.entries.size(); ++j) {
    const auto& u = db.entries[j].vector;
    double dot = 0.0, un = 0.0;
    for (size_t i = 0; i < u.size(); ++i) {
      dot += query[i] * u[i];
      un += u[i] * u[i];
    }
    un = std::sqrt(un);
    double cosine = un < kZeroNorm ? 0.0 : dot / (qn * un);
    if (cosine > best) {
      best = cosine;
      best_index = j;
    }
  }
  result.kernel_type = db.entries[best_index].kernel_type;
  result.neighbor_id = db.entries[best_index].function_id;
  result.neighbor_index = best_index;
  result.similarity = best;
  return result;
}

QueryVector ComputeQueryVector(const AsmFunction& f, const TextModel* text,
                               const StructModel* structure, DbMode mode) {
  RequireModels(mode, text, structure);
  QueryVector q;
  std::vector<float> tv, sv;
  bool reused = true;
  if (mode != DbMode::kStructOnly) {
    if (auto stored = text->StoredVector(f.function_id)) {
      tv.assign(stored->begin(), stored->end());
    } else {
      tv = InferTextVector(*text, f);
      reused = false;
    }
  }
  if (mode != DbMode::kTextOnly) {
    if (auto stored = structure->StoredVector(f.function_id)) {
      sv.assign(stored->begin(), stored->end());
    } else {
      InferredStructVector inferred = InferStructVector(*structure, f);
      q.unknown_structure = inferred.unknown_tokens;
      sv = std::move(inferred.vector);
      reused = false;
    }
  }
  q.reused_stored = reused;
  q.fused = Combine(mode, tv, sv);
  return q;
}

namespace {

double F1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

json ScoresJson(const ClassScores& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1},
          {"support", s.support},     {"tp", s.tp},         {"fp", s.fp},
          {"fn", s.fn}};
}

}  // namespace

EvalReport ScorePredictions(const std::vector<std::string>& truth,
                            const std::vector<std::string>& predicted) {
  if (truth.size() != predicted.size()) throw DataError("score: length mismatch");
  if (truth.empty()) throw DataError("evaluate: empty test set");
  EvalReport report;
  std::set<std::string> labels(truth.begin(), truth.end());
  labels.insert(predicted.begin(), predicted.end());
  for (const auto& l : labels) report.per_class[l];
  for (size_t i = 0; i < truth.size(); ++i) {
    ++report.per_class[truth[i]].support;
    if (truth[i] == predicted[i]) {
      ++report.per_class[truth[i]].tp;
      ++report.correct;
    } else {
      ++report.per_class[truth[i]].fn;
      ++report.per_class[predicted[i]].fp;
    }
  }
  report.total = truth.size();
  const double n = static_cast<double>(report.total);
  const double k = static_cast<double>(report.per_class.size());
  for (auto& [label, s] : report.per_class) {
    s.precision = s.tp + s.fp > 0 ? static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp) : 0.0;
    s.recall = s.tp + s.fn > 0 ? static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fn) : 0.0;
    s.f1 = F1(s.precision, s.recall);
    const double w = static_cast<double>(s.support);
    report.weighted.precision += w * s.precision;
    report.weighted.recall += w * s.recall;
    report.weighted.f1 += w * s.f1;
    report.macro.precision += s.precision;
    report.macro.recall += s.recall;
    report.macro.f1 += s.f1;
    for (ClassScores* agg : {&report.weighted, &report.macro}) {
      agg->support += s.support;
      agg->tp += s.tp;
      agg->fp += s.fp;
      agg->fn += s.fn;
    }
  }
  for (double* v : {&report.weighted.precision, &report.weighted.recall, &report.weighted.f1}) {
    *v /= n;
  }
  for (double* v : {&report.macro.precision, &report.macro.recall, &report.macro.f1}) *v /= k;
  return report;
}

json EvalReport::ToJson() const {
  json classes = json::object();
  for (const auto& [label, s] : per_class) classes[label] = ScoresJson(s);
  return {{"version", 1},
          {"mode", mode},
          {"total", total},
          {"correct", correct},
          {"accuracy", total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total)},
          {"weighted", ScoresJson(weighted)},
          {"macro", ScoresJson(macro)},
          {"per_class", std::move(classes)}};
}

EvalReport Evaluate(const EmbeddingDb& db, const Corpus& test, const TextModel* text,
                    const StructModel* structure, DbMode mode) {
  if (test.functions.empty()) throw DataError("evaluate: empty test set");
  if (db.mode != mode) throw ConfigError("evaluate: database mode differs from requested mode");
  std::vector<std::string> truth, predicted;
  for (const auto& f : test.functions) {
    if (!f.label) throw DataError("evaluate: test function '" + f.function_id + "' is unlabeled");
    QueryVector q = ComputeQueryVector(f, text, structure, mode);
    truth.push_back(*f.label);
    predicted.push_back(Match(db, q.fused.values).kernel_type);
  }
  EvalReport report = ScorePredictions(truth, predicted);
  report.mode = DbModeName(mode);
  return report;
}

void SaveDb(const EmbeddingDb& db, const std::filesystem::path& path) {
  json header = {{"format", "nnreverse-db"}, {"version", 1},       {"mode", DbModeName(db.mode)},
                 {"width", db.width},        {"count", db.entries.size()}, {"dtype", "float64"}};
  std::string payload;
  for (const auto& e : db.entries) AppendDoubles(payload, e.vector);
  json table = json::array();
  for (const auto& e : db.entries) table.push_back({e.function_id, e.kernel_type});
  payload += table.dump();
  payload.push_back('\n');
  WriteBlobFile(path, header, payload);
}

EmbeddingDb LoadDb(const std::filesystem::path& path) {
  BlobFile file = ReadBlobFile(path);
  const json& h = file.header;
  if (h.value("format", "") != "nnreverse-db") throw DataError(path.string() + ": not a db file");
  EmbeddingDb db;
  try {
    db.mode = ParseDbMode(h.at("mode").get<std::string>());
    db.width = h.at("width").get<size_t>();
    const size_t count = h.at("count").get<size_t>();
    size_t offset = 0;
    std::vector<double> values = ReadDoubles(file.payload, offset, count * db.width);
    json table = json::parse(file.payload.substr(offset));
    if (table.size() != count) throw DataError(path.string() + ": entry table size mismatch");
    for (size_t i = 0; i < count; ++i) {
      DbEntry e;
      e.function_id = table[i].at(0).get<std::string>();
      e.kernel_type = table[i].at(1).get<std::string>();
      e.vector.assign(values.begin() + static_cast<std::ptrdiff_t>(i * db.width),
                      values.begin() + static_cast<std::ptrdiff_t>((i + 1) * db.width));
      db.entries.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": bad db file: " + e.what());
  }
  return db;
}

}  // namespace nnreverse
