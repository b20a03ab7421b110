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

#ifndef NNREVERSE_MATCH_DB_HPP_
#define NNREVERSE_MATCH_DB_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "nnreverse/corpus.hpp"
#include "nnreverse/embed_struct.hpp"
#include "nnreverse/embed_text.hpp"

namespace nnreverse {

enum class DbMode { kFused, kTextOnly, kStructOnly };

std::string DbModeName(DbMode mode);
DbMode ParseDbMode(std::string_view name);  // "fused" | "text" | "struct"

// Concatenation of the L2-normalized text and structure vectors. A half
// whose norm is below 1e-12 is kept as zeros and marks the vector degenerate.
struct FusedVector {
  std::vector<double> values;
  bool degenerate = false;
};

FusedVector Fuse(std::span<const float> text_vec, std::span<const float> struct_vec);
FusedVector NormalizeVector(std::span<const float> v);

struct DbEntry {
  std::string function_id;
  std::string kernel_type;
  std::vector<double> vector;

  bool operator==(const DbEntry&) const = default;
};

struct EmbeddingDb {
  DbMode mode = DbMode::kFused;
  size_t width = 0;
  std::vector<DbEntry> entries;

  bool operator==(const EmbeddingDb&) const = default;
};

// Either model may be null when the mode does not need it.
EmbeddingDb BuildDb(const Corpus& train, const TextModel* text, const StructModel* structure,
                    DbMode mode);

struct MatchResult {
  std::string kernel_type;
  double similarity = 0.0;
  std::string neighbor_id;
  size_t neighbor_index = 0;
  bool degenerate = false;

  nlohmann::json ToJson() const;
};

// Exact argmax-cosine scan; ties go to the lowest entry index.
MatchResult Match(const EmbeddingDb& db, std::span<const double> query);

struct QueryVector {
  FusedVector fused;
  bool reused_stored = false;    // training function: stored vectors used
  bool unknown_structure = false;  // no known WL token
};

// Vector for `f` under `mode`. Functions the models were trained on use
// their stored doc/graph vectors; everything else is inferred.
QueryVector ComputeQueryVector(const AsmFunction& f, const TextModel* text,
                               const StructModel* structure, DbMode mode);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  uint64_t support = 0;
  uint64_t tp = 0;
  uint64_t fp = 0;
  uint64_t fn = 0;
};

struct EvalReport {
  std::map<std::string, ClassScores> per_class;
  ClassScores weighted;  // support-weighted over classes
  ClassScores macro;     // unweighted over classes in truth or predictions
  uint64_t total = 0;
  uint64_t correct = 0;
  std::string mode;

  nlohmann::json ToJson() const;
};

EvalReport ScorePredictions(const std::vector<std::string>& truth,
                            const std::vector<std::string>& predicted);

EvalReport Evaluate(const EmbeddingDb& db, const Corpus& test, const TextModel* text,
                    const StructModel* structure, DbMode mode);

void SaveDb(const EmbeddingDb& db, const std::filesystem::path& path);
EmbeddingDb LoadDb(const std::filesystem::path& path);

}  // namespace nnreverse

#endif  // NNREVERSE_MATCH_DB_HPP_
