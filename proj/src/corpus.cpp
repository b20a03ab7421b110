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

#include "nnreverse/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_set>

#include "nnreverse/error.hpp"
#include "nnreverse/util.hpp"

namespace nnreverse {

using nlohmann::json;

std::vector<std::string_view> AsmFunction::InstructionStream() const {
  std::vector<const BasicBlock*> order;
  order.reserve(blocks.size());
  for (const auto& b : blocks) order.push_back(&b);
  std::sort(order.begin(), order.end(),
            [](const BasicBlock* a, const BasicBlock* b) {
              return a->block_id < b->block_id;
            });
  std::vector<std::string_view> stream;
  for (const BasicBlock* b : order) {
    for (const auto& ins : b->instructions) stream.emplace_back(ins);
  }
  return stream;
}

size_t AsmFunction::InstructionCount() const {
  size_t n = 0;
  for (const auto& b : blocks) n += b.instructions.size();
  return n;
}

namespace {

template <typename T>
T Field(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw DataError(std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace

AsmFunction FunctionFromJson(const json& j) {
  if (!j.is_object()) throw DataError("function record is not an object");
  AsmFunction f;
  f.function_id = Field<std::string>(j, "function_id");
  f.symbol = Field<std::string>(j, "symbol");
  f.platform = Field<std::string>(j, "platform");
  f.opt_level = Field<int>(j, "opt_level");
  auto label = j.find("label");
  if (label != j.end() && !label->is_null()) {
    if (!label->is_string()) throw DataError("field 'label' must be string or null");
    f.label = label->get<std::string>();
  }
  auto blocks = j.find("blocks");
  if (blocks == j.end() || !blocks->is_array()) {
    throw DataError("missing field 'blocks'");
  }
  for (const auto& jb : *blocks) {
    BasicBlock b;
    b.block_id = Field<int64_t>(jb, "block_id");
    b.instructions = Field<std::vector<std::string>>(jb, "instructions");
    if (auto s = jb.find("stub"); s != jb.end()) b.stub = s->get<bool>();
    f.blocks.push_back(std::move(b));
  }
  auto edges = j.find("edges");
  if (edges == j.end() || !edges->is_array()) {
    throw DataError("missing field 'edges'");
  }
  for (const auto& e : *edges) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
        !e[1].is_number_integer()) {
      throw DataError("edge must be a pair of integers");
    }
    f.edges.emplace_back(e[0].get<int64_t>(), e[1].get<int64_t>());
  }
  return f;
}

json FunctionToJson(const AsmFunction& f) {
  json j;
  j["function_id"] = f.function_id;
  j["symbol"] = f.symbol;
  j["platform"] = f.platform;
  j["opt_level"] = f.opt_level;
  j["label"] = f.label ? json(*f.label) : json(nullptr);
  json blocks = json::array();
  for (const auto& b : f.blocks) {
    json jb;
    jb["block_id"] = b.block_id;
    jb["instructions"] = b.instructions;
    if (b.stub) jb["stub"] = true;
    blocks.push_back(std::move(jb));
  }
  j["blocks"] = std::move(blocks);
  json edges = json::array();
  for (const auto& [src, dst] : f.edges) edges.push_back({src, dst});
  j["edges"] = std::move(edges);
  return j;
}

void ValidateFunction(const AsmFunction& f) {
  const std::string where = "function '" + f.function_id + "': ";
  if (f.function_id.empty()) throw DataError("function with empty function_id");
  if (f.opt_level < 0 || f.opt_level > 4) {
    throw DataError(where + "opt_level " + std::to_string(f.opt_level) +
                    " outside [0,4]");
  }
  if (f.blocks.empty()) throw DataError(where + "no basic blocks");
  std::unordered_set<int64_t> ids;
  for (const auto& b : f.blocks) {
    if (b.block_id < 0) throw DataError(where + "negative block_id");
    if (!ids.insert(b.block_id).second) {
      throw DataError(where + "duplicate block_id " + std::to_string(b.block_id));
    }
    if (b.instructions.empty() && !b.stub) {
      throw DataError(where + "block " + std::to_string(b.block_id) +
                      " is empty but not flagged as a stub");
    }
    for (const auto& ins : b.instructions) {
      if (ins.find_first_not_of(" \t\r") == std::string::npos) {
        throw DataError(where + "empty instruction in block " +
                        std::to_string(b.block_id));
      }
    }
  }
  for (const auto& [src, dst] : f.edges) {
    if (!ids.count(src) || !ids.count(dst)) {
      throw DataError(where + "dangling edge (" + std::to_string(src) + "," +
                      std::to_string(dst) + ")");
    }
  }
}

void ValidateCorpus(const Corpus& corpus) {
  std::set<std::string> types(corpus.kernel_types.begin(),
                              corpus.kernel_types.end());
  std::unordered_set<std::string> seen;
  for (const auto& f : corpus.functions) {
    ValidateFunction(f);
    if (!seen.insert(f.function_id).second) {
      throw DataError("duplicate function_id '" + f.function_id + "'");
    }
    if (f.label && !types.count(*f.label)) {
      throw DataError("function '" + f.function_id + "': label '" + *f.label +
                      "' not declared in kernel_types");
    }
  }
  if (!(corpus.train_fraction > 0.0 && corpus.train_fraction < 1.0)) {
    throw DataError("train_fraction must lie in (0,1)");
  }
}

Corpus ParseCorpus(std::string_view text, std::string_view source) {
  Corpus corpus;
  bool have_header = false;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    const std::string where =
        std::string(source) + ":" + std::to_string(line_no) + ": ";
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(where + "malformed JSON: " + e.what());
    }
    try {
      if (!have_header) {
        if (!j.is_object() || !j.contains("kernel_types")) {
          throw DataError("first line must be the corpus header");
        }
        corpus.kernel_types = Field<std::vector<std::string>>(j, "kernel_types");
        int version = j.value("version", 1);
        if (version != 1) {
          throw DataError("unsupported corpus version " + std::to_string(version));
        }
        corpus.split_seed = j.value("split_seed", uint64_t{0});
        corpus.train_fraction = j.value("train_fraction", 0.8);
        have_header = true;
        continue;
      }
      corpus.functions.push_back(FunctionFromJson(j));
      ValidateFunction(corpus.functions.back());
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
  }
  if (!have_header) throw DataError(std::string(source) + ": missing header");
  ValidateCorpus(corpus);
  return corpus;
}

std::string SerializeCorpus(const Corpus& corpus) {
  json header;
  header["kernel_types"] = corpus.kernel_types;
  header["version"] = 1;
  header["split_seed"] = corpus.split_seed;
  header["train_fraction"] = corpus.train_fraction;
  std::string out = header.dump();
  out.push_back('\n');
  for (const auto& f : corpus.functions) {
    out += FunctionToJson(f).dump();
    out.push_back('\n');
  }
  return out;
}

Corpus LoadCorpus(const std::filesystem::path& path) {
  return ParseCorpus(ReadTextFile(path), path.string());
}

void SaveCorpus(const Corpus& corpus, const std::filesystem::path& path) {
  WriteTextFile(path, SerializeCorpus(corpus));
}

namespace {

// Number of training members for each group. Each share starts at its ideal
// f * n, is clamped so groups with two or more members keep one on each side,
// and is then nudged (largest remainder first) until the total equals
// round(f * N).
std::vector<size_t> AllocateTrainCounts(const std::vector<size_t>& sizes,
                                        double fraction, size_t target) {
  const size_t groups = sizes.size();
  std::vector<size_t> counts(groups);
  std::vector<double> remainders(groups);
  auto lo = [&](size_t g) -> size_t { return sizes[g] >= 2 ? 1 : 0; };
  auto hi = [&](size_t g) -> size_t {
    return sizes[g] >= 2 ? sizes[g] - 1 : sizes[g];
  };
  size_t total = 0;
  for (size_t g = 0; g < groups; ++g) {
    double ideal = fraction * static_cast<double>(sizes[g]);
    size_t c = static_cast<size_t>(std::floor(ideal));
    c = std::clamp(c, lo(g), hi(g));
    counts[g] = c;
    remainders[g] = ideal - static_cast<double>(c);
    total += c;
  }
  std::vector<size_t> order(groups);
  for (size_t g = 0; g < groups; ++g) order[g] = g;
  // Grow: largest remainder first, ties by group index.
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return remainders[a] > remainders[b];
  });
  for (bool relaxed : {false, true}) {
    while (total < target) {
      bool moved = false;
      for (size_t g : order) {
        size_t cap = relaxed ? sizes[g] : hi(g);
        if (total < target && counts[g] < cap) {
          ++counts[g];
          ++total;
          moved = true;
        }
      }
      if (!moved) break;
    }
  }
  // Shrink: smallest remainder first.
  std::reverse(order.begin(), order.end());
  for (bool relaxed : {false, true}) {
    while (total > target) {
      bool moved = false;
      for (size_t g : order) {
        size_t floor_count = relaxed ? 0 : lo(g);
        if (total > target && counts[g] > floor_count) {
          --counts[g];
          --total;
          moved = true;
        }
      }
      if (!moved) break;
    }
  }
  return counts;
}

}  // namespace

CorpusSplit SplitCorpus(const Corpus& corpus, bool stratify) {
  const size_t n = corpus.functions.size();
  if (n == 0) throw DataError("cannot split an empty corpus");
  const size_t target =
      static_cast<size_t>(std::llround(corpus.train_fraction * static_cast<double>(n)));

  // Group member indices. Without stratification there is one group.
  std::map<std::string, std::vector<size_t>> by_label;
  std::vector<size_t> unlabeled;
  bool any_label = false;
  for (size_t i = 0; i < n; ++i) {
    const auto& label = corpus.functions[i].label;
    if (stratify && label) {
      by_label[*label].push_back(i);
      any_label = true;
    } else {
      unlabeled.push_back(i);
    }
  }
  if (stratify && !any_label) {
    throw DataError("stratified split requested but no function is labeled");
  }
  std::vector<std::vector<size_t>> groups;
  for (auto& [label, members] : by_label) groups.push_back(std::move(members));
  if (!unlabeled.empty()) groups.push_back(std::move(unlabeled));

  Rng rng(corpus.split_seed);
  std::vector<size_t> sizes;
  for (auto& g : groups) {
    rng.Shuffle(g);
    sizes.push_back(g.size());
  }
  std::vector<size_t> counts =
      AllocateTrainCounts(sizes, corpus.train_fraction, target);

  std::vector<bool> in_train(n, false);
  for (size_t g = 0; g < groups.size(); ++g) {
    for (size_t k = 0; k < counts[g]; ++k) in_train[groups[g][k]] = true;
  }
  CorpusSplit split;
  for (Corpus* side : {&split.train, &split.test}) {
    side->kernel_types = corpus.kernel_types;
    side->split_seed = corpus.split_seed;
    side->train_fraction = corpus.train_fraction;
  }
  for (size_t i = 0; i < n; ++i) {
    (in_train[i] ? split.train : split.test).functions.push_back(corpus.functions[i]);
  }
  return split;
}

uint64_t SplitChecksum(const CorpusSplit& split) {
  uint64_t h = kFnvOffset;
  for (const auto& f : split.train.functions) h = Fnv1a64(f.function_id + "\x01", h);
  h = Fnv1a64("|", h);
  for (const auto& f : split.test.functions) h = Fnv1a64(f.function_id + "\x01", h);
  return h;
}

}  // namespace nnreverse
