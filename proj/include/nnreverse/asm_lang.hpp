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

#ifndef NNREVERSE_ASM_LANG_HPP_
#define NNREVERSE_ASM_LANG_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "nnreverse/corpus.hpp"

namespace nnreverse {

enum class TokenRole { kOpcode, kOperand };

struct Token {
  TokenRole role = TokenRole::kOperand;
  std::string text;

  // Role-prefixed vocabulary key: "op:<text>" or "arg:<text>".
  std::string Key() const;
  bool operator==(const Token&) const = default;
};

struct ParsedInstruction {
  Token opcode;
  std::vector<Token> operands;
};

// Numeric literals below 1000 in magnitude are kept (rendered in decimal);
// anything larger becomes "large". Input that is not a decimal or 0x-hex
// integer is returned unchanged.
std::string BlurValue(std::string_view literal);

// Splits "mov rax, [rbx+0x73ff]" into opcode "mov" and operands
// ["rax", "rbx", "large"]. Memory expressions are broken into their
// register/displacement/scale parts, size keywords ("qword") are kept as
// tokens and the "ptr" noise word is dropped. Throws DataError for a blank
// line.
ParsedInstruction ParseInstruction(std::string_view line);

// Whitespace-collapsed form of an instruction, used as the "native"
// whole-instruction token.
std::string RenderInstruction(std::string_view line);

class Vocabulary {
 public:
  static constexpr std::string_view kLargeKey = "arg:large";
  static constexpr std::string_view kUnkKey = "<unk>";
  static constexpr std::string_view kNoOperandKey = "<no_operand>";

  Vocabulary() = default;

  // `counted` holds (key, count) pairs; the constructor orders them by
  // descending count then key and appends whichever specials are missing.
  explicit Vocabulary(std::vector<std::pair<std::string, uint64_t>> counted);

  int32_t Lookup(std::string_view key) const;  // UNK when absent
  bool Contains(std::string_view key) const;
  const std::string& KeyAt(int32_t index) const { return keys_[static_cast<size_t>(index)]; }
  uint64_t CountAt(int32_t index) const { return counts_[static_cast<size_t>(index)]; }
  size_t size() const { return keys_.size(); }
  const std::vector<uint64_t>& counts() const { return counts_; }

  int32_t large() const { return large_; }
  int32_t unk() const { return unk_; }
  int32_t no_operand() const { return no_operand_; }

  uint64_t Hash() const;
  nlohmann::json ToJson() const;
  static Vocabulary FromJson(const nlohmann::json& j);

  bool operator==(const Vocabulary& other) const {
    return keys_ == other.keys_ && counts_ == other.counts_;
  }

 private:
  void Reindex();

  std::vector<std::string> keys_;
  std::vector<uint64_t> counts_;
  std::unordered_map<std::string, int32_t> index_;
  int32_t large_ = -1;
  int32_t unk_ = -1;
  int32_t no_operand_ = -1;
};

// Tokens with fewer than `min_count` occurrences are left out and resolve to
// UNK at lookup time.
Vocabulary BuildVocab(const Corpus& train, uint64_t min_count = 1);

// Vocabulary indices for one instruction. `operands` is empty for
// zero-operand instructions; consumers substitute NO_OPERAND.
struct EncodedInstruction {
  int32_t opcode = 0;
  std::vector<int32_t> operands;
};

std::vector<EncodedInstruction> EncodeFunction(const Vocabulary& vocab,
                                               const AsmFunction& f);

struct OovReport {
  double native_ratio = 0.0;
  double fine_ratio = 0.0;
  uint64_t test_instructions = 0;
  uint64_t native_oov = 0;
  uint64_t fine_oov = 0;

  nlohmann::json ToJson() const;
};

OovReport ComputeOovReport(const Vocabulary& vocab, const Corpus& train,
                           const Corpus& test);

}  // namespace nnreverse

#endif  // NNREVERSE_ASM_LANG_HPP_
