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

#include "nnreverse/asm_lang.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <unordered_set>

#include "nnreverse/error.hpp"
#include "nnreverse/util.hpp"

namespace nnreverse {

namespace {

bool IsSpace(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view Trim(std::string_view s) {
  while (!s.empty() && IsSpace(s.front())) s.remove_prefix(1);
  while (!s.empty() && IsSpace(s.back())) s.remove_suffix(1);
  return s;
}

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string_view> SplitWords(std::string_view s) {
  std::vector<std::string_view> words;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && IsSpace(s[i])) ++i;
    size_t start = i;
    while (i < s.size() && !IsSpace(s[i])) ++i;
    if (i > start) words.push_back(s.substr(start, i - start));
  }
  return words;
}

// Splits on commas that are not nested inside [] or {}.
std::vector<std::string_view> SplitOperands(std::string_view s) {
  std::vector<std::string_view> parts;
  int depth = 0;
  size_t start = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '[' || c == '{') ++depth;
    if ((c == ']' || c == '}') && depth > 0) --depth;
    if (c == ',' && depth == 0) {
      parts.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  parts.push_back(s.substr(start));
  return parts;
}

// Parses a signed decimal or 0x-hex literal. Sets `magnitude_overflow` when
// the digits do not fit in 64 bits.
bool ParseInteger(std::string_view text, bool& negative, uint64_t& magnitude,
                  bool& overflow) {
  negative = false;
  overflow = false;
  magnitude = 0;
  if (!text.empty() && text.front() == '-') {
    negative = true;
    text.remove_prefix(1);
  }
  unsigned base = 10;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    base = 16;
    text.remove_prefix(2);
  }
  if (text.empty()) return false;
  for (char c : text) {
    unsigned digit;
    if (c >= '0' && c <= '9') {
      digit = static_cast<unsigned>(c - '0');
    } else if (base == 16 && c >= 'a' && c <= 'f') {
      digit = static_cast<unsigned>(c - 'a' + 10);
    } else if (base == 16 && c >= 'A' && c <= 'F') {
      digit = static_cast<unsigned>(c - 'A' + 10);
    } else {
      return false;
    }
    if (magnitude > (UINT64_MAX - digit) / base) overflow = true;
    if (!overflow) magnitude = magnitude * base + digit;
  }
  return true;
}

void EmitOperand(std::string_view raw, std::vector<Token>& out) {
  std::string text = Lower(Trim(raw));
  if (text.empty()) return;
  if (text.front() == '#') text.erase(0, 1);
  while (!text.empty() && (text.back() == '!' || text.back() == ':')) text.pop_back();
  if (text.empty() || text == "ptr") return;
  out.push_back(Token{TokenRole::kOperand, BlurValue(text)});
}

// "[rax+rcx*4-0x10]" -> rax, rcx, 4, -16. Commas and whitespace inside the
// brackets (ARM "[x1, #16]") separate terms as well.
void EmitMemory(std::string_view expr, std::vector<Token>& out) {
  bool negative = false;
  size_t i = 0;
  while (i < expr.size()) {
    char c = expr[i];
    if (c == '+' || c == ',' || IsSpace(c)) {
      ++i;
      continue;
    }
    if (c == '-') {
      negative = true;
      ++i;
      continue;
    }
    size_t start = i;
    while (i < expr.size() && expr[i] != '+' && expr[i] != '-' && expr[i] != ',' &&
           !IsSpace(expr[i])) {
      ++i;
    }
    std::string_view term = expr.substr(start, i - start);
    size_t star = term.find('*');
    if (star != std::string_view::npos) {
      EmitOperand(term.substr(0, star), out);
      EmitOperand(term.substr(star + 1), out);
    } else if (negative) {
      std::string signed_term = "-";
      std::string_view body = term;
      if (!body.empty() && body.front() == '#') body.remove_prefix(1);
      signed_term.append(body);
      bool neg, ovf;
      uint64_t mag;
      if (ParseInteger(Lower(signed_term), neg, mag, ovf)) {
        EmitOperand(signed_term, out);
      } else {
        EmitOperand(term, out);
      }
    } else {
      EmitOperand(term, out);
    }
    negative = false;
  }
}

}  // namespace

std::string Token::Key() const {
  return (role == TokenRole::kOpcode ? "op:" : "arg:") + text;
}

std::string BlurValue(std::string_view literal) {
  bool negative, overflow;
  uint64_t magnitude;
  if (!ParseInteger(literal, negative, magnitude, overflow)) {
    return std::string(literal);
  }
  if (overflow || magnitude >= 1000) return "large";
  if (magnitude == 0) return "0";
  return (negative ? "-" : "") + std::to_string(magnitude);
}

ParsedInstruction ParseInstruction(std::string_view line) {
  std::string_view body = Trim(line);
  if (body.empty()) throw DataError("cannot parse an empty instruction");
  size_t split = 0;
  while (split < body.size() && !IsSpace(body[split])) ++split;
  ParsedInstruction parsed;
  parsed.opcode = Token{TokenRole::kOpcode, Lower(body.substr(0, split))};
  std::string_view rest = Trim(body.substr(split));
  if (rest.empty()) return parsed;
  for (std::string_view operand : SplitOperands(rest)) {
    operand = Trim(operand);
    size_t open = operand.find('[');
    if (open == std::string_view::npos) {
      for (std::string_view word : SplitWords(operand)) {
        EmitOperand(word, parsed.operands);
      }
      continue;
    }
    for (std::string_view word : SplitWords(operand.substr(0, open))) {
      EmitOperand(word, parsed.operands);
    }
    size_t close = operand.find(']', open);
    std::string_view inside = close == std::string_view::npos
                                  ? operand.substr(open + 1)
                                  : operand.substr(open + 1, close - open - 1);
    EmitMemory(inside, parsed.operands);
  }
  return parsed;
}

std::string RenderInstruction(std::string_view line) {
  std::string out;
  for (std::string_view word : SplitWords(line)) {
    if (!out.empty()) out.push_back(' ');
    out.append(word);
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::pair<std::string, uint64_t>> counted) {
  std::sort(counted.begin(), counted.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (auto& [key, count] : counted) {
    keys_.push_back(std::move(key));
    counts_.push_back(count);
  }
  for (std::string_view special : {kLargeKey, kNoOperandKey, kUnkKey}) {
    if (std::find(keys_.begin(), keys_.end(), special) == keys_.end()) {
      keys_.emplace_back(special);
      counts_.push_back(0);
    }
  }
  Reindex();
}

void Vocabulary::Reindex() {
  index_.clear();
  for (size_t i = 0; i < keys_.size(); ++i) {
    if (!index_.emplace(keys_[i], static_cast<int32_t>(i)).second) {
      throw DataError("duplicate vocabulary key '" + keys_[i] + "'");
    }
  }
  auto find = [&](std::string_view key) {
    auto it = index_.find(std::string(key));
    if (it == index_.end()) throw DataError("vocabulary lacks special " + std::string(key));
    return it->second;
  };
  large_ = find(kLargeKey);
  unk_ = find(kUnkKey);
  no_operand_ = find(kNoOperandKey);
}

int32_t Vocabulary::Lookup(std::string_view key) const {
  auto it = index_.find(std::string(key));
  return it == index_.end() ? unk_ : it->second;
}

bool Vocabulary::Contains(std::string_view key) const {
  return index_.count(std::string(key)) != 0;
}

uint64_t Vocabulary::Hash() const {
  uint64_t h = kFnvOffset;
  for (size_t i = 0; i < keys_.size(); ++i) {
    h = Fnv1a64(keys_[i], h);
    h = Fnv1a64("\x1f" + std::to_string(counts_[i]) + "\x1e", h);
  }
  return h;
}

nlohmann::json Vocabulary::ToJson() const {
  nlohmann::json entries = nlohmann::json::array();
  for (size_t i = 0; i < keys_.size(); ++i) entries.push_back({keys_[i], counts_[i]});
  return entries;
}

Vocabulary Vocabulary::FromJson(const nlohmann::json& j) {
  Vocabulary vocab;
  for (const auto& entry : j) {
    vocab.keys_.push_back(entry.at(0).get<std::string>());
    vocab.counts_.push_back(entry.at(1).get<uint64_t>());
  }
  vocab.Reindex();
  return vocab;
}

Vocabulary BuildVocab(const Corpus& train, uint64_t min_count) {
  if (train.functions.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
  std::map<std::string, uint64_t> counts;
  for (const auto& f : train.functions) {
    for (std::string_view line : f.InstructionStream()) {
      ParsedInstruction ins = ParseInstruction(line);
      ++counts[ins.opcode.Key()];
      for (const auto& op : ins.operands) ++counts[op.Key()];
    }
  }
  std::vector<std::pair<std::string, uint64_t>> kept;
  for (auto& [key, count] : counts) {
    if (count >= min_count) kept.emplace_back(key, count);
  }
  return Vocabulary(std::move(kept));
}

std::vector<EncodedInstruction> EncodeFunction(const Vocabulary& vocab,
                                               const AsmFunction& f) {
  std::vector<EncodedInstruction> encoded;
  for (std::string_view line : f.InstructionStream()) {
    ParsedInstruction ins = ParseInstruction(line);
    EncodedInstruction e;
    e.opcode = vocab.Lookup(ins.opcode.Key());
    for (const auto& op : ins.operands) e.operands.push_back(vocab.Lookup(op.Key()));
    encoded.push_back(std::move(e));
  }
  return encoded;
}

nlohmann::json OovReport::ToJson() const {
  return {{"version", 1},
          {"native_ratio", native_ratio},
          {"fine_ratio", fine_ratio},
          {"test_instructions", test_instructions},
          {"native_oov", native_oov},
          {"fine_oov", fine_oov}};
}

OovReport ComputeOovReport(const Vocabulary& vocab, const Corpus& train,
                           const Corpus& test) {
  std::unordered_set<std::string> seen;
  for (const auto& f : train.functions) {
    for (std::string_view line : f.InstructionStream()) seen.insert(RenderInstruction(line));
  }
  OovReport report;
  for (const auto& f : test.functions) {
    for (std::string_view line : f.InstructionStream()) {
      ++report.test_instructions;
      if (!seen.count(RenderInstruction(line))) ++report.native_oov;
      ParsedInstruction ins = ParseInstruction(line);
      bool unknown = !vocab.Contains(ins.opcode.Key());
      for (const auto& op : ins.operands) unknown = unknown || !vocab.Contains(op.Key());
      if (unknown) ++report.fine_oov;
    }
  }
  if (report.test_instructions == 0) throw DataError("OOV report needs a non-empty test corpus");
  const double n = static_cast<double>(report.test_instructions);
  report.native_ratio = static_cast<double>(report.native_oov) / n;
  report.fine_ratio = static_cast<double>(report.fine_oov) / n;
  return report;
}

}  // namespace nnreverse
