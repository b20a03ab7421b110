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

#include "nnreverse/util.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "nnreverse/error.hpp"

namespace nnreverse {

static_assert(std::endian::native == std::endian::little,
              "blob formats assume a little-endian host");

void WriteBlobFile(const std::filesystem::path& path,
                   const nlohmann::json& header, std::string_view payload) {
  std::string text = header.dump();
  text.push_back('\n');
  text.append(payload);
  WriteTextFile(path, text);
}

BlobFile ReadBlobFile(const std::filesystem::path& path) {
  std::string bytes = ReadTextFile(path);
  size_t newline = bytes.find('\n');
  if (newline == std::string::npos) {
    throw DataError(path.string() + ": missing header line");
  }
  BlobFile file;
  try {
    file.header = nlohmann::json::parse(bytes.substr(0, newline));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": bad header: " + e.what());
  }
  file.payload = bytes.substr(newline + 1);
  return file;
}

void AppendFloats(std::string& out, std::span<const float> values) {
  size_t start = out.size();
  out.resize(start + values.size_bytes());
  std::memcpy(out.data() + start, values.data(), values.size_bytes());
}

void AppendDoubles(std::string& out, std::span<const double> values) {
  size_t start = out.size();
  out.resize(start + values.size_bytes());
  std::memcpy(out.data() + start, values.data(), values.size_bytes());
}

namespace {

template <typename T>
std::vector<T> ReadValues(const std::string& payload, size_t& offset,
                          size_t count) {
  size_t bytes = count * sizeof(T);
  if (offset > payload.size() || payload.size() - offset < bytes) {
    throw DataError("blob truncated: need " + std::to_string(bytes) +
                    " bytes at offset " + std::to_string(offset));
  }
  std::vector<T> values(count);
  std::memcpy(values.data(), payload.data() + offset, bytes);
  offset += bytes;
  return values;
}

}  // namespace

std::vector<float> ReadFloats(const std::string& payload, size_t& offset,
                              size_t count) {
  return ReadValues<float>(payload, offset, count);
}

std::vector<double> ReadDoubles(const std::string& payload, size_t& offset,
                                size_t count) {
  return ReadValues<double>(payload, offset, count);
}

void WriteTextFile(const std::filesystem::path& path, std::string_view text) {
  std::filesystem::path partial = path;
  partial += ".partial";
  {
    std::ofstream out(partial, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + partial.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw DataError("write failed: " + partial.string());
  }
  std::filesystem::rename(partial, path);
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string Hex64(uint64_t value) {
  static const char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = kDigits[value & 0xf];
    value >>= 4;
  }
  return out;
}

}  // namespace nnreverse
