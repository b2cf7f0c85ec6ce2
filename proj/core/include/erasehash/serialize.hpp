// Copyright 2026 The erasehash Authors.
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

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "erasehash/tensor.hpp"

namespace erasehash {

using Bytes = std::vector<std::uint8_t>;

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

// Little-endian append-only encoder.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v);
  void raw(std::span<const std::uint8_t> data);
  void text(std::string_view s);
  // u32 length followed by the bytes of `s`.
  void prefixed_text(std::string_view s);
  // u32 rank and dims, then the raw f64 payload.
  void tensor(const Tensor& t);
  // Appends the CRC32 of everything written so far.
  void seal();

  const Bytes& bytes() const { return bytes_; }
  Bytes take() { return std::move(bytes_); }

 private:
  Bytes bytes_;
};

// Bounds-checked little-endian decoder; running past the end throws
// FormatError.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64();
  std::span<const std::uint8_t> raw(std::size_t n);
  std::string text(std::size_t n);
  std::string prefixed_text();
  Tensor tensor();
  void expect_magic(std::string_view magic);
  // Requires exactly the 4-byte CRC32 to remain and checks it against every
  // byte before it.
  void verify_seal();

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const;

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace erasehash
