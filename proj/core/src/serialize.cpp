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

#include "erasehash/serialize.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "erasehash/errors.hpp"

namespace erasehash {

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const std::size_t chunk = std::min<std::size_t>(
        bytes.size() - offset, std::numeric_limits<uInt>::max());
    crc = ::crc32(crc, bytes.data() + offset, static_cast<uInt>(chunk));
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void ByteWriter::u32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::u64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::raw(std::span<const std::uint8_t> data) {
  bytes_.insert(bytes_.end(), data.begin(), data.end());
}

void ByteWriter::text(std::string_view s) {
  bytes_.insert(bytes_.end(), s.begin(), s.end());
}

void ByteWriter::prefixed_text(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  text(s);
}

void ByteWriter::tensor(const Tensor& t) {
  u32(static_cast<std::uint32_t>(t.rank()));
  for (std::size_t d : t.shape()) u32(static_cast<std::uint32_t>(d));
  for (double v : t.values()) f64(v);
}

void ByteWriter::seal() { u32(crc32(bytes_)); }

void ByteReader::need(std::size_t n) const {
  if (n > bytes_.size() - pos_) {
    throw FormatError("malformed file: truncated at byte " +
                      std::to_string(pos_) + " (needed " + std::to_string(n) +
                      " more bytes)");
  }
}

std::uint8_t ByteReader::u8() {
  need(1);
  return bytes_[pos_++];
}

std::uint32_t ByteReader::u32() {
  need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_++]} << (8 * i);
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes_[pos_++]} << (8 * i);
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::span<const std::uint8_t> ByteReader::raw(std::size_t n) {
  need(n);
  auto out = bytes_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::string ByteReader::text(std::size_t n) {
  auto data = raw(n);
  return std::string(data.begin(), data.end());
}

std::string ByteReader::prefixed_text() { return text(u32()); }

Tensor ByteReader::tensor() {
  const std::uint32_t rank = u32();
  if (rank > 8) throw FormatError("malformed file: tensor rank " + std::to_string(rank));
  Shape shape(rank);
  std::size_t count = 1;
  for (auto& d : shape) {
    d = u32();
    if (d != 0 && count > remaining() / d) {
      throw FormatError("malformed file: tensor larger than file");
    }
    count *= d;
  }
  need(count * 8);
  std::vector<double> values(count);
  for (auto& v : values) v = f64();
  return Tensor(std::move(shape), std::move(values));
}

void ByteReader::expect_magic(std::string_view magic) {
  if (text(magic.size()) != magic) {
    throw FormatError("malformed file: expected magic \"" + std::string(magic) + "\"");
  }
}

void ByteReader::verify_seal() {
  if (remaining() != 4) {
    throw FormatError("malformed file: " + std::to_string(remaining()) +
                      " trailing bytes where a 4-byte checksum was expected");
  }
  const std::uint32_t expected = crc32(bytes_.first(pos_));
  if (u32() != expected) throw ChecksumError("checksum mismatch: file is corrupted");
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                             text.size()));
}

}  // namespace erasehash
