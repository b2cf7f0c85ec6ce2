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

#include "erasehash/hash_layer.hpp"

#include <cmath>
#include <random>
#include <string>

#include "erasehash/errors.hpp"
#include "erasehash/ops.hpp"
#include "erasehash/random.hpp"
#include "erasehash/serialize.hpp"

namespace erasehash {
namespace {

constexpr std::uint32_t kDatabaseVersion = 1;

void check_bits(std::size_t bits) {
  if (bits < 1 || bits > kMaxBits) {
    throw ConfigError("code length " + std::to_string(bits) + " must lie in [1, " +
                      std::to_string(kMaxBits) + "]");
  }
}

}  // namespace

void HashParams::zero_grad() {
  weight.ensure_grad().zero_grad();
  bias.ensure_grad().zero_grad();
}

HashParams init_hash_layer(std::size_t bits, std::size_t embedding_size,
                           std::uint64_t seed) {
  check_bits(bits);
  if (embedding_size == 0) throw ConfigError("hash layer: embedding size must be >= 1");
  Rng rng(seed);
  const double limit = std::sqrt(6.0 / static_cast<double>(bits + embedding_size));
  std::uniform_real_distribution<double> dist(-limit, limit);
  HashParams params{Tensor({bits, embedding_size}), Tensor({bits})};
  for (double& v : params.weight.values()) v = dist(rng);
  return params;
}

Tensor hash_forward(const Tensor& embedding, const HashParams& params) {
  require_rank(embedding, 1, "hash_forward embedding");
  if (embedding.dim(0) != params.weight.dim(1)) {
    throw DimensionError("hash_forward: embedding of length " +
                         std::to_string(embedding.dim(0)) + " but W is " +
                         shape_string(params.weight.shape()));
  }
  Tensor pre = ops::matmul(params.weight, embedding.reshaped({embedding.size(), 1}));
  for (std::size_t j = 0; j < pre.size(); ++j) pre[j] += params.bias[j];
  return ops::tanh_act(pre.reshaped({pre.size()}));
}

Tensor hash_backward(std::span<const double> grad_code, const Tensor& embedding,
                     const Tensor& code, HashParams& params) {
  const std::size_t bits = params.bits();
  Tensor pre({bits});
  pre.ensure_grad();
  ops::tanh_backward(grad_code, code, pre);

  params.weight.ensure_grad();
  params.bias.ensure_grad();
  for (std::size_t j = 0; j < bits; ++j) params.bias.grad()[j] += pre.grad()[j];

  Tensor column = embedding.reshaped({embedding.size(), 1});
  column.ensure_grad();
  ops::matmul_backward(pre.grad(), params.weight, column);
  return Tensor({embedding.size()},
                std::vector<double>(column.grad().begin(), column.grad().end()));
}

SignCode binarize(std::span<const double> relaxed) {
  SignCode code(relaxed.size());
  for (std::size_t j = 0; j < relaxed.size(); ++j) code[j] = relaxed[j] >= 0.0 ? 1 : -1;
  return code;
}

std::size_t words_for(std::size_t bits) { return (bits + 63) / 64; }

std::vector<std::uint64_t> pack(std::span<const std::int8_t> code) {
  std::vector<std::uint64_t> words(words_for(code.size()), 0);
  for (std::size_t j = 0; j < code.size(); ++j) {
    if (code[j] == 1) words[j / 64] |= std::uint64_t{1} << (j % 64);
    else if (code[j] != -1)
      throw ConfigError("pack: code entry " + std::to_string(j) + " is not +-1");
  }
  return words;
}

SignCode unpack(std::span<const std::uint64_t> words, std::size_t bits) {
  if (words.size() != words_for(bits))
    throw DimensionError("unpack: word count does not match code length");
  SignCode code(bits);
  for (std::size_t j = 0; j < bits; ++j)
    code[j] = (words[j / 64] >> (j % 64)) & 1u ? 1 : -1;
  return code;
}

BitCodeMatrix::BitCodeMatrix(std::size_t count, std::size_t bits)
    : count_(count), bits_(bits), stride_(words_for(bits)), words_(count * stride_, 0) {
  check_bits(bits);
}

CodeView BitCodeMatrix::code(std::size_t i) const {
  if (i >= count_) throw DimensionError("code index out of range");
  return {std::span(words_).subspan(i * stride_, stride_), bits_};
}

SignCode BitCodeMatrix::unpacked(std::size_t i) const {
  return unpack(code(i).words, bits_);
}

void BitCodeMatrix::set_code(std::size_t i, std::span<const std::int8_t> code) {
  if (i >= count_) throw DimensionError("code index out of range");
  if (code.size() != bits_) throw DimensionError("set_code: code length mismatch");
  const auto words = pack(code);
  std::copy(words.begin(), words.end(), words_.begin() + static_cast<std::ptrdiff_t>(i * stride_));
}

void BitCodeMatrix::push_back(std::span<const std::int8_t> code) {
  if (code.size() != bits_) throw DimensionError("push_back: code length mismatch");
  const auto words = pack(code);
  words_.insert(words_.end(), words.begin(), words.end());
  ++count_;
}

void BitCodeMatrix::set_value(std::size_t i, std::size_t j, std::int8_t v) {
  const std::uint64_t bit = std::uint64_t{1} << (j % 64);
  std::uint64_t& word = words_[i * stride_ + j / 64];
  word = v == 1 ? (word | bit) : (word & ~bit);
}

Tensor BitCodeMatrix::to_dense() const {
  Tensor out({count_, bits_});
  for (std::size_t i = 0; i < count_; ++i)
    for (std::size_t j = 0; j < bits_; ++j) out.at(i, j) = value(i, j);
  return out;
}

BitCodeMatrix BitCodeMatrix::from_words(std::size_t count, std::size_t bits,
                                        std::vector<std::uint64_t> words) {
  BitCodeMatrix m(0, bits);
  if (words.size() != count * m.stride_)
    throw DimensionError("from_words: word count does not match n x k");
  if (bits % 64 != 0) {
    const std::uint64_t unused = ~((std::uint64_t{1} << (bits % 64)) - 1);
    for (std::size_t i = 0; i < count; ++i)
      if (words[i * m.stride_ + m.stride_ - 1] & unused)
        throw FormatError("packed codes have nonzero padding bits");
  }
  m.count_ = count;
  m.words_ = std::move(words);
  return m;
}

void save_hash_database(const HashDatabase& db, const std::filesystem::path& path) {
  if (db.labels.size() != db.codes.size())
    throw DimensionError("hash database: label count does not match code count");
  ByteWriter out;
  out.text("FGHV");
  out.u32(kDatabaseVersion);
  out.u32(static_cast<std::uint32_t>(db.codes.bits()));
  out.u32(static_cast<std::uint32_t>(db.codes.size()));
  for (std::uint64_t w : db.codes.words()) out.u64(w);
  for (int label : db.labels) out.i32(label);
  out.seal();
  write_file(path, out.bytes());
}

HashDatabase load_hash_database(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  ByteReader in(bytes);
  in.expect_magic("FGHV");
  const std::uint32_t version = in.u32();
  if (version != kDatabaseVersion)
    throw FormatError("hash database: unsupported version " + std::to_string(version));
  const std::uint32_t bits = in.u32();
  const std::uint32_t count = in.u32();
  if (bits < 1 || bits > kMaxBits) throw FormatError("hash database: bad code length");
  const std::size_t word_count = static_cast<std::size_t>(count) * words_for(bits);
  if (word_count > in.remaining() / 8) throw FormatError("malformed file: truncated codes");
  std::vector<std::uint64_t> words(word_count);
  for (auto& w : words) w = in.u64();
  HashDatabase db;
  db.labels.resize(count);
  for (auto& label : db.labels) label = in.i32();
  in.verify_seal();
  db.codes = BitCodeMatrix::from_words(count, bits, std::move(words));
  return db;
}

}  // namespace erasehash
