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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "erasehash/tensor.hpp"

namespace erasehash {

inline constexpr std::size_t kMaxBits = 512;

// u = tanh(W z + b). The bias starts at zero.
struct HashParams {
  Tensor weight;  // [k x c']
  Tensor bias;    // [k]

  std::size_t bits() const { return weight.dim(0); }
  std::vector<Tensor*> parameters() { return {&weight, &bias}; }
  void zero_grad();

  friend bool operator==(const HashParams&, const HashParams&) = default;
};

HashParams init_hash_layer(std::size_t bits, std::size_t embedding_size,
                           std::uint64_t seed);

Tensor hash_forward(const Tensor& embedding, const HashParams& params);

// Accumulates parameter gradients and returns d(loss)/d(embedding).
Tensor hash_backward(std::span<const double> grad_code, const Tensor& embedding,
                     const Tensor& code, HashParams& params);

// A code over {-1, +1}.
using SignCode = std::vector<std::int8_t>;

// sign() with sign(0) = +1.
SignCode binarize(std::span<const double> relaxed);

std::size_t words_for(std::size_t bits);
// Bit j of the code lives in word j / 64 at bit position j % 64 and is set
// iff code[j] == +1; unused high bits are zero.
std::vector<std::uint64_t> pack(std::span<const std::int8_t> code);
SignCode unpack(std::span<const std::uint64_t> words, std::size_t bits);

// Non-owning view of one packed code.
struct CodeView {
  std::span<const std::uint64_t> words;
  std::size_t bits = 0;
};

// n packed codes of k bits each, stored contiguously.
class BitCodeMatrix {
 public:
  BitCodeMatrix() = default;
  BitCodeMatrix(std::size_t count, std::size_t bits);  // all bits -1

  std::size_t size() const { return count_; }
  std::size_t bits() const { return bits_; }
  std::size_t words_per_code() const { return stride_; }
  std::span<const std::uint64_t> words() const { return words_; }

  CodeView code(std::size_t i) const;
  SignCode unpacked(std::size_t i) const;
  void set_code(std::size_t i, std::span<const std::int8_t> code);
  void push_back(std::span<const std::int8_t> code);

  std::int8_t value(std::size_t i, std::size_t j) const {
    return (words_[i * stride_ + j / 64] >> (j % 64)) & 1u ? 1 : -1;
  }
  void set_value(std::size_t i, std::size_t j, std::int8_t v);

  // [n x k] tensor of +-1.0.
  Tensor to_dense() const;
  static BitCodeMatrix from_words(std::size_t count, std::size_t bits,
                                  std::vector<std::uint64_t> words);

  friend bool operator==(const BitCodeMatrix&, const BitCodeMatrix&) = default;

 private:
  std::size_t count_ = 0;
  std::size_t bits_ = 0;
  std::size_t stride_ = 0;
  std::vector<std::uint64_t> words_;
};

// "FGHV" hash database: codes plus one label per code.
struct HashDatabase {
  BitCodeMatrix codes;
  std::vector<int> labels;

  friend bool operator==(const HashDatabase&, const HashDatabase&) = default;
};

void save_hash_database(const HashDatabase& db, const std::filesystem::path& path);
HashDatabase load_hash_database(const std::filesystem::path& path);

}  // namespace erasehash
