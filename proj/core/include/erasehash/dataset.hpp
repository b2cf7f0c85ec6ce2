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
#include <string>
#include <vector>

#include "erasehash/random.hpp"
#include "erasehash/serialize.hpp"
#include "erasehash/tensor.hpp"

namespace erasehash {

// Knobs for the synthetic fine-grained generator. Every class is a small
// coloured motif pasted at a random position onto a background drawn from a
// pool shared by all classes, so classes differ only inside a few pixels.
struct GeneratorConfig {
  int classes = 10;
  int per_class = 64;
  int height = 32;
  int width = 32;
  double query_fraction = 0.2;
  int motif_size = 10;
  int background_pool = 12;
  double noise_stddev = 0.04;

  void validate() const;
  std::string to_json() const;
  static GeneratorConfig from_json(const std::string& text);

  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

enum class Split : std::uint8_t { kTrain = 0, kQuery = 1 };

// Images [N x 3 x h x w] in [0, 1]. The train split doubles as the retrieval
// database; "database index" j refers to the j-th train image in id order.
struct Dataset {
  GeneratorConfig config;
  std::uint64_t seed = 0;
  Tensor images;
  std::vector<int> labels;
  std::vector<Split> split;

  std::size_t size() const { return labels.size(); }
  int class_count() const { return config.classes; }
  std::size_t channels() const { return images.dim(1); }
  std::size_t height() const { return images.dim(2); }
  std::size_t width() const { return images.dim(3); }

  Tensor image(std::size_t id) const;
  std::vector<std::size_t> ids(Split which) const;
  std::vector<std::size_t> database_ids() const { return ids(Split::kTrain); }
  std::vector<std::size_t> query_ids() const { return ids(Split::kQuery); }
  std::vector<int> labels_of(std::span<const std::size_t> ids) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

Dataset generate(const GeneratorConfig& config, std::uint64_t seed);

// The [3 x m x m] motif of class `c` over a black background, exactly as the
// generator pastes it (before per-image jitter and noise).
Tensor class_motif(const GeneratorConfig& config, std::uint64_t seed, int c);

// S in {-1,+1}^{r x n}: rows are sampled database indices, columns the whole
// database. s_ij = +1 iff the labels agree.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  SimilarityMatrix(std::vector<std::size_t> row_ids, std::size_t columns,
                   std::vector<std::int8_t> entries);

  std::size_t rows() const { return row_ids_.size(); }
  std::size_t cols() const { return cols_; }
  std::int8_t at(std::size_t i, std::size_t j) const {
    return entries_[i * cols_ + j];
  }
  std::span<const std::int8_t> row(std::size_t i) const {
    return std::span(entries_).subspan(i * cols_, cols_);
  }
  const std::vector<std::size_t>& row_ids() const { return row_ids_; }
  // Matrix restricted to the given rows (positions into row_ids()).
  SimilarityMatrix select_rows(std::span<const std::size_t> rows) const;
  // Entry-wise negation.
  SimilarityMatrix negated() const;

  friend bool operator==(const SimilarityMatrix&,
                         const SimilarityMatrix&) = default;

 private:
  std::vector<std::size_t> row_ids_;
  std::size_t cols_ = 0;
  std::vector<std::int8_t> entries_;
};

SimilarityMatrix similarity_matrix(std::span<const std::size_t> sample_ids,
                                   std::span<const int> db_labels);

struct RoundSample {
  std::vector<std::size_t> ids;  // database indices, ascending
  SimilarityMatrix similarity;
};

// Uniform sample of r database items without replacement.
RoundSample sample_round(std::span<const int> db_labels, std::size_t r, Rng& rng);
RoundSample sample_round(const Dataset& dataset, std::size_t r, Rng& rng);

// Uniform draw from {j : s_row,j = +1, j != self}, where self is the
// row's own database index; falls back to self when it is the only match.
std::size_t pick_positive(std::size_t row, const SimilarityMatrix& similarity,
                          Rng& rng);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);
Bytes encode_dataset(const Dataset& dataset);
Dataset decode_dataset(std::span<const std::uint8_t> bytes);

}  // namespace erasehash
