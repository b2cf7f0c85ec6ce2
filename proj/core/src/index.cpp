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

#include "erasehash/index.hpp"

#include <bit>
#include <string>

#include "erasehash/errors.hpp"

namespace erasehash {

std::size_t hamming(CodeView a, CodeView b) {
  if (a.bits != b.bits || a.words.size() != b.words.size() ||
      a.words.size() != words_for(a.bits)) {
    throw DimensionError("hamming: code lengths " + std::to_string(a.bits) + " and " +
                         std::to_string(b.bits) + " differ");
  }
  std::size_t distance = 0;
  for (std::size_t w = 0; w < a.words.size(); ++w) {
    std::uint64_t diff = a.words[w] ^ b.words[w];
    if (w + 1 == a.words.size() && a.bits % 64 != 0)
      diff &= (std::uint64_t{1} << (a.bits % 64)) - 1;
    distance += static_cast<std::size_t>(std::popcount(diff));
  }
  return distance;
}

HammingIndex::HammingIndex(BitCodeMatrix codes, std::vector<int> labels)
    : codes_(std::move(codes)), labels_(std::move(labels)) {
  if (labels_.size() != codes_.size())
    throw DimensionError("build_index: " + std::to_string(labels_.size()) +
                         " labels for " + std::to_string(codes_.size()) + " codes");
}

std::vector<Neighbor> HammingIndex::query_topk(CodeView query, std::size_t count) const {
  if (count < 1) throw ConfigError("query_topk: K must be >= 1");
  const std::size_t n = size();
  if (n == 0) return {};
  if (query.bits != bits())
    throw DimensionError("query_topk: query has " + std::to_string(query.bits) +
                         " bits, index has " + std::to_string(bits()));

  // Counting sort by distance keeps ids ascending inside each bucket.
  std::vector<std::size_t> distances(n);
  std::vector<std::size_t> bucket(bits() + 2, 0);
  for (std::size_t i = 0; i < n; ++i) {
    distances[i] = hamming(query, codes_.code(i));
    ++bucket[distances[i] + 1];
  }
  for (std::size_t d = 1; d < bucket.size(); ++d) bucket[d] += bucket[d - 1];
  std::vector<Neighbor> ranked(n);
  for (std::size_t i = 0; i < n; ++i) ranked[bucket[distances[i]]++] = {i, distances[i]};
  if (count < n) ranked.resize(count);
  return ranked;
}

HammingIndex build_index(BitCodeMatrix codes, std::vector<int> labels) {
  return HammingIndex(std::move(codes), std::move(labels));
}

HammingIndex build_index(const HashDatabase& db) { return HammingIndex(db.codes, db.labels); }

}  // namespace erasehash
