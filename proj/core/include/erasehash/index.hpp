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
#include <vector>

#include "erasehash/hash_layer.hpp"

namespace erasehash {

struct Neighbor {
  std::size_t id = 0;
  std::size_t distance = 0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// Popcount of a XOR b over the k valid bits.
std::size_t hamming(CodeView a, CodeView b);

// Immutable exact Hamming index over packed codes. Lookups are read-only and
// may run concurrently.
class HammingIndex {
 public:
  HammingIndex() = default;
  HammingIndex(BitCodeMatrix codes, std::vector<int> labels);

  std::size_t size() const { return codes_.size(); }
  std::size_t bits() const { return codes_.bits(); }
  const BitCodeMatrix& codes() const { return codes_; }
  const std::vector<int>& labels() const { return labels_; }

  // The `count` nearest codes in ascending distance, with ties broken by
  // ascending id. Returns all n when count > n.
  std::vector<Neighbor> query_topk(CodeView query, std::size_t count) const;

 private:
  BitCodeMatrix codes_;
  std::vector<int> labels_;
};

HammingIndex build_index(BitCodeMatrix codes, std::vector<int> labels);
HammingIndex build_index(const HashDatabase& db);

}  // namespace erasehash
