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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "erasehash/attention.hpp"
#include "erasehash/errors.hpp"
#include "erasehash/ops.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

namespace erasehash {
namespace {

using testing::erase_oracle;
using testing::random_tensor;

AttentionMask as_mask(Tensor values) { return {std::move(values), 1e-6}; }

TEST(ChannelMeanTest, Examples) {
  Rng rng(1);
  const Tensor one = random_tensor({1, 3, 4}, rng);
  EXPECT_EQ(channel_mean({one, 0}), one.reshaped({3, 4}));

  Tensor two({2, 2, 2});
  for (std::size_t i = 0; i < 4; ++i) {
    two[i] = 2.0;
    two[4 + i] = 4.0;
  }
  const Tensor two_mean = channel_mean({two, 0});
  for (double v : two_mean.values()) EXPECT_EQ(v, 3.0);

  const Tensor a = random_tensor({5, 3, 3}, rng);
  const Tensor mean = channel_mean({a, 0});
  for (std::size_t y = 0; y < 3; ++y)
    for (std::size_t x = 0; x < 3; ++x) {
      double s = 0.0;
      for (std::size_t c = 0; c < 5; ++c) s += a.at(c, y, x);
      EXPECT_DOUBLE_EQ(mean.at(y, x), s / 5.0);
    }
}

TEST(NormalizeMaskTest, Examples) {
  const double eps = 1e-6;
  const AttentionMask m = normalize_mask(Tensor({2, 2}, {0, 2, 4, 8}), eps);
  EXPECT_DOUBLE_EQ(m.values.at(0, 0), eps);
  EXPECT_DOUBLE_EQ(m.values.at(0, 1), 0.25 + eps);
  EXPECT_DOUBLE_EQ(m.values.at(1, 0), 0.5 + eps);
  EXPECT_DOUBLE_EQ(m.values.at(1, 1), 1.0 + eps);

  const AttentionMask flat = normalize_mask(Tensor({3, 3}, 7.0), eps);
  for (double v : flat.values.values()) EXPECT_EQ(v, eps);
}

TEST(NormalizeMaskTest, RangeOnRandomInputs) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    const Tensor a = random_tensor({6, 7}, rng, -100.0, 100.0);
    const AttentionMask m = normalize_mask(a, 1e-3);
    const auto [lo, hi] = std::minmax_element(m.values.values().begin(), m.values.values().end());
    EXPECT_DOUBLE_EQ(*lo, 1e-3);
    EXPECT_DOUBLE_EQ(*hi, 1.0 + 1e-3);
  }
}

TEST(SelectEraseTest, Examples) {
  Rng rng(2);
  const BinaryMask all = select_erase(as_mask(random_tensor({3, 4}, rng)), 12, 1);
  for (double v : all.values.values()) EXPECT_EQ(v, 0.0);

  Tensor m({4, 4}, 0.1);
  m.at(0, 0) = 0.9;
  const BinaryMask one = select_erase(as_mask(m), 1, 2);
  for (std::size_t y = 0; y < 4; ++y)
    for (std::size_t x = 0; x < 4; ++x)
      EXPECT_EQ(one.values.at(y, x), (y < 2 && x < 2) ? 0.0 : 1.0);
  ASSERT_EQ(one.anchors.size(), 1u);
  EXPECT_EQ(one.anchors[0], std::make_pair(std::size_t{0}, std::size_t{0}));
}

TEST(SelectEraseTest, InvalidParameters) {
  const AttentionMask m = as_mask(Tensor({4, 4}, 1.0));
  EXPECT_THROW(select_erase(m, 0, 1), ConfigError);
  EXPECT_THROW(select_erase(m, 17, 1), ConfigError);
  EXPECT_THROW(select_erase(m, 1, 0), ConfigError);
  EXPECT_THROW(select_erase(m, 1, 5), ConfigError);
}

TEST(SelectEraseTest, TiesBreakInRowMajorOrder) {
  const BinaryMask b = select_erase(as_mask(Tensor({3, 3}, 0.5)), 2, 1);
  ASSERT_EQ(b.anchors.size(), 2u);
  EXPECT_EQ(b.anchors[0], std::make_pair(std::size_t{0}, std::size_t{0}));
  EXPECT_EQ(b.anchors[1], std::make_pair(std::size_t{0}, std::size_t{1}));
}

TEST(SelectEraseTest, MatchesOracleOnRandomMasks) {
  Rng rng(3);
  std::uniform_int_distribution<int> level(0, 4);
  for (int trial = 0; trial < 300; ++trial) {
    Tensor m({8, 8});
    const bool tied = trial % 2 == 0;
    for (double& v : m.values()) v = tied ? level(rng) : std::uniform_real_distribution<>(0, 1)(rng);
    const std::size_t count = 1 + trial % 5;
    const std::size_t size = 1 + trial % 3;
    EXPECT_EQ(select_erase(as_mask(m), count, size).values, erase_oracle(m, count, size));
  }
}

TEST(SelectEraseTest, ErasesOnlyInsideStampedBlocks) {
  Rng rng(4);
  const Tensor m = random_tensor({6, 6}, rng);
  const BinaryMask b = select_erase(as_mask(m), 3, 2);
  std::size_t zeros = 0;
  for (std::size_t y = 0; y < 6; ++y)
    for (std::size_t x = 0; x < 6; ++x) {
      bool covered = false;
      for (auto [ay, ax] : b.anchors) covered |= y >= ay && y < ay + 2 && x >= ax && x < ax + 2;
      EXPECT_EQ(b.values.at(y, x) == 0.0, covered);
      zeros += b.values.at(y, x) == 0.0;
    }
  EXPECT_LE(zeros, 3u * 4u);
}

TEST(ApplyMaskTest, Examples) {
  Rng rng(5);
  const Tensor image = random_tensor({3, 4, 5}, rng, 0.1, 1.0);
  EXPECT_EQ(apply_mask(image, {Tensor({4, 5}, 1.0), {}}), image);
  const Tensor blank = apply_mask(image, {Tensor({4, 5}, 0.0), {}});
  for (double v : blank.values()) EXPECT_EQ(v, 0.0);

  Tensor mask({4, 5}, 1.0);
  mask.at(1, 2) = 0.0;
  mask.at(3, 0) = 0.0;
  const Tensor out = apply_mask(image, {mask, {}});
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t y = 0; y < 4; ++y)
      for (std::size_t x = 0; x < 5; ++x) EXPECT_EQ(out.at(c, y, x) != 0.0, mask.at(y, x) == 1.0);
  EXPECT_THROW(apply_mask(image, {Tensor({5, 4}, 1.0), {}}), DimensionError);
}

TEST(MakeErasedTest, MinimalEraseRemovesOnePixelStack) {
  Rng rng(6);
  const Tensor image = random_tensor({3, 16, 16}, rng, 0.1, 1.0);
  const Tensor features = random_tensor({4, 2, 2}, rng);
  const Tensor erased = make_erased(image, {features, 0}, {1, 1, 1e-6});
  std::size_t zeros = 0;
  for (std::size_t y = 0; y < 16; ++y)
    for (std::size_t x = 0; x < 16; ++x) {
      const bool gone = erased.at(0, y, x) == 0.0;
      zeros += gone;
      for (std::size_t c = 1; c < 3; ++c) EXPECT_EQ(erased.at(c, y, x) == 0.0, gone);
    }
  EXPECT_EQ(zeros, 1u);
}

TEST(MakeErasedTest, HotCellIsCovered) {
  Tensor features({2, 4, 4}, 0.0);
  features.at(0, 1, 2) = 5.0;
  features.at(1, 1, 2) = 3.0;
  const Tensor image({3, 32, 32}, 0.5);
  const Erasure e = erase_with_attention(image, {features, 0}, {1, 5, 1e-6});

  const Tensor resized = ops::bilinear_resize(channel_mean({features, 0}), 32, 32);
  const auto hot = std::max_element(resized.values().begin(), resized.values().end()) -
                   resized.values().begin();
  const std::size_t hy = static_cast<std::size_t>(hot) / 32;
  const std::size_t hx = static_cast<std::size_t>(hot) % 32;
  // Align-corners maps cell (1, 2) of a 4x4 grid onto (31/3, 62/3).
  EXPECT_NEAR(static_cast<double>(hy), 31.0 / 3.0, 1.0);
  EXPECT_NEAR(static_cast<double>(hx), 62.0 / 3.0, 1.0);
  EXPECT_EQ(e.mask.values.at(hy, hx), 0.0);
  EXPECT_EQ(e.erased.at(0, hy, hx), 0.0);
}

TEST(MakeErasedTest, DeterministicAndFlatHandling) {
  Rng rng(7);
  const Tensor image = random_tensor({3, 16, 16}, rng, 0.1, 1.0);
  const Tensor features = random_tensor({4, 4, 4}, rng);
  const EraserConfig cfg{3, 3, 1e-6};
  EXPECT_EQ(make_erased(image, {features, 0}, cfg), make_erased(image, {features, 0}, cfg));

  const Tensor flat({4, 4, 4}, 2.0);
  const Erasure anchored = erase_with_attention(image, {flat, 0}, {2, 2, 1e-6});
  EXPECT_FALSE(anchored.skipped);
  EXPECT_EQ(anchored.mask.anchors[0], std::make_pair(std::size_t{0}, std::size_t{0}));
  const Erasure skipped = erase_with_attention(image, {flat, 0}, {16, 4, 1e-6});
  EXPECT_TRUE(skipped.skipped);
  EXPECT_EQ(skipped.erased, image);
}

}  // namespace
}  // namespace erasehash
