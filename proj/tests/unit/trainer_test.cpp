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

#include <filesystem>

#include "erasehash/errors.hpp"
#include "erasehash/trainer.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

namespace erasehash {
namespace {

using testing::column_oracle;
using testing::random_tensor;
using testing::rows_of;
using testing::similarity_loss_oracle;

struct Discrete {
  Tensor u;
  BitCodeMatrix v;
  SimilarityMatrix s;
};

Discrete random_discrete(Rng& rng, std::size_t r, std::size_t n, std::size_t k) {
  Discrete d;
  d.u = random_tensor({r, k}, rng);
  std::bernoulli_distribution coin(0.5);
  d.v = BitCodeMatrix(n, k);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t b = 0; b < k; ++b) d.v.set_value(j, b, coin(rng) ? 1 : -1);
  std::vector<std::int8_t> e(r * n);
  for (auto& x : e) x = coin(rng) ? 1 : -1;
  std::vector<std::size_t> rows(r);
  for (std::size_t i = 0; i < r; ++i) rows[i] = i;
  d.s = SimilarityMatrix(rows, n, e);
  return d;
}

GeneratorConfig tiny_data() {
  GeneratorConfig g;
  g.classes = 3;
  g.per_class = 6;
  g.height = 16;
  g.width = 16;
  g.motif_size = 5;
  return g;
}

TrainConfig tiny_train() {
  TrainConfig c;
  c.bits = 8;
  c.samples = 6;
  c.iterations = 2;
  c.epochs_per_iteration = 2;
  c.batch_size = 4;
  c.lr_milestones = {1};
  c.erasers = 2;
  c.eraser_size = 3;
  c.channels = {4, 8};
  return c;
}

TEST(ComputeQTest, Examples) {
  Rng rng(1);
  const Tensor u = random_tensor({1, 3}, rng);
  const SimilarityMatrix ones({0}, 4, {1, 1, 1, 1});
  const Tensor q = compute_q(ones, u);
  for (std::size_t j = 0; j < 4; ++j)
    for (std::size_t b = 0; b < 3; ++b) EXPECT_EQ(q.at(j, b), u.at(0, b));

  Discrete d = random_discrete(rng, 4, 5, 3);
  const Tensor a = compute_q(d.s, d.u);
  const Tensor neg = compute_q(d.s.negated(), d.u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(neg[i], -a[i]);
  for (std::size_t j = 0; j < 5; ++j)
    for (std::size_t b = 0; b < 3; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < 4; ++i) s += d.s.at(i, j) * d.u.at(i, b);
      EXPECT_DOUBLE_EQ(a.at(j, b), s);
    }
}

TEST(ColumnUpdateTest, SingleBitExamples) {
  const Tensor u({1, 1}, 1.0);
  BitCodeMatrix v(1, 1);
  const SimilarityMatrix s({0}, 1, {1});
  update_v_column(v, u, compute_q(s, u), 0);
  EXPECT_EQ(v.value(0, 0), 1);

  Rng rng(2);
  Discrete d = random_discrete(rng, 3, 6, 1);
  const Tensor q = compute_q(d.s, d.u);
  update_v_column(d.v, d.u, q, 0);
  for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(d.v.value(j, 0), q.at(j, 0) >= 0 ? 1 : -1);
  EXPECT_THROW(update_v_column(d.v, d.u, q, 1), DimensionError);
}

TEST(ColumnUpdateTest, MatchesExhaustiveOracle) {
  Rng rng(3);
  std::uniform_int_distribution<std::size_t> dim(1, 6);
  int compared = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Discrete d = random_discrete(rng, 1 + dim(rng) % 4, dim(rng), 1 + dim(rng) % 3);
    const Tensor q = compute_q(d.s, d.u);
    for (std::size_t m = 0; m < d.v.bits(); ++m) {
      const double before = similarity_loss_oracle(d.u, rows_of(d.v), d.s);
      const auto best = column_oracle(rows_of(d.v), d.u, d.s, m);
      update_v_column(d.v, d.u, q, m);
      const double after = similarity_loss_oracle(d.u, rows_of(d.v), d.s);
      EXPECT_LE(after, before + 1e-9);
      EXPECT_NEAR(after, best.loss, 1e-9);
      if (best.unique) {
        for (std::size_t j = 0; j < d.v.size(); ++j) EXPECT_EQ(d.v.value(j, m), best.column[j]);
        ++compared;
      }
    }
  }
  EXPECT_GT(compared, 100);
}

TEST(UpdateVTest, SweepIsMonotoneAndConvergesToLocalOptimum) {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    Discrete d = random_discrete(rng, 4, 6, 3);
    const SweepReport first = update_v(d.v, d.u, d.s, 1, ColumnRule::kDerived, true);
    EXPECT_LE(first.loss_after, first.loss_before + 1e-9);
    EXPECT_NEAR(first.loss_after, similarity_loss_oracle(d.u, rows_of(d.v), d.s), 1e-9);

    for (int pass = 0; pass < 50; ++pass)
      if (update_v(d.v, d.u, d.s, 1).changed_bits == 0) break;
    // A fixed point stays put.
    const BitCodeMatrix fixed = d.v;
    EXPECT_EQ(update_v(d.v, d.u, d.s, 1).changed_bits, 0u);
    EXPECT_EQ(d.v, fixed);

    const double loss = similarity_loss_oracle(d.u, rows_of(d.v), d.s);
    for (std::size_t j = 0; j < d.v.size(); ++j)
      for (std::size_t b = 0; b < d.v.bits(); ++b) {
        auto flipped = rows_of(d.v);
        flipped[j][b] = static_cast<std::int8_t>(-flipped[j][b]);
        EXPECT_GE(similarity_loss_oracle(d.u, flipped, d.s), loss - 1e-9);
      }
  }
}

TEST(UpdateVTest, LiteralRuleIsSelectable) {
  Rng rng(5);
  Discrete d = random_discrete(rng, 2, 4, 1);
  const Tensor q = compute_q(d.s, d.u);
  BitCodeMatrix literal = d.v;
  update_v_column(literal, d.u, q, 0, ColumnRule::kLiteral);
  // With one bit there is no cross term, so both rules reduce to sign(q).
  update_v_column(d.v, d.u, q, 0, ColumnRule::kDerived);
  EXPECT_EQ(literal, d.v);
}

TEST(ThetaStepTest, ZeroLearningRateAndDescent) {
  Rng rng(6);
  Architecture arch;
  arch.height = 8;
  arch.width = 8;
  arch.channels = {3, 4};
  arch.strides = {2, 1};
  Model model = init_model(arch, 4, 6);
  TripletBatch batch;
  for (int t = 0; t < 2; ++t) {
    batch.anchors.push_back(random_tensor({3, 8, 8}, rng, 0.0, 1.0));
    batch.erased.push_back(random_tensor({3, 8, 8}, rng, 0.0, 1.0));
    batch.positives.push_back(random_tensor({3, 8, 8}, rng, 0.0, 1.0));
  }
  batch.similarity = SimilarityMatrix({0, 1}, 3, {1, -1, -1, -1, 1, 1});
  BitCodeMatrix v(3, 4);
  v.set_code(0, SignCode{1, 1, -1, 1});
  v.set_code(2, SignCode{-1, 1, 1, 1});
  const ObjectiveOptions options{1.0, 1.0, false};

  Model frozen = model;
  auto frozen_params = frozen.parameters();
  SgdState zero = make_sgd_state(frozen_params, 0.0, 0.9, 0.0);
  theta_step(frozen, zero, batch, v, options);
  EXPECT_EQ(frozen.backbone.kernels, model.backbone.kernels);
  EXPECT_EQ(frozen.hash.weight, model.hash.weight);

  auto params = model.parameters();
  SgdState small = make_sgd_state(params, 1e-4, 0.0, 0.0);
  const LossTerms before = theta_step(model, small, batch, v, options);
  EXPECT_LT(evaluate_batch(model, batch, v, options).total, before.total);
}

TEST(TrainerTest, EpochCoversEveryTripletOnce) {
  // With lr = 0 and raw sums, the epoch loss summed over mini-batches equals
  // the loss of all triplets evaluated as one batch only if every triplet
  // lands in exactly one batch.
  const Dataset data = generate(tiny_data(), 1);
  TrainConfig c = tiny_train();
  c.learning_rate = 0.0;
  c.normalized_loss = false;
  c.iterations = 1;
  c.lr_milestones.clear();
  c.epochs_per_iteration = 1;
  c.batch_size = 4;  // 6 triplets: batches of 4 and 2
  Trainer trainer(data, c);
  std::vector<Triplet> seen;
  trainer.on_triplets = [&](std::size_t, const std::vector<Triplet>& t,
                            const std::vector<Erasure>&) { seen = t; };
  const Model initial = trainer.model();
  const BitCodeMatrix codes = trainer.database_codes();
  trainer.run();
  ASSERT_EQ(seen.size(), 6u);

  TripletBatch all;
  std::vector<std::size_t> anchors;
  const auto db = data.database_ids();
  for (const Triplet& t : seen) {
    anchors.push_back(t.anchor);
    all.anchors.push_back(data.image(db[t.anchor]));
    all.erased.push_back(t.erased);
    all.positives.push_back(data.image(db[t.positive]));
  }
  all.similarity = similarity_matrix(anchors, data.labels_of(db));
  const LossTerms whole = evaluate_batch(initial, all, codes, {c.alpha, c.beta, false});
  ASSERT_EQ(trainer.log().size(), 1u);
  EXPECT_NEAR(trainer.log()[0].terms.total, whole.total, 1e-9 * whole.total);
}

TEST(TrainerTest, ZeroIterationsKeepsInitialisation) {
  const Dataset data = generate(tiny_data(), 2);
  TrainConfig c = tiny_train();
  Trainer fresh(data, c);
  c.iterations = 0;
  const TrainResult r = train(data, c);
  EXPECT_EQ(r.database.codes, fresh.database_codes());
  EXPECT_EQ(r.model, fresh.model());
  EXPECT_TRUE(r.log.empty());
  for (std::size_t b = 0; b < r.database.codes.bits(); ++b) {
    int sum = 0;
    for (std::size_t j = 0; j < r.database.codes.size(); ++j) sum += r.database.codes.value(j, b);
    EXPECT_LE(std::abs(sum), 1);
  }
}

TEST(TrainerTest, DeterministicUnderSeed) {
  const Dataset data = generate(tiny_data(), 3);
  const TrainConfig c = tiny_train();
  const TrainResult a = train(data, c);
  const TrainResult b = train(data, c);
  EXPECT_EQ(a.database, b.database);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(log_csv(a.log), log_csv(b.log));
  ASSERT_EQ(a.log.size(), 4u);
  for (const LogRow& row : a.log) EXPECT_TRUE(std::isfinite(row.terms.total));
}

TEST(TrainerTest, LearningRateMilestones) {
  const Dataset data = generate(tiny_data(), 3);
  TrainConfig c = tiny_train();
  c.iterations = 5;
  c.lr_milestones = {2, 4};
  c.learning_rate = 1.0;
  const Trainer t(data, c);
  EXPECT_DOUBLE_EQ(t.learning_rate_for(0), 1.0);
  EXPECT_DOUBLE_EQ(t.learning_rate_for(2), 0.1);
  EXPECT_DOUBLE_EQ(t.learning_rate_for(4), 0.01);
}

TEST(TrainerTest, ReductionLeavesOnlySimilarityTerm) {
  const Dataset data = generate(tiny_data(), 4);
  TrainConfig c = tiny_train();
  c.alpha = 0.0;
  c.beta = 0.0;
  c.srem = false;
  const TrainResult r = train(data, c);
  for (const LogRow& row : r.log) {
    EXPECT_EQ(row.terms.l_self, 0.0);
    EXPECT_EQ(row.terms.l_others, 0.0);
    EXPECT_EQ(row.terms.total, row.terms.l_sq);
  }
}

TEST(TrainerTest, DebugChecksPassDuringTraining) {
  const Dataset data = generate(tiny_data(), 5);
  TrainConfig c = tiny_train();
  c.debug_checks = true;
  c.v_passes = 2;
  EXPECT_NO_THROW(train(data, c));
}

TEST(CheckpointTest, RoundTripAndCorruption) {
  Architecture arch;
  arch.height = 16;
  arch.width = 16;
  arch.channels = {4, 8};
  arch.strides = {2, 2};
  const Model m = init_model(arch, 12, 9);
  const auto path = std::filesystem::temp_directory_path() / "erasehash_trainer_test.fghk";
  save_checkpoint(m, path);
  EXPECT_EQ(load_checkpoint(path), m);
  Bytes bytes = read_file(path);
  bytes[bytes.size() / 2] ^= 0x08;
  write_file(path, bytes);
  EXPECT_THROW(load_checkpoint(path), ChecksumError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace erasehash
