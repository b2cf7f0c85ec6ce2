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

#include "chain_check.hpp"
#include "erasehash/errors.hpp"
#include "erasehash/objective.hpp"
#include "gradcheck.hpp"

namespace erasehash {
namespace {

using testing::numeric_gradient;
using testing::random_tensor;
using testing::relative_error;

struct Instance {
  Tensor u, erased, positive;
  BitCodeMatrix v;
  SimilarityMatrix s;
};

Instance random_instance(std::uint64_t seed, std::size_t r = 3, std::size_t n = 6,
                         std::size_t k = 4) {
  Rng rng(seed);
  Instance in;
  in.u = random_tensor({r, k}, rng);
  in.erased = random_tensor({r, k}, rng);
  in.positive = random_tensor({r, k}, rng);
  std::bernoulli_distribution coin(0.5);
  in.v = BitCodeMatrix(n, k);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t b = 0; b < k; ++b) in.v.set_value(j, b, coin(rng) ? 1 : -1);
  std::vector<std::int8_t> e(r * n);
  for (auto& x : e) x = coin(rng) ? 1 : -1;
  std::vector<std::size_t> rows(r);
  for (std::size_t i = 0; i < r; ++i) rows[i] = i;
  in.s = SimilarityMatrix(rows, n, e);
  return in;
}

TEST(LossSqTest, HandExamples) {
  const Tensor u({1, 2}, {1, 1});
  BitCodeMatrix v(1, 2);
  v.set_code(0, SignCode{1, 1});
  EXPECT_EQ(loss_sq(u, v, SimilarityMatrix({0}, 1, {1})).value, 0.0);
  EXPECT_EQ(loss_sq(u, v, SimilarityMatrix({0}, 1, {-1})).value, 16.0);
  EXPECT_THROW(loss_sq(Tensor({1, 3}), v, SimilarityMatrix({0}, 1, {1})), DimensionError);
}

TEST(LossSqTest, GradientAndDenseAgreement) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Instance in = random_instance(seed);
    const SimilarityLoss packed = loss_sq(in.u, in.v, in.s);
    const SimilarityLoss dense = loss_sq(in.u, in.v.to_dense(), in.s);
    EXPECT_EQ(packed.value, dense.value);
    auto f = [&] { return loss_sq(in.u, in.v, in.s).value; };
    EXPECT_LT(relative_error(packed.grad.values(), numeric_gradient(f, in.u.values())), 1e-6);
  }
}

TEST(PairLossTest, Examples) {
  const Tensor a({1, 2}, {1, -1});
  const Tensor b({1, 2}, {-1, 1});
  EXPECT_EQ(loss_self(a, a).value, 0.0);
  EXPECT_EQ(loss_self(a, b).value, 8.0);
  Tensor c = a;
  c[1] = 1.0;
  EXPECT_EQ(loss_others(a, a).value, 0.0);
  EXPECT_EQ(loss_others(a, c).value, 4.0);
  EXPECT_THROW(loss_self(a, Tensor({2, 1})), DimensionError);
}

TEST(PairLossTest, Gradients) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Instance in = random_instance(seed + 20);
    const PairLoss self = loss_self(in.u, in.erased);
    auto fs = [&] { return loss_self(in.u, in.erased).value; };
    EXPECT_LT(relative_error(self.grad_first.values(), numeric_gradient(fs, in.u.values())), 1e-8);
    EXPECT_LT(relative_error(self.grad_second.values(), numeric_gradient(fs, in.erased.values())),
              1e-8);
    const PairLoss others = loss_others(in.u, in.positive);
    auto fo = [&] { return loss_others(in.u, in.positive).value; };
    EXPECT_LT(relative_error(others.grad_second.values(),
                             numeric_gradient(fo, in.positive.values())),
              1e-8);
  }
}

TEST(EsrlTest, ReductionsAndLinearity) {
  const Instance in = random_instance(3);
  EXPECT_EQ(esrl(in.u, in.erased, in.positive, 0.0, 0.0), 0.0);
  EXPECT_EQ(esrl(in.u, in.erased, in.positive, 1.0, 0.0), loss_self(in.u, in.erased).value);
  const double alpha = 0.7;
  const double beta = 1.3;
  EXPECT_NEAR(esrl(in.u, in.erased, in.positive, 2 * alpha, beta) -
                  esrl(in.u, in.erased, in.positive, alpha, beta),
              alpha * loss_self(in.u, in.erased).value, 1e-12);
  EXPECT_THROW(esrl(in.u, in.erased, in.positive, -1.0, 0.0), ConfigError);
}

TEST(LossTotalTest, InvariantAndGradients) {
  for (bool normalized : {false, true}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Instance in = random_instance(seed + 40);
      const ObjectiveOptions opt{0.8, 1.7, normalized};
      const Objective o = loss_total(in.u, in.erased, in.positive, in.v, in.s, opt);
      const LossTerms& t = o.terms;
      EXPECT_NEAR(t.total, t.l_sq + opt.alpha * t.l_self + opt.beta * t.l_others,
                  1e-9 * t.total);
      EXPECT_GE(t.l_sq, 0.0);
      EXPECT_GE(t.l_self, 0.0);
      EXPECT_GE(t.l_others, 0.0);
      auto f = [&] { return loss_total(in.u, in.erased, in.positive, in.v, in.s, opt).terms.total; };
      EXPECT_LT(relative_error(o.grad_relaxed.values(), numeric_gradient(f, in.u.values())), 1e-6);
      EXPECT_LT(relative_error(o.grad_erased.values(), numeric_gradient(f, in.erased.values())),
                1e-6);
      EXPECT_LT(relative_error(o.grad_positive.values(),
                               numeric_gradient(f, in.positive.values())),
                1e-6);
    }
  }
}

TEST(LossTotalTest, NormalisedModeDividesBySummandCounts) {
  const Instance in = random_instance(5, 3, 6, 4);
  const ObjectiveOptions raw{1.0, 1.0, false};
  const ObjectiveOptions scaled{1.0, 1.0, true};
  const LossTerms a = loss_total(in.u, in.erased, in.positive, in.v, in.s, raw).terms;
  const LossTerms b = loss_total(in.u, in.erased, in.positive, in.v, in.s, scaled).terms;
  EXPECT_NEAR(b.l_sq, a.l_sq / 18.0, 1e-12);
  EXPECT_NEAR(b.l_self, a.l_self / 12.0, 1e-12);
  EXPECT_NEAR(b.l_others, a.l_others / 12.0, 1e-12);
}

TEST(LossTotalTest, ReducesToSimilarityTerm) {
  const Instance in = random_instance(6);
  const Objective o = loss_total(in.u, in.erased, in.positive, in.v, in.s, {0.0, 0.0, false});
  EXPECT_EQ(o.terms.total, loss_sq(in.u, in.v, in.s).value);
  for (double g : o.grad_erased.values()) EXPECT_EQ(g, 0.0);
  for (double g : o.grad_positive.values()) EXPECT_EQ(g, 0.0);
}

TEST(LossTotalTest, JointMinimumIsZero) {
  // Two rows with opposite saturated codes, database holding both codes.
  const Tensor u({2, 3}, {1, 1, 1, -1, -1, -1});
  BitCodeMatrix v(2, 3);
  v.set_code(0, SignCode{1, 1, 1});
  v.set_code(1, SignCode{-1, -1, -1});
  const SimilarityMatrix s({0, 1}, 2, {1, -1, -1, 1});
  EXPECT_EQ(loss_total(u, u, u, v, s, {1.0, 1.0, false}).terms.total, 0.0);
}

TEST(LossTotalTest, PermutationInvariance) {
  const Instance in = random_instance(7, 3, 5, 4);
  const ObjectiveOptions opt{1.0, 1.0, false};
  const double before = loss_total(in.u, in.erased, in.positive, in.v, in.s, opt).terms.total;
  const std::vector<std::size_t> order{2, 0, 1};
  auto permute = [&](const Tensor& m) {
    Tensor out(m.shape());
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t b = 0; b < 4; ++b) out.at(i, b) = m.at(order[i], b);
    return out;
  };
  const double after = loss_total(permute(in.u), permute(in.erased), permute(in.positive), in.v,
                                  in.s.select_rows(order), opt)
                           .terms.total;
  EXPECT_NEAR(before, after, 1e-9 * before);
}

TEST(LossTotalTest, ErasedGradientIgnoresDatabase) {
  Instance in = random_instance(8);
  const ObjectiveOptions opt{1.0, 1.0, false};
  const Tensor g1 = loss_total(in.u, in.erased, in.positive, in.v, in.s, opt).grad_erased;
  Instance other = random_instance(9);
  const Tensor g2 =
      loss_total(in.u, in.erased, in.positive, other.v, other.s, opt).grad_erased;
  EXPECT_EQ(g1, g2);
}

TEST(LossTotalTest, FullChainGradient) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    for (bool normalized : {false, true}) {
      const testing::ChainCheck c = testing::full_chain_check(seed, normalized);
      EXPECT_LT(c.max_error, 1e-4) << "seed " << seed;
      EXPECT_GT(c.checked, 200u);
    }
  }
}

}  // namespace
}  // namespace erasehash
