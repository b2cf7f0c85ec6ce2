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

#include "erasehash/objective.hpp"

#include <string>

#include "erasehash/errors.hpp"

namespace erasehash {
namespace {

PairLoss squared_distance(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(what) + ": shapes " + shape_string(a.shape()) +
                         " and " + shape_string(b.shape()) + " differ");
  }
  PairLoss out{0.0, Tensor(a.shape()), Tensor(a.shape())};
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    out.value += d * d;
    out.grad_first[i] = 2.0 * d;
    out.grad_second[i] = -2.0 * d;
  }
  return out;
}

void scale(Tensor& t, double factor) {
  for (double& v : t.values()) v *= factor;
}

}  // namespace

LossTerms& LossTerms::operator+=(const LossTerms& other) {
  l_sq += other.l_sq;
  l_self += other.l_self;
  l_others += other.l_others;
  total += other.total;
  return *this;
}

SimilarityLoss loss_sq(const Tensor& relaxed, const Tensor& database,
                       const SimilarityMatrix& similarity) {
  require_rank(relaxed, 2, "loss_sq U");
  require_rank(database, 2, "loss_sq V");
  const std::size_t r = relaxed.dim(0), k = relaxed.dim(1), n = database.dim(0);
  if (database.dim(1) != k || similarity.rows() != r || similarity.cols() != n) {
    throw DimensionError("loss_sq: U " + shape_string(relaxed.shape()) + ", V " +
                         shape_string(database.shape()) + " and S [" +
                         std::to_string(similarity.rows()) + "x" +
                         std::to_string(similarity.cols()) + "] disagree");
  }
  const double target = static_cast<double>(k);
  SimilarityLoss out{0.0, Tensor({r, k})};
  for (std::size_t i = 0; i < r; ++i) {
    const double* u = relaxed.data() + i * k;
    double* g = out.grad.data() + i * k;
    double row_loss = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double* v = database.data() + j * k;
      double dot = 0.0;
      for (std::size_t b = 0; b < k; ++b) dot += u[b] * v[b];
      const double residual = dot - target * similarity.at(i, j);
      row_loss += residual * residual;
      for (std::size_t b = 0; b < k; ++b) g[b] += 2.0 * residual * v[b];
    }
    out.value += row_loss;
  }
  return out;
}

SimilarityLoss loss_sq(const Tensor& relaxed, const BitCodeMatrix& database,
                       const SimilarityMatrix& similarity) {
  return loss_sq(relaxed, database.to_dense(), similarity);
}

PairLoss loss_self(const Tensor& relaxed, const Tensor& erased) {
  return squared_distance(relaxed, erased, "loss_self");
}

PairLoss loss_others(const Tensor& relaxed, const Tensor& positive) {
  return squared_distance(relaxed, positive, "loss_others");
}

double esrl(const Tensor& relaxed, const Tensor& erased, const Tensor& positive,
            double alpha, double beta) {
  if (!(alpha >= 0.0) || !(beta >= 0.0))
    throw ConfigError("esrl: alpha and beta must be non-negative");
  return alpha * loss_self(relaxed, erased).value +
         beta * loss_others(relaxed, positive).value;
}

Objective loss_total(const Tensor& relaxed, const Tensor& erased,
                     const Tensor& positive, const BitCodeMatrix& database,
                     const SimilarityMatrix& similarity, const ObjectiveOptions& options) {
  if (!(options.alpha >= 0.0) || !(options.beta >= 0.0))
    throw ConfigError("loss_total: alpha and beta must be non-negative");
  SimilarityLoss sq = loss_sq(relaxed, database, similarity);
  PairLoss self = loss_self(relaxed, erased);
  PairLoss others = loss_others(relaxed, positive);

  if (options.normalized) {
    const double rows = static_cast<double>(relaxed.dim(0));
    const double sq_scale = 1.0 / (rows * static_cast<double>(database.size()));
    const double pair_scale = 1.0 / (rows * static_cast<double>(relaxed.dim(1)));
    sq.value *= sq_scale;
    scale(sq.grad, sq_scale);
    for (PairLoss* p : {&self, &others}) {
      p->value *= pair_scale;
      scale(p->grad_first, pair_scale);
      scale(p->grad_second, pair_scale);
    }
  }

  Objective out;
  out.terms.alpha = options.alpha;
  out.terms.beta = options.beta;
  out.terms.l_sq = sq.value;
  out.terms.l_self = self.value;
  out.terms.l_others = others.value;
  out.terms.total = sq.value + options.alpha * self.value + options.beta * others.value;

  out.grad_relaxed = std::move(sq.grad);
  for (std::size_t i = 0; i < out.grad_relaxed.size(); ++i)
    out.grad_relaxed[i] += options.alpha * self.grad_first[i] +
                           options.beta * others.grad_first[i];
  out.grad_erased = std::move(self.grad_second);
  scale(out.grad_erased, options.alpha);
  out.grad_positive = std::move(others.grad_second);
  scale(out.grad_positive, options.beta);
  return out;
}

}  // namespace erasehash
