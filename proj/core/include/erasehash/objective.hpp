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

#include "erasehash/dataset.hpp"
#include "erasehash/hash_layer.hpp"
#include "erasehash/tensor.hpp"

namespace erasehash {

// sum_i sum_j (u_i . v_j - k s_ij)^2 over the rows of U [r x k] and the
// database codes V; gradient 2 sum_j (u_i . v_j - k s_ij) v_j per row.
struct SimilarityLoss {
  double value = 0.0;
  Tensor grad;  // [r x k]
};

SimilarityLoss loss_sq(const Tensor& relaxed, const BitCodeMatrix& database,
                       const SimilarityMatrix& similarity);
// Same, with V given as a dense [n x k] matrix of +-1.
SimilarityLoss loss_sq(const Tensor& relaxed, const Tensor& database,
                       const SimilarityMatrix& similarity);

// sum of squared entry differences between two code matrices of one shape.
struct PairLoss {
  double value = 0.0;
  Tensor grad_first;   //  2 (a - b)
  Tensor grad_second;  // -2 (a - b)
};

PairLoss loss_self(const Tensor& relaxed, const Tensor& erased);
PairLoss loss_others(const Tensor& relaxed, const Tensor& positive);

double esrl(const Tensor& relaxed, const Tensor& erased, const Tensor& positive,
            double alpha, double beta);

struct LossTerms {
  double l_sq = 0.0;
  double l_self = 0.0;
  double l_others = 0.0;
  double total = 0.0;
  double alpha = 0.0;
  double beta = 0.0;

  LossTerms& operator+=(const LossTerms& other);
};

struct ObjectiveOptions {
  double alpha = 1.0;
  double beta = 1.0;
  // Divide each term by its number of summands (r n for the similarity
  // term, r k for the pair terms).
  bool normalized = false;
};

struct Objective {
  LossTerms terms;
  Tensor grad_relaxed;   // d total / d U
  Tensor grad_erased;    // d total / d U~
  Tensor grad_positive;  // d total / d U^P
};

Objective loss_total(const Tensor& relaxed, const Tensor& erased,
                     const Tensor& positive, const BitCodeMatrix& database,
                     const SimilarityMatrix& similarity, const ObjectiveOptions& options);

}  // namespace erasehash
