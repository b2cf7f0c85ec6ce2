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
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "erasehash/attention.hpp"
#include "erasehash/backbone.hpp"
#include "erasehash/config.hpp"
#include "erasehash/dataset.hpp"
#include "erasehash/hash_layer.hpp"
#include "erasehash/objective.hpp"
#include "erasehash/random.hpp"
#include "erasehash/sgd.hpp"

namespace erasehash {

// Backbone plus hash layer: the query-side encoder.
struct Model {
  BackboneParams backbone;
  HashParams hash;

  std::size_t bits() const { return hash.bits(); }
  Tensor encode(const Tensor& image) const;  // relaxed code u
  SignCode code(const Tensor& image) const;  // binarised u
  std::vector<Tensor*> parameters();
  void zero_grad();

  friend bool operator==(const Model&, const Model&) = default;
};

Model init_model(const Architecture& arch, std::size_t bits, std::uint64_t seed);

// "FGHK" checkpoint: architecture JSON and parameter tensors, sealed by CRC32.
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

// Network-side binary codes of the given dataset images.
BitCodeMatrix encode_codes(const Model& model, const Dataset& dataset,
                           std::span<const std::size_t> ids);

// ---- discrete step over the database codes V ----

// Q = S^T U: [n x k].
Tensor compute_q(const SimilarityMatrix& similarity, const Tensor& relaxed);

// Re-solves column m of V in closed form with every other column fixed.
void update_v_column(BitCodeMatrix& database, const Tensor& relaxed, const Tensor& q,
                     std::size_t column, ColumnRule rule = ColumnRule::kDerived);

struct SweepReport {
  std::size_t changed_bits = 0;
  double loss_before = 0.0;
  double loss_after = 0.0;
};

// `passes` sweeps over the columns 0..k-1. With `check` set, the similarity
// loss is re-evaluated after each column and an increase throws Error.
SweepReport update_v(BitCodeMatrix& database, const Tensor& relaxed,
                     const SimilarityMatrix& similarity, std::size_t passes,
                     ColumnRule rule = ColumnRule::kDerived, bool check = false);

// ---- network step ----

// One mini-batch of triplets. Branches that carry no weight in the loss are
// left empty and their codes are taken equal to the anchor codes.
struct TripletBatch {
  std::vector<Tensor> anchors;
  std::vector<Tensor> erased;     // empty, or one per anchor
  std::vector<Tensor> positives;  // empty, or one per anchor
  SimilarityMatrix similarity;    // rows of the anchors
};

// Runs the batch forward and backward, then applies one SGD update.
// Returns the batch loss evaluated before the update.
LossTerms theta_step(Model& model, SgdState& sgd, const TripletBatch& batch,
                     const BitCodeMatrix& database, const ObjectiveOptions& options);

// Loss of a batch without touching the parameters.
LossTerms evaluate_batch(const Model& model, const TripletBatch& batch,
                         const BitCodeMatrix& database, const ObjectiveOptions& options);

struct LogRow {
  std::size_t iteration = 0;
  std::size_t epoch = 0;
  LossTerms terms;
};

std::string log_csv(const std::vector<LogRow>& log);

struct Triplet {
  std::size_t row = 0;       // position in the round's sample
  std::size_t anchor = 0;    // database index
  std::size_t positive = 0;  // database index
  Tensor erased;             // empty when the erased branch is unused
};

struct TrainResult {
  Model model;
  HashDatabase database;
  std::vector<LogRow> log;
};

// Alternates network epochs (V fixed) with column sweeps over V (network
// fixed). The train split is the database.
class Trainer {
 public:
  Trainer(const Dataset& dataset, TrainConfig config);

  void run();
  void run_iteration();

  std::size_t iteration() const { return iteration_; }
  const Model& model() const { return model_; }
  Model& model() { return model_; }
  const BitCodeMatrix& database_codes() const { return database_; }
  const std::vector<LogRow>& log() const { return log_; }
  const TrainConfig& config() const { return config_; }
  HashDatabase database() const;
  TrainResult result() const;

  // Called once per iteration with the fresh triplets, before any epoch.
  std::function<void(std::size_t iteration, const std::vector<Triplet>&,
                     const std::vector<Erasure>&)>
      on_triplets;

  bool uses_erased_branch() const { return config_.srem && config_.alpha > 0.0; }
  bool uses_positive_branch() const { return config_.beta > 0.0; }
  double learning_rate_for(std::size_t iteration) const;

 private:
  std::vector<Triplet> build_triplets(const RoundSample& round,
                                      std::vector<Erasure>* erasures);
  LossTerms run_epoch(const std::vector<Triplet>& triplets, const RoundSample& round);

  const Dataset& dataset_;
  TrainConfig config_;
  std::vector<std::size_t> db_ids_;
  std::vector<int> db_labels_;
  Model model_;
  BitCodeMatrix database_;
  SgdState sgd_;
  Rng sample_rng_;
  Rng positive_rng_;
  Rng shuffle_rng_;
  std::size_t iteration_ = 0;
  std::vector<LogRow> log_;
};

TrainResult train(const Dataset& dataset, const TrainConfig& config);

}  // namespace erasehash
