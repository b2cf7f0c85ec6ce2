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

#include "erasehash/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "erasehash/errors.hpp"
#include "erasehash/serialize.hpp"

namespace erasehash {
namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

// Random streams of a training run.
constexpr std::uint64_t kBackboneStream = 11;
constexpr std::uint64_t kHashStream = 12;
constexpr std::uint64_t kCodeStream = 13;
constexpr std::uint64_t kSampleStream = 14;
constexpr std::uint64_t kPositiveStream = 15;
constexpr std::uint64_t kShuffleStream = 16;

Tensor stack_rows(const std::vector<Tensor>& rows, std::size_t width) {
  Tensor out({rows.size(), width});
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy(rows[i].values().begin(), rows[i].values().end(), out.data() + i * width);
  return out;
}

std::span<const double> row_of(const Tensor& m, std::size_t i) {
  return m.values().subspan(i * m.dim(1), m.dim(1));
}

struct Encoded {
  std::vector<BackboneTrace> traces;
  std::vector<Tensor> codes;
};

Encoded encode_all(const Model& model, const std::vector<Tensor>& images) {
  Encoded out;
  out.traces.reserve(images.size());
  out.codes.reserve(images.size());
  for (const Tensor& image : images) {
    out.traces.push_back(backbone_forward(image, model.backbone));
    out.codes.push_back(hash_forward(out.traces.back().embedding, model.hash));
  }
  return out;
}

void backpropagate(Model& model, Encoded& encoded, const Tensor& grad_codes) {
  for (std::size_t i = 0; i < encoded.codes.size(); ++i) {
    const Tensor grad_embedding =
        hash_backward(row_of(grad_codes, i), encoded.traces[i].embedding,
                      encoded.codes[i], model.hash);
    backbone_backward(encoded.traces[i], grad_embedding.values(), model.backbone);
  }
}

struct BatchForward {
  Encoded anchors, erased, positives;
  Tensor relaxed, relaxed_erased, relaxed_positive;
};

BatchForward forward_batch(const Model& model, const TripletBatch& batch) {
  const std::size_t b = batch.anchors.size(), k = model.bits();
  if (batch.similarity.rows() != b)
    throw DimensionError("triplet batch: similarity rows do not match anchors");
  if (!batch.erased.empty() && batch.erased.size() != b)
    throw DimensionError("triplet batch: erased images do not match anchors");
  if (!batch.positives.empty() && batch.positives.size() != b)
    throw DimensionError("triplet batch: positives do not match anchors");

  BatchForward f;
  f.anchors = encode_all(model, batch.anchors);
  f.relaxed = stack_rows(f.anchors.codes, k);
  if (batch.erased.empty()) {
    f.relaxed_erased = f.relaxed;
  } else {
    f.erased = encode_all(model, batch.erased);
    f.relaxed_erased = stack_rows(f.erased.codes, k);
  }
  if (batch.positives.empty()) {
    f.relaxed_positive = f.relaxed;
  } else {
    f.positives = encode_all(model, batch.positives);
    f.relaxed_positive = stack_rows(f.positives.codes, k);
  }
  return f;
}

}  // namespace

Tensor Model::encode(const Tensor& image) const {
  return hash_forward(backbone_forward(image, backbone).embedding, hash);
}

SignCode Model::code(const Tensor& image) const { return binarize(encode(image).values()); }

std::vector<Tensor*> Model::parameters() {
  std::vector<Tensor*> out = backbone.parameters();
  out.push_back(&hash.weight);
  out.push_back(&hash.bias);
  return out;
}

void Model::zero_grad() {
  for (Tensor* p : parameters()) p->ensure_grad().zero_grad();
}

Model init_model(const Architecture& arch, std::size_t bits, std::uint64_t seed) {
  Rng backbone_rng = make_rng(seed, kBackboneStream);
  Rng hash_rng = make_rng(seed, kHashStream);
  Model model{init_backbone(arch, backbone_rng()), HashParams{}};
  model.hash = init_hash_layer(bits, arch.embedding_size(), hash_rng());
  return model;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  ByteWriter out;
  out.text("FGHK");
  out.u32(kCheckpointVersion);
  out.prefixed_text(model.backbone.arch.to_json());
  out.u32(static_cast<std::uint32_t>(model.bits()));
  for (std::size_t i = 0; i < model.backbone.kernels.size(); ++i) {
    out.tensor(model.backbone.kernels[i]);
    out.tensor(model.backbone.biases[i]);
  }
  out.tensor(model.hash.weight);
  out.tensor(model.hash.bias);
  out.seal();
  write_file(path, out.bytes());
}

Model load_checkpoint(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  ByteReader in(bytes);
  in.expect_magic("FGHK");
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion)
    throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  Model model;
  try {
    model.backbone.arch = Architecture::from_json(in.prefixed_text());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: bad architecture: ") + e.what());
  }
  const std::uint32_t bits = in.u32();
  const Architecture& arch = model.backbone.arch;
  std::size_t prev = arch.in_channels;
  for (std::size_t c : arch.channels) {
    model.backbone.kernels.push_back(in.tensor());
    model.backbone.biases.push_back(in.tensor());
    if (model.backbone.kernels.back().shape() != Shape{c, prev, arch.kernel, arch.kernel} ||
        model.backbone.biases.back().shape() != Shape{c})
      throw FormatError("checkpoint: parameter shape does not match architecture");
    prev = c;
  }
  model.hash.weight = in.tensor();
  model.hash.bias = in.tensor();
  in.verify_seal();
  if (model.hash.weight.shape() != Shape{bits, arch.embedding_size()} ||
      model.hash.bias.shape() != Shape{bits})
    throw FormatError("checkpoint: hash layer shape does not match architecture");
  return model;
}

BitCodeMatrix encode_codes(const Model& model, const Dataset& dataset,
                           std::span<const std::size_t> ids) {
  BitCodeMatrix codes(0, model.bits());
  for (std::size_t id : ids) codes.push_back(model.code(dataset.image(id)));
  return codes;
}

Tensor compute_q(const SimilarityMatrix& similarity, const Tensor& relaxed) {
  require_rank(relaxed, 2, "compute_q U");
  const std::size_t r = relaxed.dim(0), k = relaxed.dim(1), n = similarity.cols();
  if (similarity.rows() != r)
    throw DimensionError("compute_q: S has " + std::to_string(similarity.rows()) +
                         " rows but U has " + std::to_string(r));
  Tensor q({n, k});
  for (std::size_t i = 0; i < r; ++i) {
    const auto s = similarity.row(i);
    const double* u = relaxed.data() + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      double* out = q.data() + j * k;
      const double sign = s[j];
      for (std::size_t b = 0; b < k; ++b) out[b] += sign * u[b];
    }
  }
  return q;
}

void update_v_column(BitCodeMatrix& database, const Tensor& relaxed, const Tensor& q,
                     std::size_t column, ColumnRule rule) {
  const std::size_t k = database.bits(), n = database.size();
  if (column >= k)
    throw DimensionError("update_v_column: column " + std::to_string(column) +
                         " out of range for k = " + std::to_string(k));
  require_rank(relaxed, 2, "update_v_column U");
  if (relaxed.dim(1) != k) throw DimensionError("update_v_column: U width differs from k");
  require_shape(q, {n, k}, "update_v_column Q");

  // coupling[c] = U_{*c} . U_{*m} for every other column c
  const std::size_t r = relaxed.dim(0);
  std::vector<double> coupling(k, 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    const double um = relaxed.at(i, column);
    for (std::size_t c = 0; c < k; ++c)
      if (c != column) coupling[c] += relaxed.at(i, c) * um;
  }
  const double weight = rule == ColumnRule::kDerived ? static_cast<double>(k)
                                                     : 2.0 * static_cast<double>(k);
  for (std::size_t j = 0; j < n; ++j) {
    double cross = 0.0;
    for (std::size_t c = 0; c < k; ++c)
      if (c != column) cross += database.value(j, c) * coupling[c];
    database.set_value(j, column, weight * q.at(j, column) - cross >= 0.0 ? 1 : -1);
  }
}

SweepReport update_v(BitCodeMatrix& database, const Tensor& relaxed,
                     const SimilarityMatrix& similarity, std::size_t passes,
                     ColumnRule rule, bool check) {
  const Tensor q = compute_q(similarity, relaxed);
  const BitCodeMatrix before = database;
  SweepReport report;
  report.loss_before = loss_sq(relaxed, database, similarity).value;
  double current = report.loss_before;
  for (std::size_t pass = 0; pass < passes; ++pass) {
    for (std::size_t m = 0; m < database.bits(); ++m) {
      update_v_column(database, relaxed, q, m, rule);
      if (check) {
        const double next = loss_sq(relaxed, database, similarity).value;
        if (next > current + 1e-9 * std::max(1.0, std::abs(current)))
          throw Error("update_v: column " + std::to_string(m) +
                      " increased the similarity loss");
        current = next;
      }
    }
  }
  report.loss_after = check ? current : loss_sq(relaxed, database, similarity).value;
  for (std::size_t i = 0; i < database.size(); ++i)
    for (std::size_t j = 0; j < database.bits(); ++j)
      if (database.value(i, j) != before.value(i, j)) ++report.changed_bits;
  return report;
}

LossTerms evaluate_batch(const Model& model, const TripletBatch& batch,
                         const BitCodeMatrix& database, const ObjectiveOptions& options) {
  const BatchForward f = forward_batch(model, batch);
  return loss_total(f.relaxed, f.relaxed_erased, f.relaxed_positive, database,
                    batch.similarity, options)
      .terms;
}

LossTerms theta_step(Model& model, SgdState& sgd, const TripletBatch& batch,
                     const BitCodeMatrix& database, const ObjectiveOptions& options) {
  BatchForward f = forward_batch(model, batch);
  const Objective objective = loss_total(f.relaxed, f.relaxed_erased, f.relaxed_positive,
                                         database, batch.similarity, options);
  model.zero_grad();
  backpropagate(model, f.anchors, objective.grad_relaxed);
  if (!batch.erased.empty()) backpropagate(model, f.erased, objective.grad_erased);
  if (!batch.positives.empty()) backpropagate(model, f.positives, objective.grad_positive);
  const auto params = model.parameters();
  sgd_step(params, sgd);
  return objective.terms;
}

std::string log_csv(const std::vector<LogRow>& log) {
  std::ostringstream out;
  out.precision(17);
  out << "iteration,epoch,l_sq,l_self,l_others,total\n";
  for (const LogRow& row : log)
    out << row.iteration << ',' << row.epoch << ',' << row.terms.l_sq << ','
        << row.terms.l_self << ',' << row.terms.l_others << ',' << row.terms.total << '\n';
  return out.str();
}

Trainer::Trainer(const Dataset& dataset, TrainConfig config)
    : dataset_(dataset), config_(std::move(config)) {
  config_.validate();
  db_ids_ = dataset_.database_ids();
  db_labels_ = dataset_.labels_of(db_ids_);
  if (config_.samples > db_ids_.size())
    throw ConfigError("config: \"r\" = " + std::to_string(config_.samples) +
                      " exceeds the database size " + std::to_string(db_ids_.size()));

  Architecture arch;
  arch.in_channels = dataset_.channels();
  arch.height = dataset_.height();
  arch.width = dataset_.width();
  arch.channels = config_.channels;
  arch.strides.assign(config_.channels.size(), 2);
  try {
    arch.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config: \"channels\": ") + e.what());
  }
  if (uses_erased_branch() &&
      config_.eraser_size > std::min(dataset_.height(), dataset_.width()))
    throw ConfigError("config: \"l\" exceeds the image size");
  if (uses_erased_branch() && config_.erasers > dataset_.height() * dataset_.width())
    throw ConfigError("config: \"n_e\" exceeds the pixel count");

  model_ = init_model(arch, config_.bits, config_.seed);

  Rng code_rng = make_rng(config_.seed, kCodeStream);
  database_ = BitCodeMatrix(db_ids_.size(), config_.bits);
  std::vector<std::int8_t> column(db_ids_.size());
  for (std::size_t j = 0; j < database_.bits(); ++j) {
    for (std::size_t i = 0; i < column.size(); ++i) column[i] = 2 * i < column.size() ? 1 : -1;
    std::shuffle(column.begin(), column.end(), code_rng);
    for (std::size_t i = 0; i < column.size(); ++i) database_.set_value(i, j, column[i]);
  }

  const auto params = model_.parameters();
  sgd_ = make_sgd_state(params, config_.learning_rate, config_.momentum,
                        config_.weight_decay);
  sgd_.clip_norm = config_.grad_clip;
  sample_rng_ = make_rng(config_.seed, kSampleStream);
  positive_rng_ = make_rng(config_.seed, kPositiveStream);
  shuffle_rng_ = make_rng(config_.seed, kShuffleStream);
}

double Trainer::learning_rate_for(std::size_t iteration) const {
  double lr = config_.learning_rate;
  for (std::size_t milestone : config_.lr_milestones)
    if (iteration >= milestone) lr /= 10.0;
  return lr;
}

std::vector<Triplet> Trainer::build_triplets(const RoundSample& round,
                                             std::vector<Erasure>* erasures) {
  const EraserConfig eraser{config_.erasers, config_.eraser_size, config_.epsilon};
  std::vector<Triplet> triplets;
  triplets.reserve(round.ids.size());
  for (std::size_t row = 0; row < round.ids.size(); ++row) {
    Triplet t;
    t.row = row;
    t.anchor = round.ids[row];
    t.positive = uses_positive_branch()
                     ? pick_positive(row, round.similarity, positive_rng_)
                     : t.anchor;
    if (uses_erased_branch()) {
      const Tensor image = dataset_.image(db_ids_[t.anchor]);
      Extraction features = extract(image, model_.backbone, db_ids_[t.anchor]);
      Erasure erasure = erase_with_attention(image, features.map, eraser);
      t.erased = erasure.erased;
      if (erasures) erasures->push_back(std::move(erasure));
    }
    triplets.push_back(std::move(t));
  }
  return triplets;
}

LossTerms Trainer::run_epoch(const std::vector<Triplet>& triplets, const RoundSample& round) {
  std::vector<std::size_t> order(triplets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), shuffle_rng_);

  const ObjectiveOptions options{config_.alpha, config_.beta, config_.normalized_loss};
  LossTerms epoch{0, 0, 0, 0, config_.alpha, config_.beta};
  for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
    const std::size_t end = std::min(order.size(), start + config_.batch_size);
    TripletBatch batch;
    std::vector<std::size_t> rows;
    for (std::size_t p = start; p < end; ++p) {
      const Triplet& t = triplets[order[p]];
      rows.push_back(t.row);
      batch.anchors.push_back(dataset_.image(db_ids_[t.anchor]));
      if (uses_erased_branch()) batch.erased.push_back(t.erased);
      if (uses_positive_branch()) batch.positives.push_back(dataset_.image(db_ids_[t.positive]));
    }
    batch.similarity = round.similarity.select_rows(rows);
    epoch += theta_step(model_, sgd_, batch, database_, options);
  }
  return epoch;
}

void Trainer::run_iteration() {
  sgd_.learning_rate = learning_rate_for(iteration_);
  const RoundSample round = sample_round(db_labels_, config_.samples, sample_rng_);

  std::vector<Erasure> erasures;
  const std::vector<Triplet> triplets =
      build_triplets(round, on_triplets ? &erasures : nullptr);
  if (on_triplets) on_triplets(iteration_, triplets, erasures);

  for (std::size_t epoch = 0; epoch < config_.epochs_per_iteration; ++epoch)
    log_.push_back({iteration_, epoch, run_epoch(triplets, round)});

  std::vector<Tensor> codes;
  codes.reserve(round.ids.size());
  for (std::size_t id : round.ids) codes.push_back(model_.encode(dataset_.image(db_ids_[id])));
  const Tensor relaxed = stack_rows(codes, config_.bits);
  update_v(database_, relaxed, round.similarity, config_.v_passes, config_.column_rule,
           config_.debug_checks);
  ++iteration_;
}

void Trainer::run() {
  while (iteration_ < config_.iterations) run_iteration();
}

HashDatabase Trainer::database() const { return {database_, db_labels_}; }

TrainResult Trainer::result() const { return {model_, database(), log_}; }

TrainResult train(const Dataset& dataset, const TrainConfig& config) {
  Trainer trainer(dataset, config);
  trainer.run();
  return trainer.result();
}

}  // namespace erasehash
