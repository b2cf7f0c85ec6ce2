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

#include "erasehash/dataset.hpp"
#include "erasehash/index.hpp"
#include "erasehash/trainer.hpp"

namespace erasehash {

// Precision averaged over the ranks that hold a relevant item, within the
// given (already truncated) ranking. Zero when nothing relevant is retrieved.
double average_precision(std::span<const std::uint8_t> flags);

// Arithmetic mean, summed in order. Throws ConfigError on an empty set.
double mean_ap(std::span<const double> average_precisions);

// Fraction of relevant items among the first `cutoff` flags.
double precision_at(std::span<const std::uint8_t> flags, std::size_t cutoff);

// Ranked relevance flags of one query.
struct RetrievalRun {
  std::size_t query_id = 0;
  std::vector<std::uint8_t> flags;
  std::size_t correct() const;
};

RetrievalRun retrieve(const HammingIndex& index, CodeView query, int query_label,
                      std::size_t query_id, std::size_t cutoff);

struct QueryResult {
  std::size_t query_id = 0;
  double ap = 0.0;
  double precision_at_10 = 0.0;
};

struct EvaluationReport {
  std::vector<QueryResult> queries;
  double map = 0.0;
  double mean_precision_at_10 = 0.0;
  std::size_t cutoff = 0;
};

// Encodes every query-split image with the model, ranks the index by
// Hamming distance and scores AP at `cutoff` (0 = the whole database).
EvaluationReport evaluate(const HammingIndex& index, const Model& model,
                          const Dataset& dataset, std::size_t cutoff = 0);

// Same with precomputed query codes (one per query id, in order).
EvaluationReport evaluate_codes(const HammingIndex& index, const BitCodeMatrix& query_codes,
                                std::span<const int> query_labels,
                                std::span<const std::size_t> query_ids, std::size_t cutoff = 0);

struct ReportContext {
  std::string config_hash;
  std::uint64_t train_seed = 0;
  std::uint64_t data_seed = 0;
};

std::string results_csv(const EvaluationReport& report);
std::string summary_json(const EvaluationReport& report, const ReportContext& context);
// Writes results.csv and summary.json into `directory`.
void write_report(const std::filesystem::path& directory, const EvaluationReport& report,
                  const ReportContext& context);

}  // namespace erasehash
