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

#include "erasehash/evaluation.hpp"

#include <algorithm>
#include <sstream>
#include <string>

#include "erasehash/errors.hpp"
#include "erasehash/serialize.hpp"
#include "json.hpp"

namespace erasehash {

double average_precision(std::span<const std::uint8_t> flags) {
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < flags.size(); ++rank) {
    if (!flags[rank]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
  }
  return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

double mean_ap(std::span<const double> average_precisions) {
  if (average_precisions.empty()) throw ConfigError("mean_ap: no queries");
  double sum = 0.0;
  for (double ap : average_precisions) sum += ap;
  return sum / static_cast<double>(average_precisions.size());
}

double precision_at(std::span<const std::uint8_t> flags, std::size_t cutoff) {
  if (cutoff < 1 || cutoff > flags.size())
    throw ConfigError("precision_at: cutoff " + std::to_string(cutoff) +
                      " outside [1, " + std::to_string(flags.size()) + "]");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < cutoff; ++i) hits += flags[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(cutoff);
}

std::size_t RetrievalRun::correct() const {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), 1));
}

RetrievalRun retrieve(const HammingIndex& index, CodeView query, int query_label,
                      std::size_t query_id, std::size_t cutoff) {
  RetrievalRun run;
  run.query_id = query_id;
  const auto ranked = index.query_topk(query, cutoff == 0 ? std::max<std::size_t>(index.size(), 1)
                                                          : cutoff);
  run.flags.reserve(ranked.size());
  for (const Neighbor& nb : ranked)
    run.flags.push_back(index.labels()[nb.id] == query_label ? 1 : 0);
  return run;
}

EvaluationReport evaluate_codes(const HammingIndex& index, const BitCodeMatrix& query_codes,
                                std::span<const int> query_labels,
                                std::span<const std::size_t> query_ids, std::size_t cutoff) {
  if (query_codes.size() != query_labels.size() || query_ids.size() != query_labels.size())
    throw DimensionError("evaluate: query codes, labels and ids differ in length");
  if (query_codes.size() == 0) throw ConfigError("evaluate: no queries");
  EvaluationReport report;
  report.cutoff = cutoff == 0 ? index.size() : cutoff;
  std::vector<double> aps;
  double p10_sum = 0.0;
  for (std::size_t q = 0; q < query_codes.size(); ++q) {
    const RetrievalRun run =
        retrieve(index, query_codes.code(q), query_labels[q], query_ids[q], cutoff);
    QueryResult result;
    result.query_id = query_ids[q];
    result.ap = average_precision(run.flags);
    result.precision_at_10 =
        run.flags.empty() ? 0.0 : precision_at(run.flags, std::min<std::size_t>(10, run.flags.size()));
    aps.push_back(result.ap);
    p10_sum += result.precision_at_10;
    report.queries.push_back(result);
  }
  report.map = mean_ap(aps);
  report.mean_precision_at_10 = p10_sum / static_cast<double>(report.queries.size());
  return report;
}

EvaluationReport evaluate(const HammingIndex& index, const Model& model,
                          const Dataset& dataset, std::size_t cutoff) {
  const auto db_ids = dataset.database_ids();
  if (dataset.labels_of(db_ids) != index.labels())
    throw ConfigError("evaluate: index labels do not match the dataset's database split");
  if (model.bits() != index.bits())
    throw DimensionError("evaluate: model emits " + std::to_string(model.bits()) +
                         "-bit codes, index holds " + std::to_string(index.bits()));
  const auto query_ids = dataset.query_ids();
  const BitCodeMatrix codes = encode_codes(model, dataset, query_ids);
  return evaluate_codes(index, codes, dataset.labels_of(query_ids), query_ids, cutoff);
}

std::string results_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out.precision(17);
  out << "query_id,ap,p@10\n";
  for (const QueryResult& q : report.queries)
    out << q.query_id << ',' << q.ap << ',' << q.precision_at_10 << '\n';
  return out.str();
}

std::string summary_json(const EvaluationReport& report, const ReportContext& context) {
  nlohmann::ordered_json j;
  j["map"] = report.map;
  j["p@10"] = report.mean_precision_at_10;
  j["queries"] = report.queries.size();
  j["cutoff"] = report.cutoff;
  j["config_hash"] = context.config_hash;
  j["seeds"] = {{"train", context.train_seed}, {"data", context.data_seed}};
  return j.dump(2) + "\n";
}

void write_report(const std::filesystem::path& directory, const EvaluationReport& report,
                  const ReportContext& context) {
  write_text_file(directory / "results.csv", results_csv(report));
  write_text_file(directory / "summary.json", summary_json(report, context));
}

}  // namespace erasehash
