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

#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <exception>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "erasehash/config.hpp"
#include "erasehash/dataset.hpp"
#include "erasehash/errors.hpp"
#include "erasehash/evaluation.hpp"
#include "erasehash/index.hpp"
#include "erasehash/serialize.hpp"
#include "erasehash/trainer.hpp"
#include "json.hpp"

namespace erasehash::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kVersion = "1.0.0";

constexpr const char* kUsageText =
    "usage: erasehash <verb> [options]\n"
    "\n"
    "verbs:\n"
    "  generate-data  --out DIR [--seed N] [--classes N --motif-size N ...]\n"
    "  train          --data FILE --out DIR [--config FILE] [--dump-masks] [--<key> VALUE ...]\n"
    "  build-db       --data FILE --checkpoint FILE --out DIR\n"
    "  query          --data FILE --checkpoint FILE --db FILE --id N [--top K] --out DIR\n"
    "  eval           --data FILE --checkpoint FILE --db FILE --out DIR [--cutoff K]\n"
    "  ablate         --data FILE --out DIR --grid n_e=2,8,16 l=3,5,9 [--config FILE]\n"
    "\n"
    "Training keys may be overridden with --kebab-case flags, e.g. --lr 0.01 --n-e 8.\n"
    "Run `erasehash <verb> --help` for the options of one verb.\n";

// JSON spelling of every training key that can be overridden from the
// command line.
const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "k",           "r",        "iterations", "epochs_per_iteration", "batch_size",
      "lr",          "lr_milestones", "momentum", "weight_decay", "grad_clip",
      "alpha",       "beta",     "n_e",        "l",           "epsilon",
      "seed",        "v_passes", "srem",       "normalized_loss", "column_update",
      "debug_checks", "channels"};
  return keys;
}

const std::vector<std::string>& generator_keys() {
  static const std::vector<std::string> keys{
      "classes",    "per_class",       "height",         "width",
      "query_fraction", "motif_size", "background_pool", "noise_stddev"};
  return keys;
}

std::string kebab(std::string key) {
  for (char& c : key)
    if (c == '_') c = '-';
  return "--" + key;
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buffer;
}

// Collects the files a verb writes and emits manifest.json at the end.
class Manifest {
 public:
  explicit Manifest(fs::path out) : out_(std::move(out)), started_(timestamp()) {
    fs::create_directories(out_);
  }

  fs::path file(const std::string& name) {
    fs::path path = out_ / name;
    artifacts_.push_back(path.string());
    return path;
  }

  void finish(const std::string& config_hash, std::uint64_t seed) const {
    ordered_json m;
    m["config_hash"] = config_hash;
    m["seed"] = seed;
    m["artifact_paths"] = artifacts_;
    m["started_at"] = started_;
    m["finished_at"] = timestamp();
    m["version"] = kVersion;
    write_text_file(out_ / "manifest.json", m.dump(2) + "\n");
  }

 private:
  fs::path out_;
  std::string started_;
  std::vector<std::string> artifacts_;
};

// Registers one string option per key and turns the given ones into
// overrides, in key order.
class OverrideFlags {
 public:
  OverrideFlags(CLI::App& app, const std::vector<std::string>& keys) {
    for (const std::string& key : keys)
      app.add_option(kebab(key), values_[key], "override \"" + key + "\"");
  }

  std::vector<std::pair<std::string, std::string>> given(const CLI::App& app) const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [key, value] : values_)
      if (app.count(kebab(key)) > 0) out.emplace_back(key, value);
    return out;
  }

 private:
  std::map<std::string, std::string> values_;
};

TrainConfig load_train_config(const std::string& path, const ConfigOverrides& overrides) {
  if (path.empty()) return parse_config_text("{}", overrides);
  return parse_config(path, overrides);
}

// Reads a bare override value as JSON when it parses, else as a string.
json loose_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return text;
  }
}

HashDatabase network_database(const Model& model, const Dataset& dataset) {
  const std::vector<std::size_t> ids = dataset.database_ids();
  return {encode_codes(model, dataset, ids), dataset.labels_of(ids)};
}

void check_compatible(const Model& model, const Dataset& dataset, const HashDatabase& db) {
  const Architecture& arch = model.backbone.arch;
  if (arch.in_channels != dataset.channels() || arch.height != dataset.height() ||
      arch.width != dataset.width())
    throw DimensionError("checkpoint expects " + std::to_string(arch.height) + "x" +
                         std::to_string(arch.width) + " images, dataset has " +
                         std::to_string(dataset.height()) + "x" +
                         std::to_string(dataset.width()));
  if (db.codes.bits() != model.bits())
    throw DimensionError("database holds " + std::to_string(db.codes.bits()) +
                         "-bit codes but the checkpoint emits " +
                         std::to_string(model.bits()));
}

// Config hash and train seed for a report: from --config when given,
// otherwise from config.json beside the checkpoint.
ReportContext report_context(const std::string& config_path, const fs::path& checkpoint,
                             const Dataset& dataset) {
  fs::path path = config_path;
  if (path.empty() && fs::exists(checkpoint.parent_path() / "config.json"))
    path = checkpoint.parent_path() / "config.json";
  ReportContext context;
  context.data_seed = dataset.seed;
  if (!path.empty()) {
    const TrainConfig config = parse_config(path);
    context.config_hash = config_hash(config);
    context.train_seed = config.seed;
  }
  return context;
}

void dump_masks(const fs::path& dir, std::size_t iteration, const std::vector<Triplet>& triplets,
                const std::vector<Erasure>& erasures) {
  const fs::path iter_dir = dir / ("iteration_" + std::to_string(iteration));
  fs::create_directories(iter_dir);
  for (std::size_t t = 0; t < erasures.size(); ++t) {
    const std::string stem = "anchor_" + std::to_string(triplets[t].anchor);
    write_mask_pgm(iter_dir / (stem + "_attention.pgm"), erasures[t].attention.values);
    write_mask_pgm(iter_dir / (stem + "_mask.pgm"), erasures[t].mask.values);
    write_anchor_json(iter_dir / (stem + "_anchors.json"), erasures[t].mask);
  }
}

struct GridAxis {
  std::string key;
  std::vector<std::size_t> values;
};

GridAxis parse_axis(const std::string& token) {
  const auto eq = token.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == token.size())
    throw ConfigError("grid: expected key=v1,v2,... but got \"" + token + "\"");
  GridAxis axis{token.substr(0, eq), {}};
  if (axis.key != "n_e" && axis.key != "l")
    throw ConfigError("grid: only \"n_e\" and \"l\" can be swept, got \"" + axis.key + "\"");
  std::stringstream list(token.substr(eq + 1));
  std::string item;
  while (std::getline(list, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      axis.values.push_back(static_cast<std::size_t>(v));
    } catch (const std::logic_error&) {
      throw ConfigError("grid: \"" + axis.key + "\" value \"" + item +
                        "\" is not a positive integer");
    }
  }
  return axis;
}

// --- verbs -----------------------------------------------------------------

struct GenerateArgs {
  std::string out;
  std::uint64_t seed = 0;
};

int generate_data(const GenerateArgs& args, const ConfigOverrides& overrides, std::ostream& out) {
  json j = json::parse(GeneratorConfig{}.to_json());
  for (const auto& [key, value] : overrides) j[key] = loose_value(value);
  const GeneratorConfig config = GeneratorConfig::from_json(j.dump());
  const Dataset dataset = generate(config, args.seed);

  Manifest manifest(args.out);
  const fs::path path = manifest.file("dataset.fghd");
  save_dataset(dataset, path);
  manifest.finish(fingerprint(config.to_json()), args.seed);
  out << "wrote " << path.string() << " (" << dataset.size() << " images, "
      << dataset.query_ids().size() << " queries)\n";
  return kOk;
}

struct TrainArgs {
  std::string data, out, config;
  bool dump_masks = false;
};

int train_verb(const TrainArgs& args, const ConfigOverrides& overrides, std::ostream& out) {
  const TrainConfig config = load_train_config(args.config, overrides);
  const Dataset dataset = load_dataset(args.data);
  Manifest manifest(args.out);

  Trainer trainer(dataset, config);
  if (args.dump_masks) {
    const fs::path masks = fs::path(args.out) / "masks";
    trainer.on_triplets = [masks](std::size_t iteration, const std::vector<Triplet>& triplets,
                                  const std::vector<Erasure>& erasures) {
      dump_masks(masks, iteration, triplets, erasures);
    };
  }
  while (trainer.iteration() < config.iterations) {
    trainer.run_iteration();
    const LossTerms& last = trainer.log().back().terms;
    out << "iteration " << trainer.iteration() << "/" << config.iterations
        << "  loss " << last.total << "\n";
  }

  write_text_file(manifest.file("config.json"), config.to_json() + "\n");
  save_checkpoint(trainer.model(), manifest.file("checkpoint.fghk"));
  save_hash_database(trainer.database(), manifest.file("database.fghv"));
  write_text_file(manifest.file("train_log.csv"), log_csv(trainer.log()));
  manifest.finish(config_hash(config), config.seed);
  return kOk;
}

struct ModelArgs {
  std::string data, checkpoint, db, out, config;
  std::size_t id = 0;
  std::size_t top = 10;
  std::size_t cutoff = 0;
};

int build_db(const ModelArgs& args, std::ostream& out) {
  const Dataset dataset = load_dataset(args.data);
  const Model model = load_checkpoint(args.checkpoint);
  const HashDatabase db = network_database(model, dataset);
  check_compatible(model, dataset, db);
  Manifest manifest(args.out);
  const fs::path path = manifest.file("database.fghv");
  save_hash_database(db, path);
  manifest.finish(report_context(args.config, args.checkpoint, dataset).config_hash,
                  dataset.seed);
  out << "wrote " << path.string() << " (" << db.codes.size() << " codes, "
      << db.codes.bits() << " bits)\n";
  return kOk;
}

int query_verb(const ModelArgs& args, std::ostream& out) {
  const Dataset dataset = load_dataset(args.data);
  const Model model = load_checkpoint(args.checkpoint);
  const HashDatabase db = load_hash_database(args.db);
  check_compatible(model, dataset, db);
  if (args.id >= dataset.size())
    throw ConfigError("query: --id " + std::to_string(args.id) + " is outside the dataset (" +
                      std::to_string(dataset.size()) + " images)");
  const HammingIndex index = build_index(db);
  BitCodeMatrix query(0, model.bits());
  query.push_back(model.code(dataset.image(args.id)));
  const std::vector<Neighbor> hits = index.query_topk(query.code(0), args.top);

  const std::vector<std::size_t> db_ids = dataset.database_ids();
  std::ostringstream csv;
  csv << "rank,database_index,image_id,distance,label,relevant\n";
  const int label = dataset.labels.at(args.id);
  for (std::size_t rank = 0; rank < hits.size(); ++rank) {
    const Neighbor& h = hits[rank];
    const int hit_label = db.labels.at(h.id);
    csv << rank + 1 << ',' << h.id << ',' << (h.id < db_ids.size() ? db_ids[h.id] : h.id) << ','
        << h.distance << ',' << hit_label << ',' << (hit_label == label ? 1 : 0) << '\n';
  }
  Manifest manifest(args.out);
  write_text_file(manifest.file("neighbors.csv"), csv.str());
  manifest.finish(report_context(args.config, args.checkpoint, dataset).config_hash,
                  dataset.seed);
  out << csv.str();
  return kOk;
}

int eval_verb(const ModelArgs& args, std::ostream& out) {
  const Dataset dataset = load_dataset(args.data);
  const Model model = load_checkpoint(args.checkpoint);
  const HashDatabase db = load_hash_database(args.db);
  check_compatible(model, dataset, db);
  if (db.codes.size() != dataset.database_ids().size())
    throw DimensionError("database holds " + std::to_string(db.codes.size()) +
                         " codes but the dataset has " +
                         std::to_string(dataset.database_ids().size()) + " train images");
  const HammingIndex index = build_index(db);
  const EvaluationReport report = evaluate(index, model, dataset, args.cutoff);
  const ReportContext context = report_context(args.config, args.checkpoint, dataset);

  Manifest manifest(args.out);
  manifest.file("results.csv");
  manifest.file("summary.json");
  write_report(args.out, report, context);
  manifest.finish(context.config_hash, context.train_seed);
  out << "MAP " << report.map << "  P@10 " << report.mean_precision_at_10 << "  ("
      << report.queries.size() << " queries)\n";
  return kOk;
}

struct AblateArgs {
  std::string data, out, config;
  std::vector<std::string> grid;
};

int ablate_verb(const AblateArgs& args, const ConfigOverrides& overrides, std::ostream& out) {
  if (args.grid.size() != 2) throw ConfigError("grid: expected exactly two axes, n_e and l");
  GridAxis rows = parse_axis(args.grid[0]), cols = parse_axis(args.grid[1]);
  if (rows.key == cols.key) throw ConfigError("grid: axes must be n_e and l");
  if (rows.key == "l") std::swap(rows, cols);

  const TrainConfig base = load_train_config(args.config, overrides);
  const Dataset dataset = load_dataset(args.data);
  Manifest manifest(args.out);

  std::ostringstream csv;
  csv.precision(17);
  csv << "n_e\\l";
  for (std::size_t l : cols.values) csv << ',' << l;
  csv << '\n';
  for (std::size_t n_e : rows.values) {
    csv << n_e;
    for (std::size_t l : cols.values) {
      TrainConfig cell = base;
      cell.erasers = n_e;
      cell.eraser_size = l;
      cell.validate();
      const TrainResult result = train(dataset, cell);
      const EvaluationReport report = evaluate(build_index(result.database), result.model,
                                               dataset);
      out << "n_e " << n_e << "  l " << l << "  MAP " << report.map << "\n";
      csv << ',' << report.map;
    }
    csv << '\n';
  }
  write_text_file(manifest.file("ablation.csv"), csv.str());
  manifest.finish(config_hash(base), base.seed);
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) {
    err << kUsageText;
    return kUsage;
  }
  static const std::vector<std::string> verbs{"generate-data", "train", "build-db",
                                              "query",         "eval",  "ablate"};
  if (!args.front().starts_with("-") &&
      std::find(verbs.begin(), verbs.end(), args.front()) == verbs.end()) {
    err << "error: unknown verb \"" << args.front() << "\"\n\n" << kUsageText;
    return kUsage;
  }

  CLI::App app{"Attention-erasing deep hashing for fine-grained retrieval", "erasehash"};
  app.require_subcommand(1);

  GenerateArgs gen_args;
  CLI::App* gen = app.add_subcommand("generate-data", "write a synthetic dataset");
  gen->add_option("--out", gen_args.out, "output directory")->required();
  gen->add_option("--seed", gen_args.seed, "generator seed");
  OverrideFlags gen_flags(*gen, generator_keys());

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model and database codes");
  train_cmd->add_option("--data", train_args.data, "dataset file")->required();
  train_cmd->add_option("--out", train_args.out, "output directory")->required();
  train_cmd->add_option("--config", train_args.config, "JSON config file");
  train_cmd->add_flag("--dump-masks", train_args.dump_masks,
                      "write attention and erase masks as PGM plus anchor JSON");
  OverrideFlags train_flags(*train_cmd, config_keys());

  ModelArgs db_args;
  CLI::App* db_cmd = app.add_subcommand("build-db", "encode the database split with a checkpoint");
  db_cmd->add_option("--data", db_args.data, "dataset file")->required();
  db_cmd->add_option("--checkpoint", db_args.checkpoint, "checkpoint file")->required();
  db_cmd->add_option("--out", db_args.out, "output directory")->required();
  db_cmd->add_option("--config", db_args.config, "training config, for the manifest");

  ModelArgs query_args;
  CLI::App* query_cmd = app.add_subcommand("query", "rank the database for one image");
  query_cmd->add_option("--data", query_args.data, "dataset file")->required();
  query_cmd->add_option("--checkpoint", query_args.checkpoint, "checkpoint file")->required();
  query_cmd->add_option("--db", query_args.db, "hash database file")->required();
  query_cmd->add_option("--id", query_args.id, "dataset image id")->required();
  query_cmd->add_option("--top", query_args.top, "number of neighbours");
  query_cmd->add_option("--out", query_args.out, "output directory")->required();
  query_cmd->add_option("--config", query_args.config, "training config, for the manifest");

  ModelArgs eval_args;
  CLI::App* eval_cmd = app.add_subcommand("eval", "score the query split by MAP");
  eval_cmd->add_option("--data", eval_args.data, "dataset file")->required();
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--db", eval_args.db, "hash database file")->required();
  eval_cmd->add_option("--out", eval_args.out, "output directory")->required();
  eval_cmd->add_option("--cutoff", eval_args.cutoff, "rank cutoff K (0 = full ranking)");
  eval_cmd->add_option("--config", eval_args.config, "training config, for the report");

  AblateArgs ablate_args;
  CLI::App* ablate_cmd = app.add_subcommand("ablate", "sweep eraser count and size");
  ablate_cmd->add_option("--data", ablate_args.data, "dataset file")->required();
  ablate_cmd->add_option("--out", ablate_args.out, "output directory")->required();
  ablate_cmd->add_option("--config", ablate_args.config, "JSON config file");
  ablate_cmd->add_option("--grid", ablate_args.grid, "two axes: n_e=... l=...")
      ->required()
      ->expected(2);
  OverrideFlags ablate_flags(*ablate_cmd, config_keys());

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << kUsageText;
    return kUsage;
  }

  try {
    if (gen->parsed()) return generate_data(gen_args, gen_flags.given(*gen), out);
    if (train_cmd->parsed()) return train_verb(train_args, train_flags.given(*train_cmd), out);
    if (db_cmd->parsed()) return build_db(db_args, out);
    if (query_cmd->parsed()) return query_verb(query_args, out);
    if (eval_cmd->parsed()) return eval_verb(eval_args, out);
    if (ablate_cmd->parsed())
      return ablate_verb(ablate_args, ablate_flags.given(*ablate_cmd), out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kDataError;
  } catch (const FormatError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const IoError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const DimensionError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const SupervisionError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  err << kUsageText;
  return kUsage;
}

}  // namespace erasehash::cli
