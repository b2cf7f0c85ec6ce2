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

#include "erasehash/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numbers>
#include <random>

#include "erasehash/errors.hpp"
#include "erasehash/serialize.hpp"
#include "json.hpp"

namespace erasehash {
namespace {

using nlohmann::json;

constexpr std::uint32_t kDatasetVersion = 1;

// Generator streams; keep stable, they define the dataset for a seed.
constexpr std::uint64_t kMotifStream = 1000;
constexpr std::uint64_t kBackgroundStream = 2;
constexpr std::uint64_t kImageStream = 3;
constexpr std::uint64_t kSplitStream = 4;

struct Rgb {
  double r, g, b;
};

Rgb hsv_to_rgb(double h, double s, double v) {
  h = h - std::floor(h);
  const double scaled = h * 6.0;
  const int sector = static_cast<int>(scaled) % 6;
  const double f = scaled - std::floor(scaled);
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (sector) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
  }
}

struct Motif {
  std::vector<std::uint8_t> mask;  // m*m, 1 where the motif is painted
  Rgb color;
};

Motif make_motif(const GeneratorConfig& config, std::uint64_t seed, int c) {
  Rng rng = make_rng(seed, kMotifStream + static_cast<std::uint64_t>(c));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int m = config.motif_size;
  Motif motif;
  motif.mask.assign(static_cast<std::size_t>(m * m), 0);
  for (auto& bit : motif.mask) bit = unit(rng) < 0.55 ? 1 : 0;
  motif.mask[static_cast<std::size_t>((m / 2) * m + m / 2)] = 1;
  const double hue = (c + 0.3 * (unit(rng) - 0.5)) / config.classes;
  motif.color = hsv_to_rgb(hue, 0.85 + 0.1 * unit(rng), 0.8 + 0.15 * unit(rng));
  return motif;
}

// Smooth, weakly tinted texture: a luminance level and a few oriented waves
// shared by all channels, plus a small per-channel tint. Hue is left to the
// motifs, while luminance varies strongly between backgrounds.
Tensor make_background(const GeneratorConfig& config, Rng& rng) {
  const auto h = static_cast<std::size_t>(config.height);
  const auto w = static_cast<std::size_t>(config.width);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double level = 0.2 + 0.6 * unit(rng);
  double tint[3];
  for (double& t : tint) t = 0.12 * (unit(rng) - 0.5);
  struct Wave {
    double fy, fx, phase, amplitude;
  };
  Wave waves[3];
  for (auto& wave : waves) {
    const double freq = 0.04 + 0.2 * unit(rng);
    const double angle = 2 * std::numbers::pi * unit(rng);
    wave = {freq * std::sin(angle), freq * std::cos(angle),
            2 * std::numbers::pi * unit(rng), 0.05 + 0.1 * unit(rng)};
  }
  Tensor bg({3, h, w});
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      double v = level;
      for (const auto& wave : waves)
        v += wave.amplitude *
             std::sin(2 * std::numbers::pi * (wave.fy * y + wave.fx * x) + wave.phase);
      for (std::size_t ch = 0; ch < 3; ++ch) bg.at(ch, y, x) = v + tint[ch];
    }
  return bg;
}

json config_to_json(const GeneratorConfig& c) {
  return json{{"classes", c.classes},
              {"per_class", c.per_class},
              {"height", c.height},
              {"width", c.width},
              {"query_fraction", c.query_fraction},
              {"motif_size", c.motif_size},
              {"background_pool", c.background_pool},
              {"noise_stddev", c.noise_stddev}};
}

// Number of query images per class: round(N * fraction) spread as evenly as
// possible, lower class ids taking the remainder.
std::vector<int> query_quota(const GeneratorConfig& c) {
  const int total = c.classes * c.per_class;
  const int queries = static_cast<int>(std::lround(total * c.query_fraction));
  std::vector<int> quota(static_cast<std::size_t>(c.classes), queries / c.classes);
  for (int i = 0; i < queries % c.classes; ++i) ++quota[static_cast<std::size_t>(i)];
  return quota;
}

}  // namespace

void GeneratorConfig::validate() const {
  auto fail = [](const std::string& key, const std::string& why) {
    throw ConfigError("generator config: \"" + key + "\" " + why);
  };
  if (classes < 2) fail("classes", "must be >= 2");
  if (per_class < 4) fail("per_class", "must be >= 4");
  if (height < 16) fail("height", "must be >= 16");
  if (width < 16) fail("width", "must be >= 16");
  if (motif_size < 1 || motif_size > std::min(height, width))
    fail("motif_size", "must lie in [1, min(height, width)]");
  if (background_pool < 1) fail("background_pool", "must be >= 1");
  if (!(noise_stddev >= 0.0)) fail("noise_stddev", "must be >= 0");
  if (!(query_fraction > 0.0 && query_fraction < 1.0))
    fail("query_fraction", "must lie in (0, 1)");
  for (int q : query_quota(*this)) {
    if (q < 1 || q > per_class - 1)
      fail("query_fraction", "must leave every class in both splits");
  }
}

std::string GeneratorConfig::to_json() const { return config_to_json(*this).dump(); }

GeneratorConfig GeneratorConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("generator config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("generator config: expected a JSON object");
  GeneratorConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "classes") c.classes = value.get<int>();
      else if (key == "per_class") c.per_class = value.get<int>();
      else if (key == "height") c.height = value.get<int>();
      else if (key == "width") c.width = value.get<int>();
      else if (key == "query_fraction") c.query_fraction = value.get<double>();
      else if (key == "motif_size") c.motif_size = value.get<int>();
      else if (key == "background_pool") c.background_pool = value.get<int>();
      else if (key == "noise_stddev") c.noise_stddev = value.get<double>();
      else throw ConfigError("generator config: unknown key \"" + key + "\"");
    } catch (const json::exception& e) {
      throw ConfigError("generator config: \"" + key + "\": " + e.what());
    }
  }
  return c;
}

Tensor Dataset::image(std::size_t id) const {
  const std::size_t stride = channels() * height() * width();
  if (id >= size()) throw DimensionError("dataset: image id out of range");
  auto first = images.values().begin() + static_cast<std::ptrdiff_t>(id * stride);
  return Tensor({channels(), height(), width()},
                std::vector<double>(first, first + static_cast<std::ptrdiff_t>(stride)));
}

std::vector<std::size_t> Dataset::ids(Split which) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < split.size(); ++i)
    if (split[i] == which) out.push_back(i);
  return out;
}

std::vector<int> Dataset::labels_of(std::span<const std::size_t> ids) const {
  std::vector<int> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) out.push_back(labels.at(id));
  return out;
}

Tensor class_motif(const GeneratorConfig& config, std::uint64_t seed, int c) {
  const Motif motif = make_motif(config, seed, c);
  const auto m = static_cast<std::size_t>(config.motif_size);
  Tensor patch({3, m, m});
  const double rgb[3] = {motif.color.r, motif.color.g, motif.color.b};
  for (std::size_t ch = 0; ch < 3; ++ch)
    for (std::size_t i = 0; i < m * m; ++i)
      patch[ch * m * m + i] = motif.mask[i] ? rgb[ch] : 0.0;
  return patch;
}

Dataset generate(const GeneratorConfig& config, std::uint64_t seed) {
  config.validate();
  const auto h = static_cast<std::size_t>(config.height);
  const auto w = static_cast<std::size_t>(config.width);
  const auto m = static_cast<std::size_t>(config.motif_size);
  const std::size_t n = static_cast<std::size_t>(config.classes) *
                        static_cast<std::size_t>(config.per_class);

  std::vector<Motif> motifs;
  for (int c = 0; c < config.classes; ++c) motifs.push_back(make_motif(config, seed, c));

  Rng bg_rng = make_rng(seed, kBackgroundStream);
  std::vector<Tensor> backgrounds;
  for (int b = 0; b < config.background_pool; ++b)
    backgrounds.push_back(make_background(config, bg_rng));

  Dataset ds;
  ds.config = config;
  ds.seed = seed;
  ds.images = Tensor({n, 3, h, w});
  ds.labels.resize(n);
  ds.split.assign(n, Split::kTrain);

  Rng rng = make_rng(seed, kImageStream);
  std::uniform_int_distribution<int> pick_bg(0, config.background_pool - 1);
  std::uniform_int_distribution<std::size_t> shift_y(0, h - 1), shift_x(0, w - 1);
  std::uniform_int_distribution<std::size_t> pos_y(0, h - m), pos_x(0, w - m);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, config.noise_stddev);

  const std::size_t plane = h * w;
  for (std::size_t id = 0; id < n; ++id) {
    const int c = static_cast<int>(id / static_cast<std::size_t>(config.per_class));
    ds.labels[id] = c;
    double* img = ds.images.data() + id * 3 * plane;

    const Tensor& bg = backgrounds[static_cast<std::size_t>(pick_bg(rng))];
    const std::size_t dy = shift_y(rng), dx = shift_x(rng);
    const double gain = 0.8 + 0.4 * unit(rng);
    for (std::size_t ch = 0; ch < 3; ++ch)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
          img[ch * plane + y * w + x] = gain * bg.at(ch, (y + dy) % h, (x + dx) % w);

    const Motif& motif = motifs[static_cast<std::size_t>(c)];
    const std::size_t oy = pos_y(rng), ox = pos_x(rng);
    const double base[3] = {motif.color.r, motif.color.g, motif.color.b};
    double jittered[3];
    for (int ch = 0; ch < 3; ++ch) jittered[ch] = base[ch] + 0.1 * (unit(rng) - 0.5);
    for (std::size_t my = 0; my < m; ++my)
      for (std::size_t mx = 0; mx < m; ++mx)
        if (motif.mask[my * m + mx])
          for (std::size_t ch = 0; ch < 3; ++ch)
            img[ch * plane + (oy + my) * w + ox + mx] = jittered[ch];

    if (config.noise_stddev > 0.0)
      for (std::size_t i = 0; i < 3 * plane; ++i) img[i] += noise(rng);
    for (std::size_t i = 0; i < 3 * plane; ++i) img[i] = std::clamp(img[i], 0.0, 1.0);
  }

  Rng split_rng = make_rng(seed, kSplitStream);
  const std::vector<int> quota = query_quota(config);
  for (int c = 0; c < config.classes; ++c) {
    std::vector<std::size_t> members(static_cast<std::size_t>(config.per_class));
    for (std::size_t t = 0; t < members.size(); ++t)
      members[t] = static_cast<std::size_t>(c) * members.size() + t;
    std::shuffle(members.begin(), members.end(), split_rng);
    for (int q = 0; q < quota[static_cast<std::size_t>(c)]; ++q)
      ds.split[members[static_cast<std::size_t>(q)]] = Split::kQuery;
  }
  return ds;
}

SimilarityMatrix::SimilarityMatrix(std::vector<std::size_t> row_ids,
                                   std::size_t columns,
                                   std::vector<std::int8_t> entries)
    : row_ids_(std::move(row_ids)), cols_(columns), entries_(std::move(entries)) {
  if (entries_.size() != row_ids_.size() * cols_)
    throw DimensionError("similarity matrix: entry count does not match r x n");
}

SimilarityMatrix SimilarityMatrix::select_rows(std::span<const std::size_t> rows) const {
  std::vector<std::size_t> ids;
  std::vector<std::int8_t> entries;
  ids.reserve(rows.size());
  entries.reserve(rows.size() * cols_);
  for (std::size_t r : rows) {
    if (r >= row_ids_.size()) throw DimensionError("similarity matrix: row out of range");
    ids.push_back(row_ids_[r]);
    auto src = row(r);
    entries.insert(entries.end(), src.begin(), src.end());
  }
  return SimilarityMatrix(std::move(ids), cols_, std::move(entries));
}

SimilarityMatrix SimilarityMatrix::negated() const {
  std::vector<std::int8_t> entries(entries_.size());
  std::transform(entries_.begin(), entries_.end(), entries.begin(),
                 [](std::int8_t v) { return static_cast<std::int8_t>(-v); });
  return SimilarityMatrix(row_ids_, cols_, std::move(entries));
}

SimilarityMatrix similarity_matrix(std::span<const std::size_t> sample_ids,
                                   std::span<const int> db_labels) {
  std::vector<std::int8_t> entries;
  entries.reserve(sample_ids.size() * db_labels.size());
  for (std::size_t id : sample_ids) {
    if (id >= db_labels.size())
      throw DimensionError("similarity_matrix: sample id out of database range");
    const int label = db_labels[id];
    for (int other : db_labels) entries.push_back(other == label ? 1 : -1);
  }
  return SimilarityMatrix(std::vector<std::size_t>(sample_ids.begin(), sample_ids.end()),
                          db_labels.size(), std::move(entries));
}

RoundSample sample_round(std::span<const int> db_labels, std::size_t r, Rng& rng) {
  if (r > db_labels.size()) {
    throw ConfigError("sample_round: r = " + std::to_string(r) +
                      " exceeds database size " + std::to_string(db_labels.size()));
  }
  std::vector<std::size_t> all(db_labels.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  RoundSample out;
  out.ids.reserve(r);
  std::sample(all.begin(), all.end(), std::back_inserter(out.ids), r, rng);
  out.similarity = similarity_matrix(out.ids, db_labels);
  return out;
}

RoundSample sample_round(const Dataset& dataset, std::size_t r, Rng& rng) {
  const auto db = dataset.database_ids();
  const auto labels = dataset.labels_of(db);
  return sample_round(labels, r, rng);
}

std::size_t pick_positive(std::size_t row, const SimilarityMatrix& similarity,
                          Rng& rng) {
  if (row >= similarity.rows()) throw DimensionError("pick_positive: row out of range");
  const std::size_t self = similarity.row_ids()[row];
  std::vector<std::size_t> candidates;
  bool self_similar = false;
  const auto entries = similarity.row(row);
  for (std::size_t j = 0; j < entries.size(); ++j) {
    if (entries[j] != 1) continue;
    if (j == self) self_similar = true;
    else candidates.push_back(j);
  }
  if (candidates.empty()) {
    if (self_similar) return self;
    throw SupervisionError("pick_positive: row " + std::to_string(row) +
                           " has no similar database item");
  }
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  return candidates[pick(rng)];
}

Bytes encode_dataset(const Dataset& dataset) {
  ByteWriter out;
  out.text("FGHD");
  out.u32(kDatasetVersion);
  json header = config_to_json(dataset.config);
  header["seed"] = dataset.seed;
  out.prefixed_text(header.dump());
  out.u32(static_cast<std::uint32_t>(dataset.size()));
  for (int label : dataset.labels) out.i32(label);
  for (Split s : dataset.split) out.u8(static_cast<std::uint8_t>(s));
  out.tensor(dataset.images);
  out.seal();
  return out.take();
}

Dataset decode_dataset(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  in.expect_magic("FGHD");
  const std::uint32_t version = in.u32();
  if (version != kDatasetVersion)
    throw FormatError("dataset file: unsupported version " + std::to_string(version));
  Dataset ds;
  json header;
  try {
    header = json::parse(in.prefixed_text());
    ds.seed = header.at("seed").get<std::uint64_t>();
    header.erase("seed");
    ds.config = GeneratorConfig::from_json(header.dump());
  } catch (const json::exception& e) {
    throw FormatError(std::string("dataset file: bad header: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("dataset file: bad header: ") + e.what());
  }
  const std::uint32_t n = in.u32();
  if (n > in.remaining()) throw FormatError("malformed file: label count exceeds file size");
  ds.labels.resize(n);
  for (auto& label : ds.labels) label = in.i32();
  ds.split.resize(n);
  for (auto& s : ds.split) {
    const std::uint8_t v = in.u8();
    if (v > 1) throw FormatError("dataset file: bad split flag");
    s = static_cast<Split>(v);
  }
  ds.images = in.tensor();
  in.verify_seal();
  if (ds.images.rank() != 4 || ds.images.dim(0) != n || ds.images.dim(1) != 3)
    throw FormatError("dataset file: image tensor shape does not match labels");
  return ds;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  write_file(path, encode_dataset(dataset));
}

Dataset load_dataset(const std::filesystem::path& path) {
  return decode_dataset(read_file(path));
}

}  // namespace erasehash
