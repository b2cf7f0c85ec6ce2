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

#include "erasehash/config.hpp"

#include <cstdio>
#include <sstream>

#include "erasehash/errors.hpp"
#include "erasehash/hash_layer.hpp"
#include "erasehash/serialize.hpp"
#include "json.hpp"

namespace erasehash {
namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& key, const std::string& why) {
  throw ConfigError("config: \"" + key + "\" " + why);
}

std::size_t get_count(const json& value, const std::string& key, bool allow_zero = false) {
  if (!value.is_number_integer()) invalid(key, "must be an integer");
  const auto v = value.get<std::int64_t>();
  if (v < 0 || (!allow_zero && v == 0))
    invalid(key, allow_zero ? "must be non-negative" : "must be positive");
  return static_cast<std::size_t>(v);
}

double get_real(const json& value, const std::string& key) {
  if (!value.is_number()) invalid(key, "must be a number");
  return value.get<double>();
}

bool get_flag(const json& value, const std::string& key) {
  if (!value.is_boolean()) invalid(key, "must be true or false");
  return value.get<bool>();
}

std::vector<std::size_t> get_list(const json& value, const std::string& key,
                                  bool allow_zero) {
  if (!value.is_array()) invalid(key, "must be a list of integers");
  std::vector<std::size_t> out;
  for (const auto& item : value) out.push_back(get_count(item, key, allow_zero));
  return out;
}

json to_json_object(const TrainConfig& c) {
  return json{{"k", c.bits},
              {"r", c.samples},
              {"iterations", c.iterations},
              {"epochs_per_iteration", c.epochs_per_iteration},
              {"batch_size", c.batch_size},
              {"lr", c.learning_rate},
              {"lr_milestones", c.lr_milestones},
              {"momentum", c.momentum},
              {"weight_decay", c.weight_decay},
              {"grad_clip", c.grad_clip},
              {"alpha", c.alpha},
              {"beta", c.beta},
              {"n_e", c.erasers},
              {"l", c.eraser_size},
              {"epsilon", c.epsilon},
              {"seed", c.seed},
              {"v_passes", c.v_passes},
              {"srem", c.srem},
              {"normalized_loss", c.normalized_loss},
              {"column_update", c.column_rule == ColumnRule::kDerived ? "derived" : "literal"},
              {"debug_checks", c.debug_checks},
              {"channels", c.channels}};
}

void apply_key(TrainConfig& c, const std::string& key, const json& v) {
  if (key == "k") c.bits = get_count(v, key);
  else if (key == "r") c.samples = get_count(v, key);
  else if (key == "iterations") c.iterations = get_count(v, key, true);
  else if (key == "epochs_per_iteration") c.epochs_per_iteration = get_count(v, key);
  else if (key == "batch_size") c.batch_size = get_count(v, key);
  else if (key == "lr") c.learning_rate = get_real(v, key);
  else if (key == "lr_milestones") c.lr_milestones = get_list(v, key, true);
  else if (key == "momentum") c.momentum = get_real(v, key);
  else if (key == "weight_decay") c.weight_decay = get_real(v, key);
  else if (key == "grad_clip") c.grad_clip = get_real(v, key);
  else if (key == "alpha") c.alpha = get_real(v, key);
  else if (key == "beta") c.beta = get_real(v, key);
  else if (key == "n_e") c.erasers = get_count(v, key);
  else if (key == "l") c.eraser_size = get_count(v, key);
  else if (key == "epsilon") c.epsilon = get_real(v, key);
  else if (key == "seed") {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      invalid(key, "must be a non-negative integer");
    c.seed = v.get<std::uint64_t>();
  } else if (key == "v_passes") c.v_passes = get_count(v, key);
  else if (key == "srem") c.srem = get_flag(v, key);
  else if (key == "normalized_loss") c.normalized_loss = get_flag(v, key);
  else if (key == "column_update") {
    if (v == "derived") c.column_rule = ColumnRule::kDerived;
    else if (v == "literal") c.column_rule = ColumnRule::kLiteral;
    else invalid(key, "must be \"derived\" or \"literal\"");
  } else if (key == "debug_checks") c.debug_checks = get_flag(v, key);
  else if (key == "channels") c.channels = get_list(v, key, false);
  else throw ConfigError("config: unknown key \"" + key + "\"");
}

json parse_override_value(const std::string& key, const std::string& text) {
  if (key == "lr_milestones" || key == "channels") {
    if (!text.empty() && text.front() == '[') return json::parse(text, nullptr, false);
    json list = json::array();
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
      if (item.empty()) continue;
      json parsed = json::parse(item, nullptr, false);
      list.push_back(parsed.is_discarded() ? json(item) : parsed);
    }
    return list;
  }
  json parsed = json::parse(text, nullptr, false);
  return parsed.is_discarded() ? json(text) : parsed;
}

}  // namespace

void TrainConfig::validate() const {
  if (bits < 1 || bits > kMaxBits) invalid("k", "must lie in [1, 512]");
  if (samples < 1) invalid("r", "must be positive");
  if (epochs_per_iteration < 1) invalid("epochs_per_iteration", "must be positive");
  if (batch_size < 1) invalid("batch_size", "must be positive");
  if (!(learning_rate >= 0.0)) invalid("lr", "must be non-negative");
  for (std::size_t i = 0; i < lr_milestones.size(); ++i) {
    if (i > 0 && lr_milestones[i] <= lr_milestones[i - 1])
      invalid("lr_milestones", "must be strictly increasing");
    if (iterations > 0 && lr_milestones[i] >= iterations)
      invalid("lr_milestones", "must be smaller than iterations");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) invalid("momentum", "must lie in [0, 1)");
  if (!(weight_decay >= 0.0)) invalid("weight_decay", "must be non-negative");
  if (!(grad_clip >= 0.0)) invalid("grad_clip", "must be non-negative");
  if (!(alpha >= 0.0)) invalid("alpha", "must be non-negative");
  if (!(beta >= 0.0)) invalid("beta", "must be non-negative");
  if (erasers < 1) invalid("n_e", "must be positive");
  if (eraser_size < 1) invalid("l", "must be positive");
  if (!(epsilon > 0.0)) invalid("epsilon", "must be positive");
  if (v_passes < 1) invalid("v_passes", "must be positive");
  if (channels.empty()) invalid("channels", "must list at least one stage");
}

std::string TrainConfig::to_json() const { return to_json_object(*this).dump(); }

TrainConfig desk_preset() { return TrainConfig{}; }

TrainConfig full_preset() {
  TrainConfig c;
  c.samples = 2000;
  c.batch_size = 64;
  c.iterations = 40;
  c.epochs_per_iteration = 20;
  c.learning_rate = 1e-3;
  c.lr_milestones = {20, 30};
  c.erasers = 50;
  c.eraser_size = 32;
  c.grad_clip = 0.0;
  c.normalized_loss = false;
  return c;
}

TrainConfig parse_config_text(std::string_view text, const ConfigOverrides& overrides) {
  json file = json::parse(text, nullptr, false);
  if (file.is_discarded()) throw ConfigError("config: malformed JSON");
  if (!file.is_object()) throw ConfigError("config: expected a JSON object");
  for (const auto& [key, value] : overrides) {
    json parsed = parse_override_value(key, value);
    if (parsed.is_discarded()) invalid(key, "has malformed value \"" + value + "\"");
    file[key] = parsed;
  }

  TrainConfig config = desk_preset();
  if (auto it = file.find("preset"); it != file.end()) {
    if (*it == "desk") config = desk_preset();
    else if (*it == "full") config = full_preset();
    else invalid("preset", "must be \"desk\" or \"full\"");
    file.erase(it);
  }
  for (const auto& [key, value] : file.items()) apply_key(config, key, value);
  config.validate();
  return config;
}

TrainConfig parse_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  const Bytes bytes = read_file(path);
  return parse_config_text(std::string_view(reinterpret_cast<const char*>(bytes.data()),
                                            bytes.size()),
                           overrides);
}

std::string fingerprint(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::string config_hash(const TrainConfig& config) { return fingerprint(config.to_json()); }

}  // namespace erasehash
