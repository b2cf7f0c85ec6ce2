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
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace erasehash {

// How a database bit-column is re-solved in the discrete step.
enum class ColumnRule {
  kDerived,  // v = sign(k q - V^ U^T u), the exact column minimiser
  kLiteral,  // v = sign(2k q - V^ U^T u), kept for comparison
};

// Every training hyperparameter. JSON keys (and --kebab-case CLI flags) are
// given next to each field.
struct TrainConfig {
  std::size_t bits = 16;                      // k
  std::size_t samples = 256;                  // r
  std::size_t iterations = 10;                // iterations
  std::size_t epochs_per_iteration = 5;       // epochs_per_iteration
  std::size_t batch_size = 8;                 // batch_size
  double learning_rate = 3e-2;                // lr
  std::vector<std::size_t> lr_milestones{5, 7};  // lr_milestones
  double momentum = 0.9;                      // momentum
  double weight_decay = 1e-5;                 // weight_decay
  double grad_clip = 1.0;                     // grad_clip (0 disables)
  double alpha = 1.0;                         // alpha
  double beta = 1.0;                          // beta
  std::size_t erasers = 8;                    // n_e
  std::size_t eraser_size = 5;                // l
  double epsilon = 1e-6;                      // epsilon
  std::uint64_t seed = 0;                     // seed
  std::size_t v_passes = 1;                   // v_passes
  bool srem = true;                           // srem
  bool normalized_loss = true;                // normalized_loss
  ColumnRule column_rule = ColumnRule::kDerived;  // column_update
  bool debug_checks = false;                  // debug_checks
  std::vector<std::size_t> channels{16, 32, 64};  // channels

  void validate() const;
  std::string to_json() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Scaled-down defaults (the TrainConfig initialisers).
TrainConfig desk_preset();
// Full-size schedule: r = 2000, batches of 64, 40 iterations of 20 epochs,
// lr 1e-3 divided by 10 at iterations 20 and 30, raw loss sums, no clipping.
TrainConfig full_preset();

// (key, value) pairs; keys use the JSON spelling, values are JSON literals
// or bare strings. Lists may be given as "5,7".
using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;

// Parses a flat JSON object. An optional "preset" key ("desk" or "full")
// selects the base values; remaining keys override it, then `overrides`
// override the file. Unknown keys are rejected.
TrainConfig parse_config_text(std::string_view text, const ConfigOverrides& overrides = {});
TrainConfig parse_config(const std::filesystem::path& path,
                         const ConfigOverrides& overrides = {});

// FNV-1a 64 of the canonical JSON, as 16 hex digits.
std::string fingerprint(std::string_view text);
std::string config_hash(const TrainConfig& config);

}  // namespace erasehash
