// Copyright 2026 The Relnet Authors.
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

// Run configuration: JSON schema, validation and dotted-key overrides.
//
//   {
//     "seed": 1,
//     "task":  {"kind", "clips", "frames", "symbols", "objects", "shapes",
//               "colors", "feature_dim", "train_samples", "val_samples",
//               "seed"},
//     "model": {"type", "d", "answer",
//               "hcrn":   {"grouping", "use_motion", "k_max", "t",
//                          "g_mode", "sampling"},
//               "lognet": {"steps", "heads", "gcn_layers", "rank"}},
//     "train": {"epochs", "batch_size", "lr", "halve_every", "clip_norm",
//               "lambda_ling", "lambda_vis"}
//   }
//
// Every key is optional; missing keys keep the defaults below.

#ifndef RELNET_CONFIG_H_
#define RELNET_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "relnet/models.h"
#include "relnet/synthgen.h"

namespace relnet {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TaskConfig {
  TaskKind kind = TaskKind::kCountSymbol;
  std::size_t clips = 4, frames = 6, symbols = 8;
  std::size_t objects = 6, shapes = 8, colors = 8;
  std::size_t feature_dim = 32;
  std::size_t train_samples = 10000, val_samples = 1000;
  std::uint64_t seed = 1;
};

struct TrainConfig {
  std::size_t epochs = 25;
  std::size_t batch_size = 32;
  double lr = 1e-4;
  std::size_t halve_every = 10;  // 0 keeps the rate fixed
  double clip_norm = 0.0;
  double lambda_ling = 0.0, lambda_vis = 0.0;
};

struct RunConfig {
  std::uint64_t seed = 1;
  TaskConfig task;
  ModelConfig model;
  TrainConfig train;
};

// Throws ConfigError naming the dotted path of the first unknown key or
// ill-typed value.
RunConfig parse_run_config(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& cfg);

// Applies "a.b.c=value" to j. The value is read as JSON when it parses and
// as a plain string otherwise. Intermediate objects are created as needed;
// validation happens in parse_run_config.
void apply_override(nlohmann::json& j, const std::string& assignment);

// Reads a JSON file (empty path: defaults), applies the overrides in order
// and validates.
RunConfig load_run_config(const std::string& path,
                          const std::vector<std::string>& overrides);

}  // namespace relnet

#endif  // RELNET_CONFIG_H_
