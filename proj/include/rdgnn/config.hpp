// Copyright 2026 The RDGNN Authors.
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

// Run configuration files.
//
// A config file is a flat JSON object whose keys are the snake_case names of
// the CLI flags (`hidden_dropout` <-> `--hidden-dropout`). Missing keys take
// their defaults, unknown keys are errors, and every value is checked against
// the hyperparameter search ranges unless `allow_out_of_range` is true.

#ifndef RDGNN_CONFIG_HPP_
#define RDGNN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdgnn/model.hpp"
#include "rdgnn/training.hpp"

namespace rdgnn {

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::uint64_t seed = 0;
  bool allow_out_of_range = false;
  // Number of named splits generated for synthetic data / averaged over.
  int splits = 1;
};

// Distinct, reproducible sub-seeds from one master seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Sets model.seed and train.seed from `seed`.
void apply_seed(RunConfig& cfg);

// Every key with its resolved value.
nlohmann::json to_json(const RunConfig& cfg);

// Applies the keys of `j` on top of `base`. Throws ConfigError listing every
// problem (unknown key, wrong type, bad enum, out-of-range value).
RunConfig resolve_config(const nlohmann::json& j, RunConfig base = {});

// Range violations of an already-resolved config, formatted
// "<field>: <value> outside <range>". Empty when allow_out_of_range is set.
std::vector<std::string> range_violations(const RunConfig& cfg);

// Reads a config file (empty or whitespace-only means "all defaults").
RunConfig validate_config(const std::filesystem::path& path, RunConfig base = {});

// Keys accepted in config files.
const std::vector<std::string>& config_keys();

}  // namespace rdgnn

#endif  // RDGNN_CONFIG_HPP_
