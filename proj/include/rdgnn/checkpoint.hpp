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

// Checkpoint container (JSON, see docs/formats.md):
//
//   {
//     "format": "rdgnn-checkpoint", "version": 1,
//     "config": { ...ModelConfig... },
//     "parameters": [
//       {"name": "embed.weight", "group": "embedding",
//        "rows": 3, "cols": 16, "data": [row-major doubles]}, ...
//     ]
//   }
//
// Doubles are written with round-trip precision, so save/load is bit-exact.

#ifndef RDGNN_CHECKPOINT_HPP_
#define RDGNN_CHECKPOINT_HPP_

#include <filesystem>

#include <json.hpp>

#include "rdgnn/model.hpp"

namespace rdgnn {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig config;
  ModelParams params;
};

nlohmann::json to_json(const ModelConfig& cfg);
// Missing keys keep their defaults. Throws ParseError on bad types/values.
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {});

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j, const std::string& record);

nlohmann::json checkpoint_to_json(const ModelConfig& cfg, const ModelParams& params);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& cfg,
                     const ModelParams& params);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rdgnn

#endif  // RDGNN_CHECKPOINT_HPP_
