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

#include "rdgnn/checkpoint.hpp"

#include "rdgnn/io_util.hpp"

namespace rdgnn {

using nlohmann::json;

json to_json(const ModelConfig& cfg) {
  return json{
      {"variant", to_string(cfg.variant)},
      {"layers", cfg.layers},
      {"channels", cfg.channels},
      {"h", cfg.h},
      {"integrator", to_string(cfg.integrator)},
      {"reaction", to_string(cfg.reaction)},
      {"input_dropout", cfg.input_dropout},
      {"output_dropout", cfg.output_dropout},
      {"hidden_dropout", cfg.hidden_dropout},
      {"in_features", cfg.in_features},
      {"out_features", cfg.out_features},
      {"learn_diffusion", cfg.learn_diffusion},
      {"solver",
       {{"forward_tolerance", cfg.solver.forward.tolerance},
        {"forward_max_iterations", cfg.solver.forward.max_iterations},
        {"adjoint_tolerance", cfg.solver.adjoint.tolerance},
        {"adjoint_max_iterations", cfg.solver.adjoint.max_iterations}}},
      {"seed", cfg.seed},
  };
}

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(where + "." + key, e.what());
  }
}

}  // namespace

ModelConfig model_config_from_json(const json& j, ModelConfig cfg) {
  if (!j.is_object()) throw ParseError("config", "expected an object");
  try {
    if (j.contains("variant")) cfg.variant = parse_variant(j.at("variant").get<std::string>());
    if (j.contains("integrator")) {
      cfg.integrator = parse_integrator(j.at("integrator").get<std::string>());
    }
    if (j.contains("reaction")) {
      cfg.reaction = parse_reaction_mode(j.at("reaction").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw ParseError("config", e.what());
  } catch (const std::invalid_argument& e) {
    throw ParseError("config", e.what());
  }
  read_field(j, "layers", cfg.layers, "config");
  read_field(j, "channels", cfg.channels, "config");
  read_field(j, "h", cfg.h, "config");
  read_field(j, "input_dropout", cfg.input_dropout, "config");
  read_field(j, "output_dropout", cfg.output_dropout, "config");
  read_field(j, "hidden_dropout", cfg.hidden_dropout, "config");
  read_field(j, "in_features", cfg.in_features, "config");
  read_field(j, "out_features", cfg.out_features, "config");
  read_field(j, "learn_diffusion", cfg.learn_diffusion, "config");
  read_field(j, "seed", cfg.seed, "config");
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    read_field(s, "forward_tolerance", cfg.solver.forward.tolerance, "config.solver");
    read_field(s, "forward_max_iterations", cfg.solver.forward.max_iterations, "config.solver");
    read_field(s, "adjoint_tolerance", cfg.solver.adjoint.tolerance, "config.solver");
    read_field(s, "adjoint_max_iterations", cfg.solver.adjoint.max_iterations, "config.solver");
  }
  return cfg;
}

json matrix_to_json(const Matrix& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_from_json(const json& j, const std::string& record) {
  try {
    const Index rows = j.at("rows").get<Index>();
    const Index cols = j.at("cols").get<Index>();
    const auto& data = j.at("data");
    if (rows < 0 || cols < 0 || !data.is_array() ||
        data.size() != static_cast<std::size_t>(rows * cols)) {
      throw ParseError(record, "data length does not match rows x cols");
    }
    Matrix m(rows, cols);
    std::size_t k = 0;
    for (Index i = 0; i < rows; ++i) {
      for (Index c = 0; c < cols; ++c) m(i, c) = data[k++].get<double>();
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError(record, e.what());
  }
}

json checkpoint_to_json(const ModelConfig& cfg, const ModelParams& params) {
  json entries = json::array();
  for (const auto& p : params.entries()) {
    json e = matrix_to_json(p.value);
    e["name"] = p.name;
    e["group"] = to_string(p.group);
    entries.push_back(std::move(e));
  }
  return json{{"format", "rdgnn-checkpoint"},
              {"version", kCheckpointVersion},
              {"config", to_json(cfg)},
              {"parameters", std::move(entries)}};
}

Checkpoint checkpoint_from_json(const json& j) {
  if (!j.is_object() || j.value("format", "") != "rdgnn-checkpoint") {
    throw ParseError("checkpoint", "not an rdgnn checkpoint");
  }
  if (j.value("version", 0) != kCheckpointVersion) {
    throw ParseError("checkpoint.version", "unsupported version");
  }
  Checkpoint ck;
  ck.config = model_config_from_json(j.at("config"));
  // Re-derive the layout so names, groups and shapes are checked.
  ModelParams expected = init_params(ck.config, 0);
  const json& entries = j.at("parameters");
  if (!entries.is_array() || entries.size() != expected.size()) {
    throw ParseError("checkpoint.parameters",
                     "expected " + std::to_string(expected.size()) + " parameter blocks");
  }
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const std::string record = "checkpoint.parameters[" + std::to_string(k) + "]";
    Parameter& slot = expected.entries()[k];
    const std::string name = entries[k].value("name", "");
    if (name != slot.name) {
      throw ParseError(record, "expected parameter '" + slot.name + "', found '" + name + "'");
    }
    Matrix m = matrix_from_json(entries[k], record);
    if (m.rows() != slot.value.rows() || m.cols() != slot.value.cols()) {
      throw ParseError(record, "shape mismatch for " + name);
    }
    slot.value = std::move(m);
  }
  ck.params = std::move(expected);
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& cfg,
                     const ModelParams& params) {
  write_file_atomic(path, checkpoint_to_json(cfg, params).dump(1));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace rdgnn
