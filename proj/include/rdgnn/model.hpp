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

// Full network: dropout -> 1x1 embedding -> ReLU -> L reaction-diffusion
// layers -> dropout -> 1x1 readout.
//
// Variants:
//   I  one reaction/diffusion parameter set per layer
//   S  one set shared by all layers
//   T  as S, plus sinusoidal time embeddings in reaction and diffusion

#ifndef RDGNN_MODEL_HPP_
#define RDGNN_MODEL_HPP_

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "rdgnn/autodiff.hpp"
#include "rdgnn/dynamics.hpp"
#include "rdgnn/graph.hpp"

namespace rdgnn {

enum class Variant { kI, kS, kT };

std::string to_string(Variant variant);
Variant parse_variant(const std::string& name);

struct ModelConfig {
  Variant variant = Variant::kI;
  int layers = 2;
  int channels = 16;
  double h = 0.5;
  Integrator integrator = Integrator::kImex;
  ReactionMode reaction = ReactionMode::kAll;
  double input_dropout = 0.0;
  double output_dropout = 0.0;
  double hidden_dropout = 0.0;
  int in_features = 1;
  int out_features = 1;
  // When false, sigma_hat stays at its initial value (coefficients = 1).
  bool learn_diffusion = true;
  SolverOptions solver;
  std::uint64_t seed = 0;

  // Structural checks only; hyperparameter search ranges live in config.hpp.
  void validate() const;
  bool time_embedding() const { return variant == Variant::kT; }
  int parameter_sets() const { return variant == Variant::kI ? layers : 1; }
};

enum class ParamGroup { kEmbedding, kDiffusion, kReaction };
std::string to_string(ParamGroup group);

struct Parameter {
  std::string name;
  ParamGroup group;
  Matrix value;
};

// Named parameter blocks in a fixed order. Names:
//   embed.weight, embed.bias,
//   <block>.reaction.add{1,2}.{k_u,k_u0,k_t,e_f}, <block>.diffusion.{sigma_hat,e_sigma},
//   readout.weight, readout.bias
// where <block> is layer<l> for variant I and "shared" otherwise.
class ModelParams {
 public:
  void add(std::string name, ParamGroup group, Matrix value);

  std::vector<Parameter>& entries() { return entries_; }
  const std::vector<Parameter>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::optional<std::size_t> find(std::string_view name) const;
  const Matrix& at(std::string_view name) const;
  Matrix& at(std::string_view name);

  // Total number of scalars.
  Index scalar_count() const;

  friend bool operator==(const ModelParams& a, const ModelParams& b);

 private:
  std::vector<Parameter> entries_;
};

// Number of scalars for a configuration; equals init_params(cfg).scalar_count().
Index parameter_count(const ModelConfig& cfg);

// Glorot-uniform weights and time embeddings, zero biases, sigma_hat = 0.
ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed);

inline double glorot_bound(Index fan_in, Index fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

// Parameter blocks placed on a tape, index-aligned with ModelParams.
class BoundParams {
 public:
  BoundParams(Tape& tape, const ModelParams& params, bool track);

  Var operator[](std::string_view name) const;
  // Default Var when absent.
  Var optional(std::string_view name) const;
  const std::vector<Var>& vars() const { return vars_; }
  Tape& tape() const { return *tape_; }

 private:
  Tape* tape_;
  const ModelParams* params_;
  std::vector<Var> vars_;
};

std::string layer_block(const ModelConfig& cfg, int layer);

// Reaction / diffusion handles for one layer.
ReactionWeights reaction_weights(const BoundParams& p, const ModelConfig& cfg, int layer);
DiffusionWeights diffusion_weights(const BoundParams& p, const ModelConfig& cfg, int layer);

struct ForwardOptions {
  double t_offset = 0.0;
  bool training = false;
  bool keep_trace = false;
  // Required when training with non-zero dropout.
  std::mt19937_64* rng = nullptr;
};

struct ForwardResult {
  Var output;                // n x c_out logits or regression values
  Var embedded;              // U0
  std::vector<Matrix> trace; // U_0 .. U_L when keep_trace
};

// relu(dropout(X) W + b).
Var embed_input(const Var& x, const Var& weight, const Var& bias, double dropout_p,
                bool training, std::mt19937_64* rng);
// U W + b.
Var readout(const Var& u, const Var& weight, const Var& bias);

// One layer at time t: reaction (with hidden dropout when training) followed
// by an explicit or IMEX step.
Var rd_layer(const Var& u, const Var& u0, const NormalizedLaplacian& lap, const BoundParams& p,
             const ModelConfig& cfg, int layer, double t, bool training,
             std::mt19937_64* rng);

// Layer l runs at t = t_offset + h * l.
ForwardResult forward(const BoundParams& p, const Matrix& x, const NormalizedLaplacian& lap,
                      const ModelConfig& cfg, const ForwardOptions& options = {});

// Eval-mode forward without gradient tracking.
Matrix predict(const ModelParams& params, const Matrix& x, const NormalizedLaplacian& lap,
               const ModelConfig& cfg, double t_offset = 0.0);

}  // namespace rdgnn

#endif  // RDGNN_MODEL_HPP_
