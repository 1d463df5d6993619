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

#include "rdgnn/model.hpp"

#include <stdexcept>

namespace rdgnn {

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::kI: return "I";
    case Variant::kS: return "S";
    case Variant::kT: return "T";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  if (name == "I" || name == "i") return Variant::kI;
  if (name == "S" || name == "s") return Variant::kS;
  if (name == "T" || name == "t") return Variant::kT;
  throw std::invalid_argument("unknown variant '" + name + "' (expected I, S or T)");
}

std::string to_string(ParamGroup group) {
  switch (group) {
    case ParamGroup::kEmbedding: return "embedding";
    case ParamGroup::kDiffusion: return "diffusion";
    case ParamGroup::kReaction: return "reaction";
  }
  return "?";
}

void ModelConfig::validate() const {
  std::vector<std::string> errors;
  if (layers < 1) errors.push_back("layers must be >= 1");
  if (channels < 1) errors.push_back("channels must be >= 1");
  if (!(h > 0.0)) errors.push_back("h must be > 0");
  if (in_features < 1) errors.push_back("in_features must be >= 1");
  if (out_features < 1) errors.push_back("out_features must be >= 1");
  for (auto [name, p] : {std::pair{"input_dropout", input_dropout},
                         std::pair{"output_dropout", output_dropout},
                         std::pair{"hidden_dropout", hidden_dropout}}) {
    if (!(p >= 0.0 && p <= 0.9)) errors.push_back(std::string(name) + " must lie in [0, 0.9]");
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
}

// ---------------------------------------------------------------------------

void ModelParams::add(std::string name, ParamGroup group, Matrix value) {
  if (find(name)) throw std::invalid_argument("duplicate parameter " + name);
  entries_.push_back({std::move(name), group, std::move(value)});
}

std::optional<std::size_t> ModelParams::find(std::string_view name) const {
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    if (entries_[k].name == name) return k;
  }
  return std::nullopt;
}

const Matrix& ModelParams::at(std::string_view name) const {
  auto k = find(name);
  if (!k) throw std::out_of_range("no parameter named " + std::string(name));
  return entries_[*k].value;
}

Matrix& ModelParams::at(std::string_view name) {
  return const_cast<Matrix&>(static_cast<const ModelParams&>(*this).at(name));
}

Index ModelParams::scalar_count() const {
  Index total = 0;
  for (const auto& p : entries_) total += p.value.size();
  return total;
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  if (a.entries_.size() != b.entries_.size()) return false;
  for (std::size_t k = 0; k < a.entries_.size(); ++k) {
    const auto& x = a.entries_[k];
    const auto& y = b.entries_[k];
    if (x.name != y.name || x.group != y.group || x.value.rows() != y.value.rows() ||
        x.value.cols() != y.value.cols() || x.value != y.value) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------

namespace {

struct BlockShape {
  std::string name;
  ParamGroup group;
  Index rows;
  Index cols;
  enum class Init { kGlorot, kZero } init;
};

bool has_u0(ReactionMode mode) {
  return mode == ReactionMode::kAdditiveU0 || mode == ReactionMode::kMultiplicative ||
         mode == ReactionMode::kAll;
}

bool has_second_branch(ReactionMode mode) {
  return mode == ReactionMode::kMultiplicative || mode == ReactionMode::kAll;
}

void add_branch(std::vector<BlockShape>& out, const std::string& prefix, const ModelConfig& cfg,
                bool with_u0, bool with_time) {
  const Index c = cfg.channels;
  using I = BlockShape::Init;
  out.push_back({prefix + ".k_u", ParamGroup::kReaction, c, c, I::kGlorot});
  if (with_u0) out.push_back({prefix + ".k_u0", ParamGroup::kReaction, c, c, I::kGlorot});
  if (with_time) {
    out.push_back({prefix + ".k_t", ParamGroup::kReaction, c, c, I::kGlorot});
    out.push_back({prefix + ".e_f", ParamGroup::kReaction, 1, c, I::kGlorot});
  }
}

std::vector<BlockShape> layout(const ModelConfig& cfg) {
  cfg.validate();
  using I = BlockShape::Init;
  const Index c = cfg.channels;
  const bool time = cfg.time_embedding();
  std::vector<BlockShape> out;
  out.push_back({"embed.weight", ParamGroup::kEmbedding, cfg.in_features, c, I::kGlorot});
  out.push_back({"embed.bias", ParamGroup::kEmbedding, 1, c, I::kZero});
  for (int set = 0; set < cfg.parameter_sets(); ++set) {
    const std::string block = layer_block(cfg, set);
    switch (cfg.reaction) {
      case ReactionMode::kNone:
        break;
      case ReactionMode::kLinear:
        out.push_back({block + ".reaction.add1.k_u", ParamGroup::kReaction, c, c, I::kGlorot});
        break;
      default:
        add_branch(out, block + ".reaction.add1", cfg, has_u0(cfg.reaction), time);
        if (has_second_branch(cfg.reaction)) {
          add_branch(out, block + ".reaction.add2", cfg, true, time);
        }
    }
    out.push_back({block + ".diffusion.sigma_hat", ParamGroup::kDiffusion, 1, c, I::kZero});
    if (time) {
      out.push_back({block + ".diffusion.e_sigma", ParamGroup::kDiffusion, 1, c, I::kGlorot});
    }
  }
  out.push_back({"readout.weight", ParamGroup::kEmbedding, c, cfg.out_features, I::kGlorot});
  out.push_back({"readout.bias", ParamGroup::kEmbedding, 1, cfg.out_features, I::kZero});
  return out;
}

}  // namespace

std::string layer_block(const ModelConfig& cfg, int layer) {
  return cfg.variant == Variant::kI ? "layer" + std::to_string(layer) : std::string("shared");
}

Index parameter_count(const ModelConfig& cfg) {
  Index total = 0;
  for (const auto& b : layout(cfg)) total += b.rows * b.cols;
  return total;
}

ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ModelParams params;
  for (const auto& b : layout(cfg)) {
    Matrix m = Matrix::Zero(b.rows, b.cols);
    if (b.init == BlockShape::Init::kGlorot) {
      std::uniform_real_distribution<double> dist(-glorot_bound(b.rows, b.cols),
                                                  glorot_bound(b.rows, b.cols));
      for (Index j = 0; j < m.cols(); ++j) {
        for (Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
      }
    }
    params.add(b.name, b.group, std::move(m));
  }
  return params;
}

// ---------------------------------------------------------------------------

BoundParams::BoundParams(Tape& tape, const ModelParams& params, bool track)
    : tape_(&tape), params_(&params) {
  vars_.reserve(params.size());
  for (const auto& p : params.entries()) {
    vars_.push_back(track ? tape.variable(p.value) : tape.constant(p.value));
  }
}

Var BoundParams::operator[](std::string_view name) const {
  auto k = params_->find(name);
  if (!k) throw std::out_of_range("no parameter named " + std::string(name));
  return vars_[*k];
}

Var BoundParams::optional(std::string_view name) const {
  auto k = params_->find(name);
  return k ? vars_[*k] : Var();
}

ReactionWeights reaction_weights(const BoundParams& p, const ModelConfig& cfg, int layer) {
  const std::string prefix = layer_block(cfg, layer) + ".reaction.";
  auto branch = [&](const std::string& name) {
    AdditiveWeights w;
    w.k_u = p.optional(prefix + name + ".k_u");
    w.k_u0 = p.optional(prefix + name + ".k_u0");
    w.k_t = p.optional(prefix + name + ".k_t");
    w.e_f = p.optional(prefix + name + ".e_f");
    return w;
  };
  return {branch("add1"), branch("add2")};
}

DiffusionWeights diffusion_weights(const BoundParams& p, const ModelConfig& cfg, int layer) {
  const std::string prefix = layer_block(cfg, layer) + ".diffusion.";
  return {p[prefix + "sigma_hat"], p.optional(prefix + "e_sigma")};
}

Var embed_input(const Var& x, const Var& weight, const Var& bias, double dropout_p,
                bool training, std::mt19937_64* rng) {
  if (x.cols() != weight.rows()) {
    throw ShapeError("embed_input: X has " + std::to_string(x.cols()) +
                     " columns, embedding expects " + std::to_string(weight.rows()));
  }
  Var xin = x;
  if (training && dropout_p > 0.0) {
    if (rng == nullptr) throw std::invalid_argument("embed_input: dropout needs an rng");
    xin = dropout(x, dropout_p, *rng, true);
  }
  return relu(add(matmul(xin, weight), broadcast_row(bias, x.rows())));
}

Var readout(const Var& u, const Var& weight, const Var& bias) {
  if (u.cols() != weight.rows()) {
    throw ShapeError("readout: state has " + std::to_string(u.cols()) +
                     " channels, readout expects " + std::to_string(weight.rows()));
  }
  return add(matmul(u, weight), broadcast_row(bias, u.rows()));
}

Var rd_layer(const Var& u, const Var& u0, const NormalizedLaplacian& lap, const BoundParams& p,
             const ModelConfig& cfg, int layer, double t, bool training,
             std::mt19937_64* rng) {
  Var f = reaction_total(u, u0, t, reaction_weights(p, cfg, layer), cfg.reaction);
  if (training && cfg.hidden_dropout > 0.0 && cfg.reaction != ReactionMode::kNone) {
    if (rng == nullptr) throw std::invalid_argument("rd_layer: dropout needs an rng");
    f = dropout(f, cfg.hidden_dropout, *rng, true);
  }
  Var sigma = diffusion_coefficients(diffusion_weights(p, cfg, layer), t);
  if (cfg.integrator == Integrator::kExplicit) return explicit_step(u, lap, sigma, f, cfg.h);
  return imex_step(u, lap, sigma, f, cfg.h, cfg.solver);
}

ForwardResult forward(const BoundParams& p, const Matrix& x, const NormalizedLaplacian& lap,
                      const ModelConfig& cfg, const ForwardOptions& options) {
  if (x.rows() != lap.size()) {
    throw ShapeError("forward: features have " + std::to_string(x.rows()) +
                     " rows, graph has " + std::to_string(lap.size()) + " nodes");
  }
  Tape& tape = p.tape();
  ForwardResult result;
  Var xin = tape.constant(x);
  Var u0 = embed_input(xin, p["embed.weight"], p["embed.bias"], cfg.input_dropout,
                       options.training, options.rng);
  result.embedded = u0;
  if (options.keep_trace) result.trace.push_back(u0.value());
  Var u = u0;
  for (int l = 0; l < cfg.layers; ++l) {
    const double t = options.t_offset + cfg.h * l;
    u = rd_layer(u, u0, lap, p, cfg, l, t, options.training, options.rng);
    if (options.keep_trace) result.trace.push_back(u.value());
  }
  if (options.training && cfg.output_dropout > 0.0) {
    if (options.rng == nullptr) throw std::invalid_argument("forward: dropout needs an rng");
    u = dropout(u, cfg.output_dropout, *options.rng, true);
  }
  result.output = readout(u, p["readout.weight"], p["readout.bias"]);
  return result;
}

Matrix predict(const ModelParams& params, const Matrix& x, const NormalizedLaplacian& lap,
               const ModelConfig& cfg, double t_offset) {
  Tape tape;
  BoundParams bound(tape, params, false);
  ForwardOptions opts;
  opts.t_offset = t_offset;
  return forward(bound, x, lap, cfg, opts).output.value();
}

}  // namespace rdgnn
