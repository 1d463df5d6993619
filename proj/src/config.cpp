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

#include "rdgnn/config.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "rdgnn/checkpoint.hpp"
#include "rdgnn/errors.hpp"
#include "rdgnn/io_util.hpp"

namespace rdgnn {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void apply_seed(RunConfig& cfg) {
  cfg.model.seed = derive_seed(cfg.seed, 0);
  cfg.train.seed = derive_seed(cfg.seed, 1);
}

namespace {

struct Range {
  double lo;
  double hi;
  const char* text;
};

constexpr Range kLrRange{1e-4, 1e-1, "[1e-4, 1e-1]"};
constexpr Range kWdRange{0.0, 1e-2, "[0, 1e-2]"};
constexpr Range kDropoutRange{0.0, 0.9, "[0, 0.9]"};
constexpr Range kStepRange{1e-3, 1.0, "[1e-3, 1]"};
constexpr const char* kLayerText = "{2,4,8,16,32,64}";
constexpr const char* kChannelText = "{8,16,32,64,128,256}";

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

void check_range(std::vector<std::string>& out, const std::string& field, double v,
                 const Range& r) {
  if (!(v >= r.lo && v <= r.hi)) {
    out.push_back(field + ": " + fmt(v) + " outside permitted range " + r.text);
  }
}

void check_set(std::vector<std::string>& out, const std::string& field, int v,
               const std::vector<int>& set, const char* text) {
  if (std::find(set.begin(), set.end(), v) == set.end()) {
    out.push_back(field + ": " + std::to_string(v) + " not in permitted set " + text);
  }
}

// Applies one key; returns an error string or empty.
using Setter = std::function<void(RunConfig&, const nlohmann::json&)>;

struct Field {
  std::string key;
  Setter set;
  // Range check on the resolved config for this key; may be empty.
  std::function<void(const RunConfig&, std::vector<std::string>&)> check;
};

double as_number(const nlohmann::json& v) {
  if (!v.is_number()) throw std::invalid_argument("expected a number");
  return v.get<double>();
}

int as_int(const nlohmann::json& v) {
  if (!v.is_number_integer()) throw std::invalid_argument("expected an integer");
  return v.get<int>();
}

std::string as_string(const nlohmann::json& v) {
  if (!v.is_string()) throw std::invalid_argument("expected a string");
  return v.get<std::string>();
}

bool as_bool(const nlohmann::json& v) {
  if (!v.is_boolean()) throw std::invalid_argument("expected true or false");
  return v.get<bool>();
}

std::uint64_t as_seed(const nlohmann::json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  throw std::invalid_argument("expected a non-negative integer");
}

void set_all_lr(RunConfig& c, double v) {
  c.train.groups.embedding.lr = c.train.groups.diffusion.lr = c.train.groups.reaction.lr = v;
}

void set_all_wd(RunConfig& c, double v) {
  c.train.groups.embedding.weight_decay = c.train.groups.diffusion.weight_decay =
      c.train.groups.reaction.weight_decay = v;
}

const std::vector<Field>& fields() {
  using Out = std::vector<std::string>;
  static const std::vector<Field> table = {
      {"variant", [](RunConfig& c, const nlohmann::json& v) {
         c.model.variant = parse_variant(as_string(v));
       }, nullptr},
      {"layers", [](RunConfig& c, const nlohmann::json& v) { c.model.layers = as_int(v); },
       [](const RunConfig& c, Out& o) {
         check_set(o, "layers", c.model.layers, kLayerChoices, kLayerText);
       }},
      {"channels", [](RunConfig& c, const nlohmann::json& v) { c.model.channels = as_int(v); },
       [](const RunConfig& c, Out& o) {
         check_set(o, "channels", c.model.channels, kChannelChoices, kChannelText);
       }},
      {"h", [](RunConfig& c, const nlohmann::json& v) { c.model.h = as_number(v); },
       [](const RunConfig& c, Out& o) { check_range(o, "h", c.model.h, kStepRange); }},
      {"integrator", [](RunConfig& c, const nlohmann::json& v) {
         c.model.integrator = parse_integrator(as_string(v));
       }, nullptr},
      {"reaction", [](RunConfig& c, const nlohmann::json& v) {
         c.model.reaction = parse_reaction_mode(as_string(v));
       }, nullptr},
      {"input_dropout",
       [](RunConfig& c, const nlohmann::json& v) { c.model.input_dropout = as_number(v); },
       [](const RunConfig& c, Out& o) {
         check_range(o, "input_dropout", c.model.input_dropout, kDropoutRange);
       }},
      {"output_dropout",
       [](RunConfig& c, const nlohmann::json& v) { c.model.output_dropout = as_number(v); },
       [](const RunConfig& c, Out& o) {
         check_range(o, "output_dropout", c.model.output_dropout, kDropoutRange);
       }},
      {"hidden_dropout",
       [](RunConfig& c, const nlohmann::json& v) { c.model.hidden_dropout = as_number(v); },
       [](const RunConfig& c, Out& o) {
         check_range(o, "hidden_dropout", c.model.hidden_dropout, kDropoutRange);
       }},
      {"learn_diffusion",
       [](RunConfig& c, const nlohmann::json& v) { c.model.learn_diffusion = as_bool(v); },
       nullptr},
      // Shorthands; applied before the per-group keys.
      {"lr", [](RunConfig& c, const nlohmann::json& v) { set_all_lr(c, as_number(v)); },
       nullptr},
      {"weight_decay",
       [](RunConfig& c, const nlohmann::json& v) { set_all_wd(c, as_number(v)); }, nullptr},
      {"lr_embedding",
       [](RunConfig& c, const nlohmann::json& v) { c.train.groups.embedding.lr = as_number(v); },
       [](const RunConfig& c, Out& o) {
         check_range(o, "lr_embedding", c.train.groups.embedding.lr, kLrRange);
       }},
      {"lr_diffusion",
       [](RunConfig& c, const nlohmann::json& v) { c.train.groups.diffusion.lr = as_number(v); },
       [](const RunConfig& c, Out& o) {
         check_range(o, "lr_diffusion", c.train.groups.diffusion.lr, kLrRange);
       }},
      {"lr_reaction",
       [](RunConfig& c, const nlohmann::json& v) { c.train.groups.reaction.lr = as_number(v); },
       [](const RunConfig& c, Out& o) {
         check_range(o, "lr_reaction", c.train.groups.reaction.lr, kLrRange);
       }},
      {"wd_embedding",
       [](RunConfig& c, const nlohmann::json& v) {
         c.train.groups.embedding.weight_decay = as_number(v);
       },
       [](const RunConfig& c, Out& o) {
         check_range(o, "wd_embedding", c.train.groups.embedding.weight_decay, kWdRange);
       }},
      {"wd_diffusion",
       [](RunConfig& c, const nlohmann::json& v) {
         c.train.groups.diffusion.weight_decay = as_number(v);
       },
       [](const RunConfig& c, Out& o) {
         check_range(o, "wd_diffusion", c.train.groups.diffusion.weight_decay, kWdRange);
       }},
      {"wd_reaction",
       [](RunConfig& c, const nlohmann::json& v) {
         c.train.groups.reaction.weight_decay = as_number(v);
       },
       [](const RunConfig& c, Out& o) {
         check_range(o, "wd_reaction", c.train.groups.reaction.weight_decay, kWdRange);
       }},
      {"epochs", [](RunConfig& c, const nlohmann::json& v) { c.train.epochs = as_int(v); },
       nullptr},
      {"patience", [](RunConfig& c, const nlohmann::json& v) { c.train.patience = as_int(v); },
       nullptr},
      {"split", [](RunConfig& c, const nlohmann::json& v) { c.train.split = as_string(v); },
       nullptr},
      {"splits", [](RunConfig& c, const nlohmann::json& v) { c.splits = as_int(v); }, nullptr},
      {"seed", [](RunConfig& c, const nlohmann::json& v) { c.seed = as_seed(v); }, nullptr},
      {"cg_tolerance",
       [](RunConfig& c, const nlohmann::json& v) { c.model.solver.forward.tolerance = as_number(v); },
       nullptr},
      {"cg_max_iterations",
       [](RunConfig& c, const nlohmann::json& v) {
         c.model.solver.forward.max_iterations = as_int(v);
       },
       nullptr},
      {"adjoint_tolerance",
       [](RunConfig& c, const nlohmann::json& v) { c.model.solver.adjoint.tolerance = as_number(v); },
       nullptr},
      {"adjoint_max_iterations",
       [](RunConfig& c, const nlohmann::json& v) {
         c.model.solver.adjoint.max_iterations = as_int(v);
       },
       nullptr},
      {"allow_out_of_range",
       [](RunConfig& c, const nlohmann::json& v) { c.allow_out_of_range = as_bool(v); }, nullptr},
  };
  return table;
}

void structural_checks(const RunConfig& c, std::vector<std::string>& out) {
  try {
    c.model.validate();
  } catch (const ConfigError& e) {
    for (const auto& v : e.violations()) out.push_back(v);
  } catch (const std::exception& e) {
    out.push_back(e.what());
  }
  if (c.train.epochs < 0) out.push_back("epochs: must be >= 0");
  if (c.splits < 1) out.push_back("splits: must be >= 1");
  if (c.model.solver.forward.tolerance <= 0.0) out.push_back("cg_tolerance: must be > 0");
  if (c.model.solver.adjoint.tolerance <= 0.0) out.push_back("adjoint_tolerance: must be > 0");
  if (c.model.solver.forward.max_iterations < 1) out.push_back("cg_max_iterations: must be >= 1");
  if (c.model.solver.adjoint.max_iterations < 1) {
    out.push_back("adjoint_max_iterations: must be >= 1");
  }
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

nlohmann::json to_json(const RunConfig& c) {
  const auto& g = c.train.groups;
  return {
      {"variant", to_string(c.model.variant)},
      {"layers", c.model.layers},
      {"channels", c.model.channels},
      {"h", c.model.h},
      {"integrator", to_string(c.model.integrator)},
      {"reaction", to_string(c.model.reaction)},
      {"input_dropout", c.model.input_dropout},
      {"output_dropout", c.model.output_dropout},
      {"hidden_dropout", c.model.hidden_dropout},
      {"learn_diffusion", c.model.learn_diffusion},
      {"lr_embedding", g.embedding.lr},
      {"lr_diffusion", g.diffusion.lr},
      {"lr_reaction", g.reaction.lr},
      {"wd_embedding", g.embedding.weight_decay},
      {"wd_diffusion", g.diffusion.weight_decay},
      {"wd_reaction", g.reaction.weight_decay},
      {"epochs", c.train.epochs},
      {"patience", c.train.patience},
      {"split", c.train.split},
      {"splits", c.splits},
      {"seed", c.seed},
      {"cg_tolerance", c.model.solver.forward.tolerance},
      {"cg_max_iterations", c.model.solver.forward.max_iterations},
      {"adjoint_tolerance", c.model.solver.adjoint.tolerance},
      {"adjoint_max_iterations", c.model.solver.adjoint.max_iterations},
      {"allow_out_of_range", c.allow_out_of_range},
  };
}

std::vector<std::string> range_violations(const RunConfig& cfg) {
  std::vector<std::string> out;
  if (cfg.allow_out_of_range) return out;
  for (const auto& f : fields()) {
    if (f.check) f.check(cfg, out);
  }
  return out;
}

RunConfig resolve_config(const nlohmann::json& j, RunConfig base) {
  if (j.is_null()) return base;
  if (!j.is_object()) throw ConfigError({"config: top level must be a JSON object"});
  std::vector<std::string> errors;
  for (const auto& [key, value] : j.items()) {
    if (std::find(config_keys().begin(), config_keys().end(), key) == config_keys().end()) {
      errors.push_back(key + ": unknown field");
    }
  }
  // Table order puts shorthands before the per-group keys they expand to.
  for (const auto& f : fields()) {
    auto it = j.find(f.key);
    if (it == j.end()) continue;
    try {
      f.set(base, *it);
    } catch (const std::exception& e) {
      errors.push_back(f.key + ": " + e.what());
    }
  }
  if (errors.empty()) {
    structural_checks(base, errors);
    const std::size_t structural = errors.size();
    // Report each field once; a structural message takes precedence.
    for (auto& r : range_violations(base)) {
      const std::string field = r.substr(0, r.find(':'));
      const bool seen = std::any_of(errors.begin(), errors.begin() + structural,
                                    [&](const std::string& e) {
                                      return e.rfind(field + ":", 0) == 0 ||
                                             e.rfind(field + " ", 0) == 0;
                                    });
      if (!seen) errors.push_back(std::move(r));
    }
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return base;
}

RunConfig validate_config(const std::filesystem::path& path, RunConfig base) {
  const std::string text = read_file(path);
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    return resolve_config(nlohmann::json(), std::move(base));
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({path.string() + ": " + e.what()});
  }
  // A run manifest replays its materialized configuration.
  if (j.is_object() && j.contains("resolved_config") && j.value("tool", "") == "rdgnn") {
    return resolve_config(j.at("resolved_config"), std::move(base));
  }
  return resolve_config(j, std::move(base));
}

}  // namespace rdgnn
