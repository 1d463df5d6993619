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

#include "rdgnn/cli.hpp"

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rdgnn/analysis.hpp"
#include "rdgnn/checkpoint.hpp"
#include "rdgnn/config.hpp"
#include "rdgnn/datasets.hpp"
#include "rdgnn/errors.hpp"
#include "rdgnn/io_util.hpp"
#include "rdgnn/training.hpp"

#ifndef RDGNN_VERSION
#define RDGNN_VERSION "0.0.0"
#endif

namespace rdgnn {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

// Config keys exposed as flags, with the JSON type each flag value becomes.
enum class Kind { kInt, kUint, kDouble, kString, kBool };

const std::vector<std::pair<std::string, Kind>>& flag_kinds() {
  static const std::vector<std::pair<std::string, Kind>> kinds = {
      {"variant", Kind::kString},        {"layers", Kind::kInt},
      {"channels", Kind::kInt},          {"h", Kind::kDouble},
      {"integrator", Kind::kString},     {"reaction", Kind::kString},
      {"input_dropout", Kind::kDouble},  {"output_dropout", Kind::kDouble},
      {"hidden_dropout", Kind::kDouble}, {"learn_diffusion", Kind::kBool},
      {"lr", Kind::kDouble},             {"weight_decay", Kind::kDouble},
      {"lr_embedding", Kind::kDouble},   {"lr_diffusion", Kind::kDouble},
      {"lr_reaction", Kind::kDouble},    {"wd_embedding", Kind::kDouble},
      {"wd_diffusion", Kind::kDouble},   {"wd_reaction", Kind::kDouble},
      {"epochs", Kind::kInt},            {"patience", Kind::kInt},
      {"split", Kind::kString},          {"splits", Kind::kInt},
      {"seed", Kind::kUint},             {"cg_tolerance", Kind::kDouble},
      {"cg_max_iterations", Kind::kInt}, {"adjoint_tolerance", Kind::kDouble},
      {"adjoint_max_iterations", Kind::kInt},
      {"allow_out_of_range", Kind::kBool},
  };
  return kinds;
}

std::string kebab(std::string s) {
  for (char& ch : s) {
    if (ch == '_') ch = '-';
  }
  return s;
}

json convert_flag(const std::string& key, const std::string& raw, Kind kind) {
  try {
    std::size_t used = 0;
    switch (kind) {
      case Kind::kInt: {
        const long long v = std::stoll(raw, &used);
        if (used != raw.size()) break;
        return v;
      }
      case Kind::kUint: {
        if (!raw.empty() && raw[0] == '-') break;
        const unsigned long long v = std::stoull(raw, &used);
        if (used != raw.size()) break;
        return v;
      }
      case Kind::kDouble: {
        const double v = std::stod(raw, &used);
        if (used != raw.size()) break;
        return v;
      }
      case Kind::kString:
        return raw;
      case Kind::kBool:
        if (raw == "true" || raw == "1" || raw == "yes") return true;
        if (raw == "false" || raw == "0" || raw == "no") return false;
        break;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError({"--" + kebab(key) + ": cannot parse '" + raw + "'"});
}

// Flags shared by every subcommand that resolves a RunConfig.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> raw;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file (flags override it)");
    for (const auto& [key, kind] : flag_kinds()) {
      options[key] = app->add_option("--" + kebab(key), raw[key]);
    }
  }

  json overrides() const {
    json j = json::object();
    for (const auto& [key, kind] : flag_kinds()) {
      if (options.at(key)->count() > 0) j[key] = convert_flag(key, raw.at(key), kind);
    }
    return j;
  }

  RunConfig resolve() const {
    RunConfig base;
    if (!config_path.empty()) base = validate_config(config_path);
    RunConfig cfg = resolve_config(overrides(), base);
    apply_seed(cfg);
    return cfg;
  }
};

// Collects the manifest while a subcommand runs.
class Run {
 public:
  Run(std::string command, int argc, const char* const* argv, fs::path out_dir)
      : command_(std::move(command)), out_dir_(std::move(out_dir)), start_(Clock::now()) {
    for (int i = 0; i < argc; ++i) argv_.emplace_back(argv[i]);
    fs::create_directories(out_dir_);
  }

  void input(const fs::path& path) { inputs_[path.string()] = file_digest(path); }

  fs::path write(const std::string& name, std::string_view content) {
    const fs::path path = out_dir_ / name;
    write_file_atomic(path, content);
    outputs_.push_back(path.string());
    return path;
  }

  fs::path write_json(const std::string& name, const json& j) {
    return write(name, j.dump(2) + "\n");
  }

  void config(json c) { config_ = std::move(c); }
  void seed(std::uint64_t s) { seed_ = s; }
  void timing(const std::string& name, double seconds) { timings_[name] = seconds; }

  void finish() {
    timings_["total_seconds"] = std::chrono::duration<double>(Clock::now() - start_).count();
    json manifest = {
        {"tool", "rdgnn"},
        {"version", RDGNN_VERSION},
        {"command", command_},
        {"argv", argv_},
        {"resolved_config", config_},
        {"seed", seed_},
        {"inputs", inputs_},
        {"outputs", outputs_},
        {"timings", timings_},
    };
    const fs::path path = out_dir_ / "manifest.json";
    write_file_atomic(path, manifest.dump(2) + "\n");
  }

 private:
  std::string command_;
  fs::path out_dir_;
  Clock::time_point start_;
  std::vector<std::string> argv_;
  json config_ = json::object();
  std::uint64_t seed_ = 0;
  std::map<std::string, std::string> inputs_;
  std::vector<std::string> outputs_;
  std::map<std::string, double> timings_;
};

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

Dataset load_classification(const fs::path& path, const RunConfig& cfg) {
  Dataset ds = load_json_dataset(path);
  if (!ds.is_classification()) throw ParseError(path.string(), "dataset has no labels");
  if (ds.splits.empty()) {
    ds.splits = make_splits(ds.labels, kDefaultSplitRatios, cfg.splits, derive_seed(cfg.seed, 2));
  }
  return ds;
}

std::vector<std::string> split_names(const Dataset& ds, const RunConfig& cfg) {
  std::vector<std::string> names;
  for (int k = 0; k < cfg.splits; ++k) {
    const std::string name = "split" + std::to_string(k);
    if (!ds.splits.count(name)) {
      throw ParseError("splits", "dataset has no split named '" + name + "'");
    }
    names.push_back(name);
  }
  return names;
}

std::string states_csv(const std::vector<Matrix>& states) {
  std::ostringstream os;
  os.precision(17);
  os << "layer,node";
  const Index c = states.empty() ? 0 : states.front().cols();
  for (Index j = 0; j < c; ++j) os << ",c" << j;
  os << '\n';
  for (std::size_t l = 0; l < states.size(); ++l) {
    for (Index i = 0; i < states[l].rows(); ++i) {
      os << l << ',' << i;
      for (Index j = 0; j < c; ++j) os << ',' << states[l](i, j);
      os << '\n';
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Subcommands.

struct Common {
  std::string out_dir = ".";
  ConfigFlags flags;
};

int run_train(const Common& c, const std::string& dataset_path, int argc,
              const char* const* argv, std::ostream& out) {
  const RunConfig cfg = c.flags.resolve();
  Run run("train", argc, argv, c.out_dir);
  run.config(to_json(cfg));
  run.seed(cfg.seed);
  run.input(dataset_path);
  const Dataset ds = load_classification(dataset_path, cfg);
  const auto t0 = Clock::now();
  TrainResult r = train_node_classification(ds, cfg.model, cfg.train);
  run.timing("train_seconds", seconds_since(t0));
  json metrics = to_json(r.metrics);
  metrics["dataset"] = {{"name", ds.name},
                        {"nodes", ds.num_nodes()},
                        {"edges", ds.graph.num_undirected_edges()},
                        {"classes", ds.num_classes()},
                        {"homophily", ds.homophily()},
                        {"split", cfg.train.split}};
  run.write_json("metrics.json", metrics);
  run.write("checkpoint.json", checkpoint_to_json(r.config, r.params).dump() + "\n");
  run.finish();
  out << "train " << r.metrics.train << " val " << r.metrics.val << " test " << r.metrics.test
      << " best_epoch " << r.metrics.best_epoch << '\n';
  return kExitOk;
}

int run_temporal(const Common& c, const std::string& graph_path, const std::string& signal_path,
                 int lags, const std::string& mode_name, int argc, const char* const* argv,
                 std::ostream& out) {
  const RunConfig cfg = c.flags.resolve();
  const TemporalMode mode = parse_temporal_mode(mode_name);
  Run run("temporal-train", argc, argv, c.out_dir);
  json resolved = to_json(cfg);
  resolved["lags"] = lags;
  resolved["mode"] = to_string(mode);
  run.config(resolved);
  run.seed(cfg.seed);
  run.input(graph_path);
  run.input(signal_path);
  const Dataset graph_ds = load_json_dataset(graph_path);
  const Matrix signal = load_signal_csv(signal_path);
  const TemporalDataset ds =
      temporal_from_signal(graph_ds.graph, signal, lags, fs::path(signal_path).stem().string());
  const auto t0 = Clock::now();
  TrainResult r = train_spatiotemporal(ds, cfg.model, cfg.train, mode);
  run.timing("train_seconds", seconds_since(t0));
  json metrics = to_json(r.metrics);
  metrics["mode"] = to_string(mode);
  metrics["snapshots"] = ds.snapshots.size();
  metrics["train_snapshots"] = temporal_train_count(ds.snapshots.size());
  run.write_json("metrics.json", metrics);
  run.write("checkpoint.json", checkpoint_to_json(r.config, r.params).dump() + "\n");
  run.finish();
  out << "train_mse " << r.metrics.train << " test_mse " << r.metrics.test << '\n';
  return kExitOk;
}

int run_grid(const Common& c, const std::string& dataset_path, int budget, int jobs, int argc,
             const char* const* argv, std::ostream& out) {
  const RunConfig cfg = c.flags.resolve();
  Run run("grid-search", argc, argv, c.out_dir);
  json resolved = to_json(cfg);
  resolved["budget"] = budget;
  run.config(resolved);
  run.seed(cfg.seed);
  run.input(dataset_path);
  const Dataset ds = load_classification(dataset_path, cfg);
  GridSearchOptions opts;
  opts.budget = budget;
  opts.jobs = jobs;
  opts.seed = derive_seed(cfg.seed, 3);
  const auto t0 = Clock::now();
  const std::vector<GridRun> runs = grid_search(SearchSpace{}, ds, cfg.model, cfg.train, opts);
  run.timing("search_seconds", seconds_since(t0));
  run.write("grid_results.csv", grid_results_csv(runs));
  json all = json::array();
  for (const auto& g : runs) {
    json entry = {{"index", g.index}, {"model", to_json(g.model)}, {"metrics", to_json(g.metrics)}};
    if (!g.error.empty()) entry["error"] = g.error;
    all.push_back(std::move(entry));
  }
  run.write_json("grid_results.json", all);
  if (!runs.front().error.empty()) {
    run.finish();
    throw TrainingError("grid-search: every sampled configuration diverged");
  }
  // Best run as a config file usable with --config.
  RunConfig best = cfg;
  best.model = runs.front().model;
  best.train = runs.front().train;
  json best_json = to_json(best);
  best_json.erase("seed");
  run.write_json("best_config.json", best_json);
  run.finish();
  out << "best index " << runs.front().index << " val " << runs.front().metrics.val << " test "
      << runs.front().metrics.test << '\n';
  return kExitOk;
}

int run_depth(const Common& c, const std::string& dataset_path, const std::vector<int>& depths,
              const std::vector<std::string>& series_names, int argc, const char* const* argv,
              std::ostream& out) {
  const RunConfig cfg = c.flags.resolve();
  Run run("depth-study", argc, argv, c.out_dir);
  json resolved = to_json(cfg);
  resolved["depths"] = depths;
  resolved["series"] = series_names;
  run.config(resolved);
  run.seed(cfg.seed);
  run.input(dataset_path);
  const Dataset ds = load_classification(dataset_path, cfg);
  std::vector<DepthSeries> series;
  for (const auto& name : series_names) {
    DepthSeries s{name, cfg.model, nullptr};
    if (name == "diffusion") {
      s.model.reaction = ReactionMode::kNone;
      s.model.learn_diffusion = false;
    } else {
      s.model.reaction = parse_reaction_mode(name);
    }
    series.push_back(std::move(s));
  }
  const auto t0 = Clock::now();
  const DepthStudy study = depth_study(ds, series, cfg.train, depths, split_names(ds, cfg));
  run.timing("study_seconds", seconds_since(t0));
  const std::string csv = depth_study_csv(study);
  run.write("depth_study.csv", csv);
  run.finish();
  out << csv;
  return kExitOk;
}

int run_analyze(const Common& c, const std::string& ckpt_path, const std::string& dataset_path,
                int layer, std::optional<double> time, int argc, const char* const* argv,
                std::ostream& out) {
  Run run("analyze", argc, argv, c.out_dir);
  run.input(ckpt_path);
  run.input(dataset_path);
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const ModelConfig& mc = ckpt.config;
  const Dataset ds = load_json_dataset(dataset_path);
  if (layer < 0 || layer >= mc.layers) {
    throw ConfigError({"--layer: " + std::to_string(layer) + " outside [0, " +
                       std::to_string(mc.layers - 1) + "]"});
  }
  const double t = time.value_or(mc.h * layer);
  json resolved = {{"model", to_json(mc)}, {"layer", layer}, {"time", t}};
  run.config(resolved);
  run.seed(mc.seed);

  const NormalizedLaplacian lap = normalized_laplacian(ds.graph);
  Tape tape;
  BoundParams bound(tape, ckpt.params, false);
  const Matrix u0 = forward(bound, ds.features, lap, mc).embedded.value();
  const std::string block = layer_block(mc, layer);
  const RowVector sigma_hat = ckpt.params.at(block + ".diffusion.sigma_hat");
  RowVector e_sigma;
  if (mc.time_embedding()) e_sigma = ckpt.params.at(block + ".diffusion.e_sigma");
  const RowVector sigma =
      diffusion_coefficients(sigma_hat, mc.time_embedding() ? &e_sigma : nullptr, t);
  const StabilityReport report =
      turing_check(lap, sigma, model_reaction_map(ckpt.params, mc, u0, layer, t), u0);
  json j = to_json(report);
  j["layer"] = layer;
  j["time"] = t;
  j["linearization_point"] = "embedded_input";
  j["diffusion_coefficients"] = std::vector<double>(sigma.data(), sigma.data() + sigma.size());
  run.write_json("stability_report.json", j);
  run.finish();
  out << "max_real " << report.max_real << " positive " << report.positive_count << " turing "
      << (report.turing ? "yes" : "no") << '\n';
  return kExitOk;
}

struct SimulateFlags {
  std::string graph;
  double kappa = 1.0;
  double h = 1.0;
  int layers = 8;
  std::string reaction = "off";
  double k_u = 0.0;
  std::string integrator = "imex";
  std::uint64_t seed = 0;
};

int run_simulate(const Common& c, const SimulateFlags& s, int argc, const char* const* argv,
                 std::ostream& out) {
  const ReactionMode mode = parse_reaction_mode(s.reaction);
  if (mode != ReactionMode::kNone && mode != ReactionMode::kLinear) {
    throw ConfigError({"--reaction: simulate supports off or linear"});
  }
  const Integrator integrator = parse_integrator(s.integrator);
  std::vector<std::string> errors;
  if (!(s.h > 0.0)) errors.push_back("--h: must be > 0");
  if (!(s.kappa >= 0.0)) errors.push_back("--kappa: must be >= 0");
  if (s.layers < 0) errors.push_back("--layers: must be >= 0");
  if (!errors.empty()) throw ConfigError(errors);

  Run run("simulate", argc, argv, c.out_dir);
  run.config({{"graph", s.graph},
              {"kappa", s.kappa},
              {"h", s.h},
              {"layers", s.layers},
              {"reaction", to_string(mode)},
              {"k_u", s.k_u},
              {"integrator", to_string(integrator)}});
  run.seed(s.seed);
  run.input(s.graph);
  const Dataset ds = load_json_dataset(s.graph);
  if (ds.features.cols() == 0) {
    throw ParseError(s.graph, "simulate needs node features as the initial state");
  }
  const NormalizedLaplacian lap = normalized_laplacian(ds.graph);
  const Index ch = ds.features.cols();
  Tape tape;
  const Var sigma = tape.constant(RowVector::Constant(ch, s.kappa));
  const Var k_u = tape.constant(s.k_u * Matrix::Identity(ch, ch));
  SolverOptions solver;
  solver.forward = {1e-12, 1000};
  std::vector<Matrix> states{ds.features};
  Var u = tape.constant(ds.features);
  for (int l = 0; l < s.layers; ++l) {
    const Var f = mode == ReactionMode::kLinear ? matmul(u, k_u)
                                                : tape.constant(Matrix::Zero(u.rows(), ch));
    u = integrator == Integrator::kExplicit ? explicit_step(u, lap, sigma, f, s.h)
                                            : imex_step(u, lap, sigma, f, s.h, solver);
    states.push_back(u.value());
  }
  run.write("trace.csv", trace_to_csv(dynamics_trace(ds.graph, states)));
  run.write("states.csv", states_csv(states));
  run.finish();
  out << "layers " << s.layers << " final_energy " << dirichlet_energy(ds.graph, states.back())
      << '\n';
  return kExitOk;
}

int run_generate_sbm(const Common& c, SbmOptions o, int argc, const char* const* argv,
                     std::ostream& out) {
  Run run("generate-sbm", argc, argv, c.out_dir);
  run.config({{"n", o.n},
              {"classes", o.classes},
              {"p_in", o.p_in},
              {"p_out", o.p_out},
              {"feature_dim", o.feature_dim},
              {"noise", o.noise},
              {"splits", o.split_count}});
  run.seed(o.seed);
  const Dataset ds = synth_sbm(o);
  run.write("dataset.json", dataset_to_json(ds).dump() + "\n");
  run.finish();
  out << "nodes " << ds.num_nodes() << " edges " << ds.graph.num_undirected_edges()
      << " homophily " << ds.homophily() << '\n';
  return kExitOk;
}

int run_generate_temporal(const Common& c, const std::string& graph_path, TemporalOptions o,
                          int argc, const char* const* argv, std::ostream& out) {
  Run run("generate-temporal", argc, argv, c.out_dir);
  run.config({{"graph", graph_path},
              {"periods", o.periods},
              {"period_length", o.period_length},
              {"diffusion", o.diffusion},
              {"sources", o.sources},
              {"noise", o.noise},
              {"burn_in_periods", o.burn_in_periods}});
  run.seed(o.seed);
  run.input(graph_path);
  const Dataset g = load_json_dataset(graph_path);
  const Matrix signal = simulate_periodic_signal(g.graph, o);
  std::ostringstream os;
  os.precision(17);
  for (Index i = 0; i < signal.cols(); ++i) os << (i ? "," : "") << "node" << i;
  os << '\n';
  for (Index t = 0; t < signal.rows(); ++t) {
    for (Index i = 0; i < signal.cols(); ++i) os << (i ? "," : "") << signal(t, i);
    os << '\n';
  }
  run.write("signal.csv", os.str());
  run.finish();
  out << "steps " << signal.rows() << " nodes " << signal.cols() << '\n';
  return kExitOk;
}

void report(std::ostream& err, const std::string& kind, const std::string& message,
            const std::vector<std::string>& violations = {}) {
  json j = {{"error", kind}, {"message", message}};
  if (!violations.empty()) j["violations"] = violations;
  err << j.dump() << '\n';
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reaction-diffusion graph neural networks"};
  app.set_version_flag("--version", std::string(RDGNN_VERSION));
  app.require_subcommand(1);
  // `--h` is the step size, so help is long-form only.
  app.set_help_flag("--help", "Print this help message and exit");

  Common common;
  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", common.out_dir, "Output directory")->capture_default_str();
  };

  std::string dataset, checkpoint, graph, signal, mode = "incremental";
  int lags = 4, budget = 8, jobs = 1, layer = 0;
  std::optional<double> time;
  std::vector<int> depths = kDefaultDepths;
  std::vector<std::string> series{"all"};

  auto* train = app.add_subcommand("train", "Node classification training");
  train->add_option("--dataset", dataset, "Dataset JSON")->required();
  add_out(train);

  auto* temporal = app.add_subcommand("temporal-train", "Next-step node regression");
  temporal->add_option("--graph", graph, "Dataset JSON providing the graph")
      ->required();
  temporal->add_option("--signal", signal, "CSV signal, one row per timestamp")
      ->required();
  temporal->add_option("--lags", lags, "Lagged steps used as features")->capture_default_str();
  temporal->add_option("--mode", mode, "incremental or cumulative")->capture_default_str();
  add_out(temporal);

  auto* grid = app.add_subcommand("grid-search", "Random search over the hyperparameter ranges");
  grid->add_option("--dataset", dataset, "Dataset JSON")->required();
  grid->add_option("--budget", budget, "Number of sampled configurations")->capture_default_str();
  grid->add_option("--jobs", jobs, "Concurrent training runs")->capture_default_str();
  add_out(grid);

  auto* depth = app.add_subcommand("depth-study", "Test accuracy versus number of layers");
  depth->add_option("--dataset", dataset, "Dataset JSON")->required();
  depth->add_option("--depths", depths, "Layer counts")->delimiter(',');
  depth->add_option("--series", series,
                    "Reaction modes to compare; 'diffusion' is the pure-diffusion control")
      ->delimiter(',');
  add_out(depth);

  auto* analyze = app.add_subcommand("analyze", "Stability report for a trained model");
  analyze->add_option("--checkpoint", checkpoint, "Checkpoint file")
      ->required();
  analyze->add_option("--dataset", dataset, "Dataset JSON")->required();
  analyze->add_option("--layer", layer, "Layer whose reaction is linearized")
      ->capture_default_str();
  analyze->add_option("--time", time, "Layer time (default h * layer)");
  add_out(analyze);

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Per-layer trace of fixed dynamics");
  simulate->add_option("--graph", sim.graph, "Dataset JSON; features are the initial state")
      ->required();
  simulate->add_option("--kappa", sim.kappa, "Diffusion coefficient")->capture_default_str();
  simulate->add_option("--h", sim.h, "Step size")->capture_default_str();
  simulate->add_option("--layers", sim.layers, "Number of steps")->capture_default_str();
  simulate->add_option("--reaction", sim.reaction, "off or linear")->capture_default_str();
  simulate->add_option("--k-u", sim.k_u, "Linear reaction gain (f = k_u U)")
      ->capture_default_str();
  simulate->add_option("--integrator", sim.integrator, "imex or explicit")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Recorded in the manifest");
  add_out(simulate);

  SbmOptions sbm;
  auto* gen_sbm = app.add_subcommand("generate-sbm", "Write a synthetic SBM dataset");
  gen_sbm->add_option("--n", sbm.n)->capture_default_str();
  gen_sbm->add_option("--classes", sbm.classes)->capture_default_str();
  gen_sbm->add_option("--p-in", sbm.p_in)->capture_default_str();
  gen_sbm->add_option("--p-out", sbm.p_out)->capture_default_str();
  gen_sbm->add_option("--feature-dim", sbm.feature_dim)->capture_default_str();
  gen_sbm->add_option("--noise", sbm.noise)->capture_default_str();
  gen_sbm->add_option("--splits", sbm.split_count)->capture_default_str();
  gen_sbm->add_option("--seed", sbm.seed)->capture_default_str();
  add_out(gen_sbm);

  TemporalOptions tmp;
  auto* gen_tmp = app.add_subcommand("generate-temporal", "Write a synthetic periodic signal");
  gen_tmp->add_option("--graph", graph, "Dataset JSON providing the graph")
      ->required();
  gen_tmp->add_option("--periods", tmp.periods)->capture_default_str();
  gen_tmp->add_option("--period-length", tmp.period_length)->capture_default_str();
  gen_tmp->add_option("--diffusion", tmp.diffusion)->capture_default_str();
  gen_tmp->add_option("--sources", tmp.sources)->capture_default_str();
  gen_tmp->add_option("--noise", tmp.noise)->capture_default_str();
  gen_tmp->add_option("--burn-in-periods", tmp.burn_in_periods)->capture_default_str();
  gen_tmp->add_option("--seed", tmp.seed)->capture_default_str();
  add_out(gen_tmp);

  std::string config_file;
  auto* validate = app.add_subcommand("validate-config", "Resolve and check a config file");
  validate->add_option("--config", config_file, "JSON config file")->required();

  // An option belongs to exactly one app, so each training subcommand gets
  // its own flag set; the parsed one is copied into `common` below.
  std::map<CLI::App*, ConfigFlags> flag_sets;
  for (CLI::App* sub : {train, temporal, grid, depth}) flag_sets[sub].attach(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report(err, "usage", e.what());
    return kExitUsage;
  }

  try {
    for (auto& [sub, flags] : flag_sets) {
      if (sub->parsed()) common.flags = flags;
    }
    if (train->parsed()) return run_train(common, dataset, argc, argv, out);
    if (temporal->parsed()) {
      return run_temporal(common, graph, signal, lags, mode, argc, argv, out);
    }
    if (grid->parsed()) return run_grid(common, dataset, budget, jobs, argc, argv, out);
    if (depth->parsed()) return run_depth(common, dataset, depths, series, argc, argv, out);
    if (analyze->parsed()) {
      return run_analyze(common, checkpoint, dataset, layer, time, argc, argv, out);
    }
    if (simulate->parsed()) return run_simulate(common, sim, argc, argv, out);
    if (gen_sbm->parsed()) return run_generate_sbm(common, sbm, argc, argv, out);
    if (gen_tmp->parsed()) return run_generate_temporal(common, graph, tmp, argc, argv, out);
    if (validate->parsed()) {
      RunConfig cfg = validate_config(config_file);
      apply_seed(cfg);
      out << to_json(cfg).dump(2) << '\n';
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    report(err, "config", e.what(), e.violations());
    return kExitUsage;
  } catch (const ParseError& e) {
    report(err, "input", e.what(), {e.record()});
    return kExitInput;
  } catch (const IoError& e) {
    report(err, "input", e.what());
    return kExitInput;
  } catch (const std::ios_base::failure& e) {
    report(err, "input", e.what());
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    report(err, "input", e.what());
    return kExitInput;
  } catch (const SolverError& e) {
    report(err, "solver", e.what());
    return kExitNumeric;
  } catch (const NumericError& e) {
    report(err, "numeric", e.what());
    return kExitNumeric;
  } catch (const TrainingError& e) {
    report(err, "training", e.what());
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    report(err, "usage", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    report(err, "internal", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}

int dispatch(int argc, const char* const* argv) {
  return dispatch(argc, argv, std::cout, std::cerr);
}

}  // namespace rdgnn
