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

#include "rdgnn/training.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

namespace rdgnn {

// ---------------------------------------------------------------------------
// Losses.

Var cross_entropy_loss(const Var& logits, std::span<const int> labels,
                       std::span<const Index> mask) {
  if (mask.empty()) throw std::invalid_argument("cross_entropy_loss: empty mask");
  const Matrix& z = logits.value();
  if (static_cast<Index>(labels.size()) != z.rows()) {
    throw ShapeError("cross_entropy_loss: label count does not match logits rows");
  }
  Matrix probs(static_cast<Index>(mask.size()), z.cols());
  double total = 0.0;
  for (std::size_t k = 0; k < mask.size(); ++k) {
    const Index i = mask[k];
    if (i < 0 || i >= z.rows()) throw std::out_of_range("cross_entropy_loss: mask index");
    const int y = labels[i];
    if (y < 0 || y >= z.cols()) {
      throw std::out_of_range("cross_entropy_loss: label " + std::to_string(y) +
                              " outside [0, " + std::to_string(z.cols()) + ")");
    }
    const double shift = z.row(i).maxCoeff();
    const RowVector e = (z.row(i).array() - shift).exp().matrix();
    const double s = e.sum();
    total += -(z(i, y) - shift - std::log(s));
    probs.row(static_cast<Index>(k)) = e / s;
  }
  Matrix out(1, 1);
  out(0, 0) = total / static_cast<double>(mask.size());
  std::vector<Index> rows(mask.begin(), mask.end());
  std::vector<int> ys;
  ys.reserve(rows.size());
  for (Index i : rows) ys.push_back(labels[i]);
  return logits.tape().record(
      std::move(out), {logits},
      [logits, rows = std::move(rows), ys = std::move(ys), probs = std::move(probs)](
          const Matrix& g, Tape& t) {
        Matrix grad = Matrix::Zero(logits.rows(), logits.cols());
        const double w = g(0, 0) / static_cast<double>(rows.size());
        for (std::size_t k = 0; k < rows.size(); ++k) {
          grad.row(rows[k]) += w * probs.row(static_cast<Index>(k));
          grad(rows[k], ys[k]) -= w;
        }
        t.accumulate(logits, grad);
      });
}

Var mse_loss(const Var& pred, const Matrix& target, std::span<const Index> mask) {
  if (mask.empty()) throw std::invalid_argument("mse_loss: empty mask");
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw ShapeError("mse_loss: prediction and target shapes differ");
  }
  const double count = static_cast<double>(mask.size()) * static_cast<double>(pred.cols());
  Matrix diff = Matrix::Zero(pred.rows(), pred.cols());
  for (Index i : mask) {
    if (i < 0 || i >= pred.rows()) throw std::out_of_range("mse_loss: mask index");
    diff.row(i) = pred.value().row(i) - target.row(i);
  }
  Matrix out(1, 1);
  out(0, 0) = diff.squaredNorm() / count;
  return pred.tape().record(std::move(out), {pred},
                            [pred, diff, count](const Matrix& g, Tape& t) {
                              t.accumulate(pred, (2.0 * g(0, 0) / count) * diff);
                            });
}

Var mse_loss(const Var& pred, const Matrix& target) {
  std::vector<Index> all(static_cast<std::size_t>(pred.rows()));
  for (Index i = 0; i < pred.rows(); ++i) all[i] = i;
  return mse_loss(pred, target, all);
}

double accuracy(const Matrix& logits, std::span<const int> labels, std::span<const Index> mask) {
  if (mask.empty()) return 0.0;
  Index correct = 0;
  for (Index i : mask) {
    Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    if (arg == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(mask.size());
}

// ---------------------------------------------------------------------------
// Adam.

AdamState adam_init(const ModelParams& params) {
  AdamState s;
  for (const auto& p : params.entries()) {
    s.m.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    s.v.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  }
  return s;
}

void adam_step(ModelParams& params, const std::vector<Matrix>& grads,
               const GroupSettings& groups, AdamState& state) {
  auto& entries = params.entries();
  if (grads.size() != entries.size() || state.m.size() != entries.size()) {
    throw ShapeError("adam_step: parameter, gradient and state counts differ");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(kAdamBeta1, state.step);
  const double c2 = 1.0 - std::pow(kAdamBeta2, state.step);
  for (std::size_t k = 0; k < entries.size(); ++k) {
    Matrix& p = entries[k].value;
    const Matrix& g = grads[k];
    if (g.rows() != p.rows() || g.cols() != p.cols() || state.m[k].rows() != p.rows() ||
        state.m[k].cols() != p.cols()) {
      throw ShapeError("adam_step: shape mismatch for " + entries[k].name);
    }
    const GroupHyper& hyper = groups[entries[k].group];
    state.m[k] = kAdamBeta1 * state.m[k] + (1.0 - kAdamBeta1) * g;
    state.v[k] = kAdamBeta2 * state.v[k] + (1.0 - kAdamBeta2) * g.cwiseAbs2();
    if (hyper.lr == 0.0) continue;
    if (hyper.weight_decay != 0.0) p *= 1.0 - hyper.lr * hyper.weight_decay;
    p.array() -= hyper.lr * (state.m[k].array() / c1) /
                 ((state.v[k].array() / c2).sqrt() + kAdamEpsilon);
  }
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const Metrics& m) {
  return {{"task", m.task},
          {"train", m.train},
          {"val", m.val},
          {"test", m.test},
          {"best_epoch", m.best_epoch},
          {"epochs_run", m.epochs_run},
          {"loss_curve", m.loss_curve},
          {"val_curve", m.val_curve},
          {"epoch_seconds", m.epoch_seconds}};
}

namespace {

// Overflow inside the dynamics surfaces as a NumericError from the solver or
// the tape; report it the same way as a non-finite loss.
[[noreturn]] void numeric_failure(int epoch, const NumericError& e) {
  const std::string when =
      epoch < 0 ? "initial evaluation" : "epoch " + std::to_string(epoch);
  throw TrainingError("numerical failure at " + when + ": " + e.what());
}

using Clock = std::chrono::steady_clock;

std::vector<Matrix> collect_grads(const BoundParams& bound) {
  std::vector<Matrix> grads;
  grads.reserve(bound.vars().size());
  for (const Var& v : bound.vars()) grads.push_back(v.grad());
  return grads;
}

GroupSettings effective_groups(const ModelConfig& cfg, const TrainConfig& train) {
  GroupSettings g = train.groups;
  if (!cfg.learn_diffusion) g.diffusion = {0.0, 0.0};
  return g;
}

}  // namespace

TrainResult train_node_classification(const Dataset& ds, ModelConfig cfg,
                                      const TrainConfig& train) {
  if (!ds.is_classification()) throw std::invalid_argument("dataset has no labels");
  cfg.in_features = static_cast<int>(ds.features.cols());
  cfg.out_features = ds.num_classes();
  ModelParams init = init_params(cfg, cfg.seed);
  return train_node_classification(ds, cfg, std::move(init), train);
}

TrainResult train_node_classification(const Dataset& ds, const ModelConfig& cfg,
                                      ModelParams params, const TrainConfig& train) {
  cfg.validate();
  if (!ds.is_classification()) throw std::invalid_argument("dataset has no labels");
  if (ds.features.cols() == 0) throw std::invalid_argument("dataset has no features");
  auto split_it = ds.splits.find(train.split);
  if (split_it == ds.splits.end()) {
    throw std::invalid_argument("dataset has no split named '" + train.split + "'");
  }
  const Split& split = split_it->second;
  if (split.train.empty()) throw std::invalid_argument("empty training mask");

  const NormalizedLaplacian lap = normalized_laplacian(ds.graph);
  const GroupSettings groups = effective_groups(cfg, train);
  AdamState state = adam_init(params);
  std::mt19937_64 rng(train.seed);

  auto evaluate = [&](const ModelParams& p, Metrics& m) {
    const Matrix logits = predict(p, ds.features, lap, cfg);
    m.train = accuracy(logits, ds.labels, split.train);
    m.val = accuracy(logits, ds.labels, split.val);
    m.test = accuracy(logits, ds.labels, split.test);
  };

  TrainResult result;
  result.config = cfg;
  Metrics& metrics = result.metrics;
  metrics.task = "classification";
  try {
    evaluate(params, metrics);
  } catch (const NumericError& e) {
    numeric_failure(-1, e);
  }
  ModelParams best = params;
  int since_best = 0;

  int epoch = 0;
  try {
    for (; epoch < train.epochs; ++epoch) {
      const auto start = Clock::now();
      Tape tape;
      BoundParams bound(tape, params, true);
      ForwardOptions fo;
      fo.training = true;
      fo.rng = &rng;
      ForwardResult fwd = forward(bound, ds.features, lap, cfg, fo);
      Var loss = cross_entropy_loss(fwd.output, ds.labels, split.train);
      const double loss_value = loss.value()(0, 0);
      if (!std::isfinite(loss_value)) {
        throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch));
      }
      tape.backward(loss);
      adam_step(params, collect_grads(bound), groups, state);

      Metrics current;
      evaluate(params, current);
      metrics.loss_curve.push_back(loss_value);
      metrics.val_curve.push_back(current.val);
      metrics.epochs_run = epoch + 1;
      if (current.val > metrics.val) {
        metrics.train = current.train;
        metrics.val = current.val;
        metrics.test = current.test;
        metrics.best_epoch = epoch;
        best = params;
        since_best = 0;
      } else {
        ++since_best;
      }
      metrics.epoch_seconds.push_back(
          std::chrono::duration<double>(Clock::now() - start).count());
      if (train.patience > 0 && since_best >= train.patience) break;
    }
  } catch (const NumericError& e) {
    numeric_failure(epoch, e);
  }
  result.params = std::move(best);
  return result;
}

// ---------------------------------------------------------------------------

std::string to_string(TemporalMode mode) {
  return mode == TemporalMode::kIncremental ? "incremental" : "cumulative";
}

TemporalMode parse_temporal_mode(const std::string& name) {
  if (name == "incremental") return TemporalMode::kIncremental;
  if (name == "cumulative") return TemporalMode::kCumulative;
  throw std::invalid_argument("unknown temporal mode '" + name +
                              "' (expected incremental or cumulative)");
}

std::size_t temporal_train_count(std::size_t snapshots) {
  if (snapshots < 2) throw std::invalid_argument("need at least 2 snapshots");
  auto n = static_cast<std::size_t>(std::floor(0.9 * static_cast<double>(snapshots)));
  return std::clamp<std::size_t>(n, 1, snapshots - 1);
}

TrainResult train_spatiotemporal(const TemporalDataset& ds, ModelConfig cfg,
                                 const TrainConfig& train, TemporalMode mode) {
  ds.validate();
  const auto& snaps = ds.snapshots;
  const std::size_t n_train = temporal_train_count(snaps.size());
  cfg.in_features = static_cast<int>(snaps.front().features.cols());
  cfg.out_features = static_cast<int>(snaps.front().target.cols());
  cfg.validate();

  const NormalizedLaplacian lap = normalized_laplacian(ds.graph);
  const GroupSettings groups = effective_groups(cfg, train);
  ModelParams params = init_params(cfg, cfg.seed);
  AdamState state = adam_init(params);
  std::mt19937_64 rng(train.seed);
  ForwardOptions fo;
  fo.training = true;
  fo.rng = &rng;

  TrainResult result;
  Metrics& metrics = result.metrics;
  metrics.task = "regression";
  int epoch = 0;
  try {
    for (; epoch < train.epochs; ++epoch) {
      const auto start = Clock::now();
      double epoch_loss = 0.0;
      if (mode == TemporalMode::kIncremental) {
        for (std::size_t s = 0; s < n_train; ++s) {
          Tape tape;
          BoundParams bound(tape, params, true);
          fo.t_offset = snaps[s].time;
          Var loss = mse_loss(forward(bound, snaps[s].features, lap, cfg, fo).output,
                              snaps[s].target);
          epoch_loss += loss.value()(0, 0);
          tape.backward(loss);
          adam_step(params, collect_grads(bound), groups, state);
        }
        epoch_loss /= static_cast<double>(n_train);
      } else {
        Tape tape;
        BoundParams bound(tape, params, true);
        Var total;
        for (std::size_t s = 0; s < n_train; ++s) {
          fo.t_offset = snaps[s].time;
          Var loss = mse_loss(forward(bound, snaps[s].features, lap, cfg, fo).output,
                              snaps[s].target);
          total = total.valid() ? add(total, loss) : loss;
        }
        Var mean = scale(total, 1.0 / static_cast<double>(n_train));
        epoch_loss = mean.value()(0, 0);
        tape.backward(mean);
        adam_step(params, collect_grads(bound), groups, state);
      }
      if (!std::isfinite(epoch_loss)) {
        throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch));
      }
      metrics.loss_curve.push_back(epoch_loss);
      metrics.epochs_run = epoch + 1;
      metrics.epoch_seconds.push_back(
          std::chrono::duration<double>(Clock::now() - start).count());
    }
  } catch (const NumericError& e) {
    numeric_failure(epoch, e);
  }

  auto mean_mse = [&](std::size_t begin, std::size_t end) {
    double total = 0.0;
    for (std::size_t s = begin; s < end; ++s) {
      const Matrix pred = predict(params, snaps[s].features, lap, cfg, snaps[s].time);
      total += (pred - snaps[s].target).squaredNorm() / static_cast<double>(pred.size());
    }
    return total / static_cast<double>(end - begin);
  };
  metrics.train = mean_mse(0, n_train);
  metrics.val = metrics.train;
  metrics.test = mean_mse(n_train, snaps.size());
  metrics.best_epoch = metrics.epochs_run - 1;
  result.config = cfg;
  result.params = std::move(params);
  return result;
}

// ---------------------------------------------------------------------------

void SearchSpace::validate() const {
  std::vector<std::string> errors;
  auto check = [&](const char* name, double lo, double hi, double min, double max) {
    if (!(lo <= hi)) errors.push_back(std::string(name) + ": lower bound exceeds upper bound");
    if (lo < min || hi > max) {
      std::ostringstream os;
      os << name << ": range must lie within [" << min << ", " << max << "]";
      errors.push_back(os.str());
    }
  };
  check("lr", lr_min, lr_max, 1e-4, 1e-1);
  check("weight_decay", wd_min, wd_max, 0.0, 1e-2);
  check("dropout", dropout_min, dropout_max, 0.0, 0.9);
  check("h", h_min, h_max, 1e-3, 1.0);
  if (layers.empty()) errors.push_back("layers: empty choice set");
  if (channels.empty()) errors.push_back("channels: empty choice set");
  auto subset = [&](const char* name, const std::vector<int>& picks,
                    const std::vector<int>& allowed) {
    for (int v : picks) {
      if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
        errors.push_back(std::string(name) + ": " + std::to_string(v) +
                         " not in the permitted set");
      }
    }
  };
  subset("layers", layers, kLayerChoices);
  subset("channels", channels, kChannelChoices);
  if (!errors.empty()) throw ConfigError(std::move(errors));
}

SampledConfig sample_config(const SearchSpace& s, const ModelConfig& base_model,
                            const TrainConfig& base_train, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto log_uniform = [&](double lo, double hi) {
    return std::exp(std::log(lo) + unit(rng) * (std::log(hi) - std::log(lo)));
  };
  auto uniform = [&](double lo, double hi) { return lo + unit(rng) * (hi - lo); };
  auto pick = [&](const std::vector<int>& v) {
    std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
    return v[d(rng)];
  };
  SampledConfig out{base_model, base_train};
  out.train.groups.embedding.lr = log_uniform(s.lr_min, s.lr_max);
  out.train.groups.diffusion.lr = log_uniform(s.lr_min, s.lr_max);
  out.train.groups.reaction.lr = log_uniform(s.lr_min, s.lr_max);
  out.train.groups.embedding.weight_decay = uniform(s.wd_min, s.wd_max);
  out.train.groups.diffusion.weight_decay = uniform(s.wd_min, s.wd_max);
  out.train.groups.reaction.weight_decay = uniform(s.wd_min, s.wd_max);
  const double io_dropout = uniform(s.dropout_min, s.dropout_max);
  out.model.input_dropout = io_dropout;
  out.model.output_dropout = io_dropout;
  out.model.hidden_dropout = uniform(s.dropout_min, s.dropout_max);
  out.model.h = uniform(s.h_min, s.h_max);
  out.model.layers = pick(s.layers);
  out.model.channels = pick(s.channels);
  return out;
}

std::vector<GridRun> grid_search(const SearchSpace& space, const Dataset& ds,
                                 const ModelConfig& base_model, const TrainConfig& base_train,
                                 const GridSearchOptions& options) {
  space.validate();
  if (options.budget < 1) throw std::invalid_argument("grid_search: budget must be >= 1");
  std::vector<GridRun> runs(static_cast<std::size_t>(options.budget));
  for (int k = 0; k < options.budget; ++k) {
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed),
                      static_cast<std::uint32_t>(options.seed >> 32),
                      static_cast<std::uint32_t>(k)};
    std::mt19937_64 rng(seq);
    SampledConfig sc = sample_config(space, base_model, base_train, rng);
    sc.model.seed = rng();
    sc.train.seed = rng();
    runs[k].index = k;
    runs[k].model = sc.model;
    runs[k].train = sc.train;
  }

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int k = next++; k < options.budget; k = next++) {
      try {
        TrainResult r = train_node_classification(ds, runs[k].model, runs[k].train);
        runs[k].model = r.config;
        runs[k].metrics = std::move(r.metrics);
      } catch (const TrainingError& e) {
        // A diverging sample is a result of the search, not a failure of it.
        runs[k].error = e.what();
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int jobs = std::clamp(options.jobs, 1, options.budget);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int j = 0; j < jobs; ++j) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::stable_sort(runs.begin(), runs.end(), [](const GridRun& a, const GridRun& b) {
    if (a.error.empty() != b.error.empty()) return a.error.empty();
    if (a.metrics.val != b.metrics.val) return a.metrics.val > b.metrics.val;
    return a.index < b.index;
  });
  return runs;
}

std::string grid_results_csv(const std::vector<GridRun>& runs) {
  std::ostringstream os;
  os.precision(10);
  os << "rank,index,layers,channels,h,input_output_dropout,hidden_dropout,"
        "lr_embedding,lr_diffusion,lr_reaction,wd_embedding,wd_diffusion,wd_reaction,"
        "val,test,best_epoch,status\n";
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const GridRun& g = runs[r];
    const auto& gr = g.train.groups;
    os << r << ',' << g.index << ',' << g.model.layers << ',' << g.model.channels << ','
       << g.model.h << ',' << g.model.input_dropout << ',' << g.model.hidden_dropout << ','
       << gr.embedding.lr << ',' << gr.diffusion.lr << ',' << gr.reaction.lr << ','
       << gr.embedding.weight_decay << ',' << gr.diffusion.weight_decay << ','
       << gr.reaction.weight_decay << ',' << g.metrics.val << ',' << g.metrics.test << ','
       << g.metrics.best_epoch << ',' << (g.error.empty() ? "ok" : "diverged") << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------

DepthStudy depth_study(const Dataset& ds, const std::vector<DepthSeries>& series,
                       const TrainConfig& train, const std::vector<int>& depths,
                       const std::vector<std::string>& splits) {
  if (depths.empty() || series.empty() || splits.empty()) {
    throw std::invalid_argument("depth_study: depths, series and splits must be non-empty");
  }
  DepthStudy out;
  out.depths = depths;
  const auto d = static_cast<Index>(depths.size());
  const auto s = static_cast<Index>(series.size());
  out.test_accuracy = Matrix::Zero(d, s);
  out.val_accuracy = Matrix::Zero(d, s);
  for (Index j = 0; j < s; ++j) out.series.push_back(series[j].label);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < s; ++j) {
      for (std::size_t k = 0; k < splits.size(); ++k) {
        ModelConfig cfg = series[j].model;
        cfg.layers = depths[i];
        cfg.seed = series[j].model.seed + k;
        TrainConfig tc = train;
        tc.split = splits[k];
        tc.seed = train.seed + k;
        if (series[j].adjust) series[j].adjust(tc);
        const Metrics m = train_node_classification(ds, cfg, tc).metrics;
        out.test_accuracy(i, j) += m.test / static_cast<double>(splits.size());
        out.val_accuracy(i, j) += m.val / static_cast<double>(splits.size());
      }
    }
  }
  return out;
}

std::string depth_study_csv(const DepthStudy& study) {
  std::ostringstream os;
  os.precision(6);
  os << "nlayer";
  for (const auto& label : study.series) os << ',' << label;
  os << '\n';
  for (std::size_t i = 0; i < study.depths.size(); ++i) {
    os << study.depths[i];
    for (Index j = 0; j < study.test_accuracy.cols(); ++j) {
      os << ',' << std::fixed << 100.0 * study.test_accuracy(static_cast<Index>(i), j);
    }
    os << '\n';
    os.unsetf(std::ios::floatfield);
  }
  return os.str();
}

}  // namespace rdgnn
