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

#ifndef RDGNN_TRAINING_HPP_
#define RDGNN_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdgnn/autodiff.hpp"
#include "rdgnn/datasets.hpp"
#include "rdgnn/model.hpp"

namespace rdgnn {

// ---------------------------------------------------------------------------
// Losses (tape ops).

// Mean over `mask` of -log softmax(logits)[label], with row-max shift.
Var cross_entropy_loss(const Var& logits, std::span<const int> labels,
                       std::span<const Index> mask);

// Mean of squared deviations over the rows in `mask` (all columns).
Var mse_loss(const Var& pred, const Matrix& target, std::span<const Index> mask);
// Same, over every row.
Var mse_loss(const Var& pred, const Matrix& target);

double accuracy(const Matrix& logits, std::span<const int> labels, std::span<const Index> mask);

// ---------------------------------------------------------------------------
// Adam with per-group learning rate and decoupled weight decay.

struct GroupHyper {
  double lr = 1e-2;
  double weight_decay = 0.0;
};

struct GroupSettings {
  GroupHyper embedding;
  GroupHyper diffusion;
  GroupHyper reaction;

  const GroupHyper& operator[](ParamGroup g) const {
    switch (g) {
      case ParamGroup::kEmbedding: return embedding;
      case ParamGroup::kDiffusion: return diffusion;
      case ParamGroup::kReaction: return reaction;
    }
    return embedding;
  }
};

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  int step = 0;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

AdamState adam_init(const ModelParams& params);

// p <- p - lr * wd * p, then the bias-corrected Adam update with the group lr.
void adam_step(ModelParams& params, const std::vector<Matrix>& grads,
               const GroupSettings& groups, AdamState& state);

// ---------------------------------------------------------------------------

struct TrainConfig {
  GroupSettings groups;
  int epochs = 1500;
  int patience = 100;       // epochs without val improvement; <= 0 disables
  std::uint64_t seed = 0;   // dropout stream
  std::string split = "split0";
};

struct Metrics {
  std::string task;  // "classification" | "regression"
  double train = 0.0;
  double val = 0.0;
  double test = 0.0;
  int best_epoch = -1;  // -1 means the initial parameters were kept
  int epochs_run = 0;
  std::vector<double> loss_curve;
  std::vector<double> val_curve;
  std::vector<double> epoch_seconds;
};

nlohmann::json to_json(const Metrics& m);

struct TrainResult {
  ModelConfig config;  // with in/out features filled in
  ModelParams params;
  Metrics metrics;
};

// Full-batch training; keeps the parameters of the best validation epoch.
// in_features/out_features of `cfg` are taken from the dataset.
TrainResult train_node_classification(const Dataset& ds, ModelConfig cfg,
                                      const TrainConfig& train);

// Same, starting from given parameters.
TrainResult train_node_classification(const Dataset& ds, const ModelConfig& cfg,
                                      ModelParams init, const TrainConfig& train);

enum class TemporalMode { kIncremental, kCumulative };
std::string to_string(TemporalMode mode);
TemporalMode parse_temporal_mode(const std::string& name);

// Chronological 90/10 split of snapshots (at least one on each side).
// incremental: one optimizer step per training snapshot.
// cumulative: one step per epoch on the mean snapshot loss.
// Snapshot time is passed as the forward time offset. val = train MSE.
TrainResult train_spatiotemporal(const TemporalDataset& ds, ModelConfig cfg,
                                 const TrainConfig& train, TemporalMode mode);

std::size_t temporal_train_count(std::size_t snapshots);

// ---------------------------------------------------------------------------
// Hyperparameter search.

inline const std::vector<int> kLayerChoices{2, 4, 8, 16, 32, 64};
inline const std::vector<int> kChannelChoices{8, 16, 32, 64, 128, 256};

struct SearchSpace {
  double lr_min = 1e-4, lr_max = 1e-1;  // log-uniform, per group
  double wd_min = 0.0, wd_max = 1e-2;   // uniform, per group
  double dropout_min = 0.0, dropout_max = 0.9;  // uniform
  double h_min = 1e-3, h_max = 1.0;     // uniform
  std::vector<int> layers = kLayerChoices;
  std::vector<int> channels = kChannelChoices;

  // Throws ConfigError when bounds are inverted or outside the admissible ranges.
  void validate() const;
};

struct SampledConfig {
  ModelConfig model;
  TrainConfig train;
};

SampledConfig sample_config(const SearchSpace& space, const ModelConfig& base_model,
                            const TrainConfig& base_train, std::mt19937_64& rng);

struct GridSearchOptions {
  int budget = 8;
  int jobs = 1;
  std::uint64_t seed = 0;
};

struct GridRun {
  int index = 0;
  ModelConfig model;
  TrainConfig train;
  Metrics metrics;
  std::string error;  // non-empty when training diverged; such runs rank last
};

// Samples `budget` configurations, trains each, returns them ranked by
// validation metric (descending; ties by sample index). Run k draws from a
// stream seeded by (seed, k), so results do not depend on `jobs`.
std::vector<GridRun> grid_search(const SearchSpace& space, const Dataset& ds,
                                 const ModelConfig& base_model, const TrainConfig& base_train,
                                 const GridSearchOptions& options);

std::string grid_results_csv(const std::vector<GridRun>& runs);

// ---------------------------------------------------------------------------
// Accuracy versus depth.

struct DepthSeries {
  std::string label;
  ModelConfig model;
  // Optional per-series training override (e.g. frozen diffusion).
  std::function<void(TrainConfig&)> adjust;
};

struct DepthStudy {
  std::vector<int> depths;
  std::vector<std::string> series;
  Matrix test_accuracy;  // depths x series, averaged over repeats
  Matrix val_accuracy;
};

inline const std::vector<int> kDefaultDepths{1, 2, 4, 8, 12, 16, 32, 64};

// Trains one model per (depth, series, split); split k uses seed + k.
DepthStudy depth_study(const Dataset& ds, const std::vector<DepthSeries>& series,
                       const TrainConfig& train, const std::vector<int>& depths,
                       const std::vector<std::string>& splits);

// Header "nlayer,<series...>", one row per depth, test accuracy in percent.
std::string depth_study_csv(const DepthStudy& study);

}  // namespace rdgnn

#endif  // RDGNN_TRAINING_HPP_
