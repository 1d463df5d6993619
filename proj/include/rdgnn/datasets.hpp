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

#ifndef RDGNN_DATASETS_HPP_
#define RDGNN_DATASETS_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdgnn/autodiff.hpp"
#include "rdgnn/graph.hpp"

namespace rdgnn {

inline constexpr int kDatasetFormatVersion = 1;

struct Split {
  std::vector<Index> train;
  std::vector<Index> val;
  std::vector<Index> test;

  friend bool operator==(const Split&, const Split&) = default;
};

// Node-level dataset. Classification datasets carry `labels`; regression
// datasets carry `targets` (n x c_out). `features` may have zero columns for
// graph-only files.
struct Dataset {
  std::string name;
  Graph graph;
  Matrix features;
  std::vector<int> labels;
  Matrix targets;
  std::map<std::string, Split> splits;

  Index num_nodes() const { return graph.num_nodes(); }
  bool is_classification() const { return !labels.empty(); }
  int num_classes() const;
  // Edge homophily of `labels`; throws when the dataset has none.
  double homophily() const;

  // Throws ParseError naming the first violated invariant.
  void validate() const;
};

struct Snapshot {
  Matrix features;  // n x lags
  Matrix target;    // n x 1
  double time = 0.0;
};

struct TemporalDataset {
  std::string name;
  Graph graph;
  std::vector<Snapshot> snapshots;

  void validate() const;
};

// Fraction of undirected edges whose endpoints share a label (NaN without edges).
double edge_homophily(const Graph& g, std::span<const int> labels);

// ---------------------------------------------------------------------------
// JSON dataset schema (version 1):
//   {"format_version": 1, "name": str, "n": int,
//    "edges": [[i, j], ...]            each undirected edge once,
//    "features": [[x00, x01, ...], ...] n rows (optional),
//    "labels": [int, ...]  or  "targets": [[...], ...],
//    "splits": {"name": {"train": [...], "val": [...], "test": [...]}, ...}}

Dataset dataset_from_json(const nlohmann::json& j);
nlohmann::json dataset_to_json(const Dataset& ds);
Dataset load_json_dataset(const std::filesystem::path& path);
void save_json_dataset(const std::filesystem::path& path, const Dataset& ds);

// CSV signal: one row per timestamp, one column per node. A leading
// non-numeric header row is skipped.
Matrix load_signal_csv(const std::filesystem::path& path);

// Snapshot t holds signal rows t-lags+1..t (oldest first) as features and row
// t+1 as target, timestamped t.
TemporalDataset temporal_from_signal(const Graph& g, const Matrix& signal, int lags,
                                     std::string name = "signal");

// ---------------------------------------------------------------------------
// Synthetic generators.

struct SbmOptions {
  Index n = 400;
  int classes = 2;
  double p_in = 0.1;
  double p_out = 0.01;
  int feature_dim = 8;
  double noise = 1.0;  // std-dev of additive Gaussian feature noise
  int split_count = 1;
  std::uint64_t seed = 0;
};

// Block-assigned classes (node i in class i / (n / classes)), independent
// edges with p_in inside and p_out across blocks, features = one-hot class
// indicator + noise, stratified 48/32/20 splits.
Dataset synth_sbm(const SbmOptions& options);

// Expected edge homophily of an SBM with equal blocks.
double sbm_expected_homophily(Index n, int classes, double p_in, double p_out);

struct TemporalOptions {
  int periods = 12;
  int period_length = 8;
  double diffusion = 0.5;  // explicit diffusion strength per step, in [0, 1]
  int sources = 2;
  int lags = 4;
  double noise = 0.0;      // observation noise std-dev
  int burn_in_periods = 4;
  std::uint64_t seed = 0;
};

// Raw simulated signal (steps x n) before windowing.
Matrix simulate_periodic_signal(const Graph& g, const TemporalOptions& options);

// Graph diffusion driven by sinusoidal sources at seeded nodes; windowed
// with temporal_from_signal.
TemporalDataset synth_temporal(const Graph& g, const TemporalOptions& options);

// ---------------------------------------------------------------------------

// `count` independent per-class stratified draws named split0, split1, ...
// Per class of size m: val = floor(r_val m), test = floor(r_test m) and
// train takes the rest of floor((r_train + r_val + r_test) m).
std::map<std::string, Split> make_splits(std::span<const int> labels,
                                         std::array<double, 3> ratios, int count,
                                         std::uint64_t seed);

inline Dataset make_splits(Dataset ds, std::array<double, 3> ratios, int count,
                           std::uint64_t seed) {
  ds.splits = make_splits(ds.labels, ratios, count, seed);
  return ds;
}

inline constexpr std::array<double, 3> kDefaultSplitRatios{0.48, 0.32, 0.20};

}  // namespace rdgnn

#endif  // RDGNN_DATASETS_HPP_
