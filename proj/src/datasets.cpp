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

#include "rdgnn/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "rdgnn/io_util.hpp"

namespace rdgnn {

using nlohmann::json;

int Dataset::num_classes() const {
  if (labels.empty()) return 0;
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

double Dataset::homophily() const {
  if (labels.empty()) throw std::logic_error("homophily: dataset has no labels");
  return edge_homophily(graph, labels);
}

double edge_homophily(const Graph& g, std::span<const int> labels) {
  if (static_cast<Index>(labels.size()) != g.num_nodes()) {
    throw ShapeError("edge_homophily: label count does not match node count");
  }
  Index same = 0, total = 0;
  for (const auto& [i, j] : g.undirected_edges()) {
    ++total;
    if (labels[i] == labels[j]) ++same;
  }
  if (total == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(same) / static_cast<double>(total);
}

namespace {

void check_indices(const std::vector<Index>& idx, Index n, const std::string& record) {
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= n) {
      throw ParseError(record + "[" + std::to_string(k) + "]",
                       "node index " + std::to_string(idx[k]) + " out of range");
    }
  }
}

}  // namespace

void Dataset::validate() const {
  const Index n = graph.num_nodes();
  if (n <= 0) throw ParseError("n", "node count must be positive");
  if (features.cols() > 0 && features.rows() != n) {
    throw ParseError("features", "expected " + std::to_string(n) + " rows");
  }
  if (!labels.empty()) {
    if (static_cast<Index>(labels.size()) != n) {
      throw ParseError("labels", "expected " + std::to_string(n) + " entries");
    }
    std::set<int> seen(labels.begin(), labels.end());
    if (*seen.begin() != 0 || *seen.rbegin() != static_cast<int>(seen.size()) - 1) {
      throw ParseError("labels", "class ids must be contiguous from 0");
    }
  }
  if (targets.size() > 0 && targets.rows() != n) {
    throw ParseError("targets", "expected " + std::to_string(n) + " rows");
  }
  for (const auto& [name, s] : splits) {
    const std::string rec = "splits." + name;
    check_indices(s.train, n, rec + ".train");
    check_indices(s.val, n, rec + ".val");
    check_indices(s.test, n, rec + ".test");
    std::vector<Index> all;
    all.insert(all.end(), s.train.begin(), s.train.end());
    all.insert(all.end(), s.val.begin(), s.val.end());
    all.insert(all.end(), s.test.begin(), s.test.end());
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end()) {
      throw ParseError(rec, "train/val/test index sets overlap");
    }
  }
}

void TemporalDataset::validate() const {
  if (snapshots.size() < 2) throw ParseError("snapshots", "need at least 2 snapshots");
  const Index n = graph.num_nodes();
  const Index width = snapshots.front().features.cols();
  for (std::size_t k = 0; k < snapshots.size(); ++k) {
    const auto& s = snapshots[k];
    if (s.features.rows() != n || s.features.cols() != width || s.target.rows() != n) {
      throw ParseError("snapshots[" + std::to_string(k) + "]", "inconsistent shape");
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

Matrix rows_from_json(const json& j, const std::string& record) {
  if (!j.is_array()) throw ParseError(record, "expected an array of rows");
  const Index rows = static_cast<Index>(j.size());
  Index cols = -1;
  Matrix m;
  for (Index i = 0; i < rows; ++i) {
    const json& row = j[i];
    const std::string rec = record + "[" + std::to_string(i) + "]";
    if (!row.is_array()) throw ParseError(rec, "expected an array");
    if (cols < 0) {
      cols = static_cast<Index>(row.size());
      m.resize(rows, cols);
    } else if (static_cast<Index>(row.size()) != cols) {
      throw ParseError(rec, "row has " + std::to_string(row.size()) + " entries, expected " +
                                std::to_string(cols));
    }
    for (Index c = 0; c < cols; ++c) {
      if (!row[c].is_number()) throw ParseError(rec, "non-numeric entry");
      m(i, c) = row[c].get<double>();
    }
  }
  if (cols < 0) m.resize(0, 0);
  return m;
}

json rows_to_json(const Matrix& m) {
  json out = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<Index> index_list(const json& j, const std::string& record) {
  if (!j.is_array()) throw ParseError(record, "expected an array of node indices");
  std::vector<Index> out;
  out.reserve(j.size());
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number_integer()) {
      throw ParseError(record + "[" + std::to_string(k) + "]", "expected an integer");
    }
    out.push_back(j[k].get<Index>());
  }
  return out;
}

}  // namespace

Dataset dataset_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("dataset", "expected a JSON object");
  if (j.contains("format_version") && j.at("format_version") != kDatasetFormatVersion) {
    throw ParseError("format_version", "unsupported version");
  }
  if (!j.contains("n")) throw ParseError("n", "missing field");
  if (!j.contains("edges")) throw ParseError("edges", "missing field");
  if (!j.at("n").is_number_integer()) throw ParseError("n", "expected an integer");
  const Index n = j.at("n").get<Index>();
  if (n <= 0) throw ParseError("n", "node count must be positive");

  Dataset ds;
  ds.name = j.value("name", std::string("dataset"));
  const json& edges = j.at("edges");
  if (!edges.is_array()) throw ParseError("edges", "expected an array of pairs");
  std::vector<Edge> pairs;
  pairs.reserve(edges.size());
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const json& e = edges[k];
    const std::string rec = "edges[" + std::to_string(k) + "]";
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
        !e[1].is_number_integer()) {
      throw ParseError(rec, "expected a pair of integers");
    }
    const Index a = e[0].get<Index>(), b = e[1].get<Index>();
    if (a < 0 || a >= n || b < 0 || b >= n) {
      throw ParseError(rec, "endpoint out of range [0, " + std::to_string(n) + ")");
    }
    if (a == b) throw ParseError(rec, "self-loop");
    pairs.emplace_back(a, b);
  }
  ds.graph = build_graph(n, pairs);

  if (j.contains("features")) {
    ds.features = rows_from_json(j.at("features"), "features");
  } else {
    ds.features = Matrix(n, 0);
  }
  if (j.contains("labels")) {
    const json& l = j.at("labels");
    if (!l.is_array()) throw ParseError("labels", "expected an array");
    for (std::size_t k = 0; k < l.size(); ++k) {
      if (!l[k].is_number_integer()) {
        throw ParseError("labels[" + std::to_string(k) + "]", "expected an integer");
      }
      ds.labels.push_back(l[k].get<int>());
    }
  }
  if (j.contains("targets")) ds.targets = rows_from_json(j.at("targets"), "targets");
  if (j.contains("splits")) {
    const json& s = j.at("splits");
    if (!s.is_object()) throw ParseError("splits", "expected an object");
    for (auto it = s.begin(); it != s.end(); ++it) {
      const std::string rec = "splits." + it.key();
      Split split;
      for (const char* part : {"train", "val", "test"}) {
        if (!it.value().contains(part)) throw ParseError(rec + "." + part, "missing field");
      }
      split.train = index_list(it.value().at("train"), rec + ".train");
      split.val = index_list(it.value().at("val"), rec + ".val");
      split.test = index_list(it.value().at("test"), rec + ".test");
      ds.splits.emplace(it.key(), std::move(split));
    }
  }
  ds.validate();
  return ds;
}

json dataset_to_json(const Dataset& ds) {
  json j;
  j["format_version"] = kDatasetFormatVersion;
  j["name"] = ds.name;
  j["n"] = ds.num_nodes();
  json edges = json::array();
  for (const auto& [a, b] : ds.graph.undirected_edges()) edges.push_back({a, b});
  j["edges"] = std::move(edges);
  if (ds.features.cols() > 0) j["features"] = rows_to_json(ds.features);
  if (!ds.labels.empty()) j["labels"] = ds.labels;
  if (ds.targets.size() > 0) j["targets"] = rows_to_json(ds.targets);
  if (!ds.splits.empty()) {
    json splits = json::object();
    for (const auto& [name, s] : ds.splits) {
      splits[name] = {{"train", s.train}, {"val", s.val}, {"test", s.test}};
    }
    j["splits"] = std::move(splits);
  }
  return j;
}

Dataset load_json_dataset(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), e.what());
  }
  return dataset_from_json(j);
}

void save_json_dataset(const std::filesystem::path& path, const Dataset& ds) {
  write_file_atomic(path, dataset_to_json(ds).dump());
}

Matrix load_signal_csv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream cells(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw ParseError(path.string() + ":" + std::to_string(line_no), "non-numeric cell");
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no), "ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path.string(), "no data rows");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index c = 0; c < m.cols(); ++c) m(i, c) = rows[i][c];
  }
  return m;
}

TemporalDataset temporal_from_signal(const Graph& g, const Matrix& signal, int lags,
                                     std::string name) {
  if (lags < 1) throw std::invalid_argument("temporal_from_signal: lags must be >= 1");
  if (signal.cols() != g.num_nodes()) {
    throw ShapeError("temporal_from_signal: signal has " + std::to_string(signal.cols()) +
                     " columns, graph has " + std::to_string(g.num_nodes()) + " nodes");
  }
  TemporalDataset ds;
  ds.name = std::move(name);
  ds.graph = g;
  for (Index t = lags - 1; t + 1 < signal.rows(); ++t) {
    Snapshot s;
    s.features.resize(g.num_nodes(), lags);
    for (int k = 0; k < lags; ++k) s.features.col(k) = signal.row(t - lags + 1 + k).transpose();
    s.target = signal.row(t + 1).transpose();
    s.time = static_cast<double>(t);
    ds.snapshots.push_back(std::move(s));
  }
  ds.validate();
  return ds;
}

// ---------------------------------------------------------------------------

double sbm_expected_homophily(Index n, int classes, double p_in, double p_out) {
  const double m = static_cast<double>(n) / classes;
  const double inside = classes * m * (m - 1.0) / 2.0 * p_in;
  const double across = classes * (classes - 1.0) / 2.0 * m * m * p_out;
  return inside / (inside + across);
}

Dataset synth_sbm(const SbmOptions& o) {
  if (!(o.p_in >= 0 && o.p_in <= 1 && o.p_out >= 0 && o.p_out <= 1)) {
    throw std::invalid_argument("synth_sbm: probabilities must lie in [0, 1]");
  }
  if (o.classes < 1 || o.n < o.classes || o.n % o.classes != 0) {
    throw std::invalid_argument("synth_sbm: n must be a positive multiple of classes");
  }
  if (o.feature_dim < 1) throw std::invalid_argument("synth_sbm: feature_dim must be >= 1");
  std::mt19937_64 rng(o.seed);
  const Index block = o.n / o.classes;
  Dataset ds;
  ds.name = "sbm";
  ds.labels.resize(static_cast<std::size_t>(o.n));
  for (Index i = 0; i < o.n; ++i) ds.labels[i] = static_cast<int>(i / block);

  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Edge> edges;
  for (Index i = 0; i < o.n; ++i) {
    for (Index j = i + 1; j < o.n; ++j) {
      const double p = ds.labels[i] == ds.labels[j] ? o.p_in : o.p_out;
      if (unif(rng) < p) edges.emplace_back(i, j);
    }
  }
  ds.graph = build_graph(o.n, edges);

  std::normal_distribution<double> gauss(0.0, 1.0);
  ds.features = Matrix::Zero(o.n, o.feature_dim);
  for (Index i = 0; i < o.n; ++i) {
    ds.features(i, ds.labels[i] % o.feature_dim) = 1.0;
    if (o.noise > 0.0) {
      for (Index c = 0; c < o.feature_dim; ++c) ds.features(i, c) += o.noise * gauss(rng);
    }
  }
  ds.splits = make_splits(ds.labels, kDefaultSplitRatios, o.split_count, rng());
  ds.validate();
  return ds;
}

Matrix simulate_periodic_signal(const Graph& g, const TemporalOptions& o) {
  if (o.period_length < 2) throw std::invalid_argument("synth_temporal: period_length must be >= 2");
  if (o.periods < 1 || o.lags < 1 || o.sources < 1) {
    throw std::invalid_argument("synth_temporal: periods, lags and sources must be >= 1");
  }
  if (!(o.diffusion >= 0.0 && o.diffusion <= 1.0)) {
    throw std::invalid_argument("synth_temporal: diffusion strength must lie in [0, 1]");
  }
  if (o.sources > g.num_nodes()) {
    throw std::invalid_argument("synth_temporal: more sources than nodes");
  }
  if (g.num_nodes() < 2 || g.num_undirected_edges() == 0) {
    throw GraphError("synth_temporal: degenerate graph (needs at least one edge)");
  }
  std::mt19937_64 rng(o.seed);
  std::vector<Index> nodes(static_cast<std::size_t>(g.num_nodes()));
  for (Index i = 0; i < g.num_nodes(); ++i) nodes[i] = i;
  std::shuffle(nodes.begin(), nodes.end(), rng);
  nodes.resize(static_cast<std::size_t>(o.sources));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<double> phases;
  for (int s = 0; s < o.sources; ++s) phases.push_back(phase(rng));

  const NormalizedLaplacian lap = normalized_laplacian(g);
  const Index burn = static_cast<Index>(o.burn_in_periods) * o.period_length;
  const Index steps = static_cast<Index>(o.periods) * o.period_length + o.lags + 1;
  const double omega = 2.0 * std::numbers::pi / o.period_length;
  Vector x = Vector::Zero(g.num_nodes());
  Matrix signal(steps, g.num_nodes());
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (Index t = 0; t < burn + steps; ++t) {
    if (t > 0 && o.diffusion > 0.0) x -= o.diffusion * (lap.matrix() * x);
    for (int s = 0; s < o.sources; ++s) {
      x[nodes[s]] = std::sin(omega * static_cast<double>(t) + phases[s]);
    }
    if (t >= burn) signal.row(t - burn) = x.transpose();
  }
  if (o.noise > 0.0) {
    for (Index t = 0; t < signal.rows(); ++t) {
      for (Index i = 0; i < signal.cols(); ++i) signal(t, i) += o.noise * gauss(rng);
    }
  }
  return signal;
}

TemporalDataset synth_temporal(const Graph& g, const TemporalOptions& o) {
  return temporal_from_signal(g, simulate_periodic_signal(g, o), o.lags, "periodic");
}

// ---------------------------------------------------------------------------

std::map<std::string, Split> make_splits(std::span<const int> labels,
                                         std::array<double, 3> ratios, int count,
                                         std::uint64_t seed) {
  const double total = ratios[0] + ratios[1] + ratios[2];
  if (ratios[0] < 0 || ratios[1] < 0 || ratios[2] < 0 || total > 1.0 + 1e-12) {
    throw std::invalid_argument("make_splits: ratios must be non-negative and sum to <= 1");
  }
  if (count < 1) throw std::invalid_argument("make_splits: count must be >= 1");
  int classes = 0;
  for (int l : labels) classes = std::max(classes, l + 1);
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    members[labels[i]].push_back(static_cast<Index>(i));
  }
  const int slots = (ratios[0] > 0) + (ratios[1] > 0) + (ratios[2] > 0);
  for (int c = 0; c < classes; ++c) {
    if (static_cast<int>(members[c].size()) < slots) {
      throw std::invalid_argument("make_splits: class " + std::to_string(c) + " has " +
                                  std::to_string(members[c].size()) +
                                  " nodes, fewer than the " + std::to_string(slots) +
                                  " split slots");
    }
  }
  std::map<std::string, Split> out;
  for (int d = 0; d < count; ++d) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(d) * 0x9e3779b97f4a7c15ULL);
    Split split;
    for (int c = 0; c < classes; ++c) {
      std::vector<Index> nodes = members[c];
      std::shuffle(nodes.begin(), nodes.end(), rng);
      const double m = static_cast<double>(nodes.size());
      const auto n_val = static_cast<std::size_t>(std::floor(ratios[1] * m + 1e-9));
      const auto n_test = static_cast<std::size_t>(std::floor(ratios[2] * m + 1e-9));
      const auto n_all = static_cast<std::size_t>(std::floor(total * m + 1e-9));
      const std::size_t n_train = n_all - n_val - n_test;
      auto it = nodes.begin();
      split.train.insert(split.train.end(), it, it + n_train);
      it += n_train;
      split.val.insert(split.val.end(), it, it + n_val);
      it += n_val;
      split.test.insert(split.test.end(), it, it + n_test);
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.val.begin(), split.val.end());
    std::sort(split.test.begin(), split.test.end());
    out.emplace("split" + std::to_string(d), std::move(split));
  }
  return out;
}

}  // namespace rdgnn
