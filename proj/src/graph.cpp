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

#include "rdgnn/graph.hpp"

#include <algorithm>
#include <string>

namespace rdgnn {

Graph build_graph(Index n, std::span<const Edge> undirected_edges) {
  if (n <= 0) throw GraphError("build_graph: node count must be positive");
  std::vector<Edge> pairs;
  pairs.reserve(2 * undirected_edges.size());
  for (std::size_t k = 0; k < undirected_edges.size(); ++k) {
    const auto [i, j] = undirected_edges[k];
    if (i < 0 || i >= n || j < 0 || j >= n) {
      throw GraphError("build_graph: edge " + std::to_string(k) + " (" +
                       std::to_string(i) + ", " + std::to_string(j) +
                       ") has an endpoint outside [0, " + std::to_string(n) + ")");
    }
    if (i == j) {
      throw GraphError("build_graph: edge " + std::to_string(k) +
                       " is a self-loop on node " + std::to_string(i));
    }
    pairs.emplace_back(i, j);
    pairs.emplace_back(j, i);
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());

  Graph g;
  g.n_ = n;
  g.offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  g.targets_.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    ++g.offsets_[static_cast<std::size_t>(i) + 1];
    g.targets_.push_back(j);
  }
  for (Index i = 0; i < n; ++i) g.offsets_[i + 1] += g.offsets_[i];
  g.degrees_.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) g.degrees_[i] = g.offsets_[i + 1] - g.offsets_[i];
  return g;
}

std::vector<Edge> Graph::directed_edges() const {
  std::vector<Edge> out;
  out.reserve(targets_.size());
  for (Index i = 0; i < n_; ++i) {
    for (Index j : neighbors(i)) out.emplace_back(i, j);
  }
  return out;
}

std::vector<Edge> Graph::undirected_edges() const {
  std::vector<Edge> out;
  out.reserve(targets_.size() / 2);
  for (Index i = 0; i < n_; ++i) {
    for (Index j : neighbors(i)) {
      if (i < j) out.emplace_back(i, j);
    }
  }
  return out;
}

}  // namespace rdgnn
