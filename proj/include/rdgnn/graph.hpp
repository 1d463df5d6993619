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

#ifndef RDGNN_GRAPH_HPP_
#define RDGNN_GRAPH_HPP_

#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "rdgnn/errors.hpp"

namespace rdgnn {

using Index = Eigen::Index;
using Edge = std::pair<Index, Index>;

// Immutable undirected graph. Every undirected edge is stored as two directed
// pairs in CSR order; self-loops are never stored.
class Graph {
 public:
  Graph() = default;

  Index num_nodes() const { return n_; }
  Index num_directed_edges() const { return static_cast<Index>(targets_.size()); }
  Index num_undirected_edges() const { return num_directed_edges() / 2; }

  std::span<const Index> neighbors(Index i) const {
    return {targets_.data() + offsets_[i], targets_.data() + offsets_[i + 1]};
  }
  Index degree(Index i) const { return offsets_[i + 1] - offsets_[i]; }
  const std::vector<Index>& degrees() const { return degrees_; }
  const std::vector<Index>& row_offsets() const { return offsets_; }
  const std::vector<Index>& col_indices() const { return targets_; }

  // All directed pairs (i, j) in CSR order.
  std::vector<Edge> directed_edges() const;
  // Each undirected edge once, as (min, max).
  std::vector<Edge> undirected_edges() const;

  friend Graph build_graph(Index n, std::span<const Edge> undirected_edges);

 private:
  Index n_ = 0;
  std::vector<Index> offsets_{0};
  std::vector<Index> targets_;
  std::vector<Index> degrees_;
};

// Symmetrizes and deduplicates the input pairs. Throws GraphError on n <= 0,
// out-of-range endpoints or self-loops.
Graph build_graph(Index n, std::span<const Edge> undirected_edges);

inline Graph build_graph(Index n, const std::vector<Edge>& undirected_edges) {
  return build_graph(n, std::span<const Edge>(undirected_edges));
}

// I - D~^{-1/2} (A + I) D~^{-1/2}, with D~ = D + I.
template <typename Scalar>
class BasicNormalizedLaplacian {
 public:
  using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;
  using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BasicNormalizedLaplacian() = default;
  BasicNormalizedLaplacian(SparseMatrix matrix, DenseVector sqrt_degree)
      : matrix_(std::move(matrix)), sqrt_degree_(std::move(sqrt_degree)) {}

  Index size() const { return matrix_.rows(); }
  Index nonzeros() const { return matrix_.nonZeros(); }
  const SparseMatrix& matrix() const { return matrix_; }
  DenseMatrix dense() const { return DenseMatrix(matrix_); }

  // Diagonal of D~^{1/2}; spans the null space on each connected component.
  const DenseVector& sqrt_degree() const { return sqrt_degree_; }

 private:
  SparseMatrix matrix_;
  DenseVector sqrt_degree_;
};

using NormalizedLaplacian = BasicNormalizedLaplacian<double>;

template <typename Scalar = double>
BasicNormalizedLaplacian<Scalar> normalized_laplacian(const Graph& g) {
  using Lap = BasicNormalizedLaplacian<Scalar>;
  const Index n = g.num_nodes();
  typename Lap::DenseVector inv_sqrt(n), sqrt_deg(n);
  for (Index i = 0; i < n; ++i) {
    const Scalar d = Scalar(1) + Scalar(g.degree(i));
    sqrt_deg[i] = std::sqrt(d);
    inv_sqrt[i] = Scalar(1) / sqrt_deg[i];
  }
  std::vector<Eigen::Triplet<Scalar>> triplets;
  triplets.reserve(static_cast<std::size_t>(n + g.num_directed_edges()));
  for (Index i = 0; i < n; ++i) {
    // Diagonal: 1 - 1/d~_i from the self-loop.
    triplets.emplace_back(i, i, Scalar(1) - inv_sqrt[i] * inv_sqrt[i]);
    for (Index j : g.neighbors(i)) {
      triplets.emplace_back(i, j, -inv_sqrt[i] * inv_sqrt[j]);
    }
  }
  typename Lap::SparseMatrix m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  m.makeCompressed();
  return Lap(std::move(m), std::move(sqrt_deg));
}

// Column-wise L^ U.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
laplacian_apply(const BasicNormalizedLaplacian<typename Derived::Scalar>& lap,
                const Eigen::MatrixBase<Derived>& u) {
  if (u.rows() != lap.size()) {
    throw ShapeError("laplacian_apply: U has " + std::to_string(u.rows()) +
                     " rows, Laplacian is " + std::to_string(lap.size()));
  }
  return lap.matrix() * u;
}

// 1/2 sum over directed pairs of ||U_i / sqrt(1+d_i) - U_j / sqrt(1+d_j)||^2,
// so each undirected edge counts once. Equals trace(U^T L^ U).
template <typename Derived>
typename Derived::Scalar dirichlet_energy(const Graph& g,
                                          const Eigen::MatrixBase<Derived>& u) {
  using Scalar = typename Derived::Scalar;
  if (u.rows() != g.num_nodes()) {
    throw ShapeError("dirichlet_energy: U has " + std::to_string(u.rows()) +
                     " rows, graph has " + std::to_string(g.num_nodes()) +
                     " nodes");
  }
  Scalar energy(0);
  for (Index i = 0; i < g.num_nodes(); ++i) {
    const Scalar si = Scalar(1) / std::sqrt(Scalar(1 + g.degree(i)));
    for (Index j : g.neighbors(i)) {
      const Scalar sj = Scalar(1) / std::sqrt(Scalar(1 + g.degree(j)));
      energy += (u.row(i) * si - u.row(j) * sj).squaredNorm();
    }
  }
  return Scalar(0.5) * energy;
}

}  // namespace rdgnn

#endif  // RDGNN_GRAPH_HPP_
