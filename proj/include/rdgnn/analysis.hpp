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

// Linear stability of the reaction-diffusion dynamics around a state U*.
//
// With vec() stacking channels (channel 0's n entries, then channel 1's, ...),
// the linearized operator is
//
//   G = -diag(sigma) (x) L^ + J,   J = d vec(f) / d vec(U) at U*,
//
// and positive real parts in spec(G) mark locally growing modes. A Turing
// instability is the case where J and the diffusion term are each stable
// but G is not.

#ifndef RDGNN_ANALYSIS_HPP_
#define RDGNN_ANALYSIS_HPP_

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rdgnn/autodiff.hpp"
#include "rdgnn/graph.hpp"
#include "rdgnn/model.hpp"

namespace rdgnn {

inline constexpr Index kDenseBudget = 4096;
inline constexpr double kStabilityTolerance = 1e-10;

using ReactionMap = std::function<Matrix(const Matrix&)>;
using ComplexVector = std::vector<std::complex<double>>;

// Central differences, one column per vec(U) coordinate.
Matrix reaction_jacobian(const ReactionMap& f, const Matrix& point, double eps = 1e-6);

Matrix stability_matrix(const NormalizedLaplacian& lap, const RowVector& sigma,
                        const Matrix& jacobian);

// All eigenvalues, sorted by descending real part (ties: descending imag).
ComplexVector eigenvalues(const Matrix& m);

struct EigenPairs {
  ComplexVector values;
  Eigen::MatrixXcd vectors;  // column k pairs with values[k]
};
EigenPairs eigen_pairs(const Matrix& m);

double max_real_part(const ComplexVector& values);

struct StabilityReport {
  ComplexVector eigenvalues;  // of G
  double max_real = 0.0;
  int positive_count = 0;
  double diffusion_max_real = 0.0;
  double jacobian_max_real = 0.0;
  bool diffusion_stable = true;   // max Re spec(-Sigma (x) L^) <= tol
  bool jacobian_stable = true;    // max Re spec(J) <= tol
  bool combined_unstable = false; // max Re spec(G) > tol
  // combined_unstable, diffusion stable and max Re spec(J) < 0.
  bool turing = false;
};

StabilityReport turing_check(const NormalizedLaplacian& lap, const RowVector& sigma,
                             const ReactionMap& f, const Matrix& point, double eps = 1e-6);

nlohmann::json to_json(const StabilityReport& report);

// Reaction of layer `layer` of a model as a value-level map, with U0 held
// fixed at `u0` and time `t`.
ReactionMap model_reaction_map(const ModelParams& params, const ModelConfig& cfg,
                               const Matrix& u0, int layer, double t);

struct LayerRecord {
  int layer = 0;
  double dirichlet_energy = 0.0;
  double feature_norm = 0.0;  // Frobenius
};

// One record per state, starting at layer 0.
std::vector<LayerRecord> dynamics_trace(const Graph& g, const std::vector<Matrix>& states);
std::string trace_to_csv(const std::vector<LayerRecord>& records);

}  // namespace rdgnn

#endif  // RDGNN_ANALYSIS_HPP_
