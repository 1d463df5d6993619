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

#include "rdgnn/analysis.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace rdgnn {

Matrix reaction_jacobian(const ReactionMap& f, const Matrix& point, double eps) {
  const Index k = point.size();
  if (k > kDenseBudget) {
    throw std::invalid_argument("reaction_jacobian: n*c = " + std::to_string(k) +
                                " exceeds the dense budget of " + std::to_string(kDenseBudget));
  }
  Matrix jac(k, k);
  Matrix probe = point;
  for (Index col = 0; col < k; ++col) {
    // Column-major storage matches the channel-stacked vec() ordering.
    double& entry = probe.data()[col];
    const double base = entry;
    entry = base + eps;
    Matrix up = f(probe);
    entry = base - eps;
    Matrix down = f(probe);
    entry = base;
    if (up.size() != k || down.size() != k) {
      throw ShapeError("reaction_jacobian: reaction output shape differs from input");
    }
    if (!up.allFinite() || !down.allFinite()) {
      throw NumericError("reaction_jacobian: non-finite reaction output");
    }
    jac.col(col) = (Eigen::Map<const Vector>(up.data(), k) -
                    Eigen::Map<const Vector>(down.data(), k)) /
                   (2.0 * eps);
  }
  return jac;
}

Matrix stability_matrix(const NormalizedLaplacian& lap, const RowVector& sigma,
                        const Matrix& jacobian) {
  const Index n = lap.size();
  const Index c = sigma.size();
  if (jacobian.rows() != n * c || jacobian.cols() != n * c) {
    throw ShapeError("stability_matrix: Jacobian is " + std::to_string(jacobian.rows()) + "x" +
                     std::to_string(jacobian.cols()) + ", expected " +
                     std::to_string(n * c) + " square");
  }
  Matrix g = jacobian;
  const Matrix dense = lap.dense();
  for (Index j = 0; j < c; ++j) g.block(j * n, j * n, n, n) -= sigma[j] * dense;
  return g;
}

namespace {

void sort_spectrum(ComplexVector& values, std::vector<Index>* order) {
  std::vector<Index> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) {
    if (values[a].real() != values[b].real()) return values[a].real() > values[b].real();
    return values[a].imag() > values[b].imag();
  });
  ComplexVector sorted;
  sorted.reserve(values.size());
  for (Index i : idx) sorted.push_back(values[i]);
  values = std::move(sorted);
  if (order) *order = std::move(idx);
}

}  // namespace

EigenPairs eigen_pairs(const Matrix& m) {
  if (m.rows() != m.cols()) throw ShapeError("eigenvalues: matrix must be square");
  if (m.rows() > kDenseBudget) throw std::invalid_argument("eigenvalues: dense budget exceeded");
  EigenPairs out;
  if (m.rows() == 0) return out;
  Eigen::EigenSolver<Matrix> solver(m, true);
  if (solver.info() != Eigen::Success) {
    throw NumericError("eigenvalues: QR iteration did not converge");
  }
  const Eigen::VectorXcd values = solver.eigenvalues();
  out.values.assign(values.data(), values.data() + values.size());
  std::vector<Index> order;
  sort_spectrum(out.values, &order);
  const Eigen::MatrixXcd vectors = solver.eigenvectors();
  out.vectors.resize(m.rows(), m.cols());
  for (std::size_t k = 0; k < order.size(); ++k) out.vectors.col(k) = vectors.col(order[k]);
  return out;
}

ComplexVector eigenvalues(const Matrix& m) {
  if (m.rows() != m.cols()) throw ShapeError("eigenvalues: matrix must be square");
  if (m.rows() > kDenseBudget) throw std::invalid_argument("eigenvalues: dense budget exceeded");
  if (m.rows() == 0) return {};
  Eigen::EigenSolver<Matrix> solver(m, false);
  if (solver.info() != Eigen::Success) {
    throw NumericError("eigenvalues: QR iteration did not converge");
  }
  const Eigen::VectorXcd values = solver.eigenvalues();
  ComplexVector out(values.data(), values.data() + values.size());
  sort_spectrum(out, nullptr);
  return out;
}

double max_real_part(const ComplexVector& values) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& v : values) best = std::max(best, v.real());
  return best;
}

StabilityReport turing_check(const NormalizedLaplacian& lap, const RowVector& sigma,
                             const ReactionMap& f, const Matrix& point, double eps) {
  if (point.rows() != lap.size() || point.cols() != sigma.size()) {
    throw ShapeError("turing_check: linearization point must be n x c");
  }
  const Matrix jac = reaction_jacobian(f, point, eps);
  const Matrix zero = Matrix::Zero(jac.rows(), jac.cols());
  StabilityReport r;
  r.eigenvalues = eigenvalues(stability_matrix(lap, sigma, jac));
  r.max_real = max_real_part(r.eigenvalues);
  r.positive_count = static_cast<int>(std::count_if(
      r.eigenvalues.begin(), r.eigenvalues.end(),
      [](const std::complex<double>& v) { return v.real() > kStabilityTolerance; }));
  // -Sigma (x) L^ is symmetric; its spectrum is -sigma_j * spec(L^).
  Eigen::SelfAdjointEigenSolver<Matrix> lap_eig(lap.dense(), Eigen::EigenvaluesOnly);
  r.diffusion_max_real = -std::numeric_limits<double>::infinity();
  for (Index j = 0; j < sigma.size(); ++j) {
    for (Index i = 0; i < lap_eig.eigenvalues().size(); ++i) {
      r.diffusion_max_real = std::max(r.diffusion_max_real, -sigma[j] * lap_eig.eigenvalues()[i]);
    }
  }
  r.jacobian_max_real = max_real_part(eigenvalues(jac));
  r.diffusion_stable = r.diffusion_max_real <= kStabilityTolerance;
  r.jacobian_stable = r.jacobian_max_real <= kStabilityTolerance;
  r.combined_unstable = r.max_real > kStabilityTolerance;
  r.turing = r.combined_unstable && r.diffusion_stable && r.jacobian_max_real < 0.0;
  return r;
}

nlohmann::json to_json(const StabilityReport& r) {
  nlohmann::json values = nlohmann::json::array();
  for (const auto& v : r.eigenvalues) values.push_back({{"re", v.real()}, {"im", v.imag()}});
  return {
      {"eigenvalues", std::move(values)},
      {"max_real", r.max_real},
      {"positive_count", r.positive_count},
      {"diffusion_max_real", r.diffusion_max_real},
      {"jacobian_max_real", r.jacobian_max_real},
      {"verdicts",
       {{"diffusion_stable", r.diffusion_stable},
        {"jacobian_stable", r.jacobian_stable},
        {"combined_unstable", r.combined_unstable},
        {"turing", r.turing}}},
  };
}

ReactionMap model_reaction_map(const ModelParams& params, const ModelConfig& cfg,
                               const Matrix& u0, int layer, double t) {
  if (layer < 0 || layer >= cfg.layers) throw std::out_of_range("model_reaction_map: bad layer");
  return [params, cfg, u0, layer, t](const Matrix& u) {
    Tape tape;
    BoundParams bound(tape, params, false);
    Var uv = tape.constant(u);
    Var u0v = tape.constant(u0);
    return reaction_total(uv, u0v, t, reaction_weights(bound, cfg, layer), cfg.reaction).value();
  };
}

std::vector<LayerRecord> dynamics_trace(const Graph& g, const std::vector<Matrix>& states) {
  std::vector<LayerRecord> out;
  out.reserve(states.size());
  for (std::size_t l = 0; l < states.size(); ++l) {
    out.push_back({static_cast<int>(l), dirichlet_energy(g, states[l]), states[l].norm()});
  }
  return out;
}

std::string trace_to_csv(const std::vector<LayerRecord>& records) {
  std::ostringstream os;
  os.precision(17);
  os << "layer,dirichlet_energy,feature_norm\n";
  for (const auto& r : records) {
    os << r.layer << ',' << r.dirichlet_energy << ',' << r.feature_norm << '\n';
  }
  return os.str();
}

}  // namespace rdgnn
