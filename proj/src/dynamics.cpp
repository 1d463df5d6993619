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

#include "rdgnn/dynamics.hpp"

#include <stdexcept>

namespace rdgnn {

std::string to_string(ReactionMode mode) {
  switch (mode) {
    case ReactionMode::kAdditive: return "additive";
    case ReactionMode::kAdditiveU0: return "additive_u0";
    case ReactionMode::kMultiplicative: return "multiplicative";
    case ReactionMode::kAll: return "all";
    case ReactionMode::kLinear: return "linear";
    case ReactionMode::kNone: return "off";
  }
  return "?";
}

std::string to_string(Integrator integrator) {
  return integrator == Integrator::kExplicit ? "explicit" : "imex";
}

ReactionMode parse_reaction_mode(const std::string& name) {
  if (name == "additive") return ReactionMode::kAdditive;
  if (name == "additive_u0") return ReactionMode::kAdditiveU0;
  if (name == "multiplicative") return ReactionMode::kMultiplicative;
  if (name == "all") return ReactionMode::kAll;
  if (name == "linear") return ReactionMode::kLinear;
  if (name == "off" || name == "none") return ReactionMode::kNone;
  throw std::invalid_argument("unknown reaction mode '" + name +
                              "' (expected additive, additive_u0, multiplicative, all, "
                              "linear or off)");
}

Integrator parse_integrator(const std::string& name) {
  if (name == "explicit") return Integrator::kExplicit;
  if (name == "imex") return Integrator::kImex;
  throw std::invalid_argument("unknown integrator '" + name + "' (expected explicit or imex)");
}

Matrix implicit_diffusion_solve(const NormalizedLaplacian& lap, const Matrix& v,
                                const RowVector& sigma, double h, const CgOptions& options) {
  if (v.rows() != lap.size() || sigma.size() != v.cols()) {
    throw ShapeError("implicit_diffusion_solve: V is " + std::to_string(v.rows()) + "x" +
                     std::to_string(v.cols()) + ", Laplacian " + std::to_string(lap.size()) +
                     ", sigma length " + std::to_string(sigma.size()));
  }
  Matrix u(v.rows(), v.cols());
  for (Index j = 0; j < v.cols(); ++j) {
    u.col(j) = cg_solve(lap, sigma[j], h, v.col(j), options).x;
  }
  return u;
}

AdjointResult implicit_solve_adjoint(const NormalizedLaplacian& lap, double kappa, double h,
                                     const Vector& x, const Vector& grad_x,
                                     const CgOptions& options) {
  AdjointResult out;
  out.grad_b = cg_solve(lap, kappa, h, grad_x, options).x;
  out.grad_kappa = -h * out.grad_b.dot(lap.matrix() * x);
  return out;
}

// ---------------------------------------------------------------------------

RowVector diffusion_coefficients(const RowVector& sigma_hat, const RowVector* e_sigma,
                                 double t) {
  RowVector z = sigma_hat;
  if (e_sigma != nullptr) {
    if (e_sigma->size() != sigma_hat.size()) {
      throw ShapeError("diffusion_coefficients: time embedding length mismatch");
    }
    z += (t * *e_sigma).array().sin().matrix();
  }
  return (-z.cwiseMax(0.0)).array().exp().matrix();
}

Var diffusion_coefficients(const DiffusionWeights& w, double t) {
  Var z = w.sigma_hat;
  if (w.e_sigma.valid()) z = add(z, sine(scale(w.e_sigma, t)));
  return exp_neg_relu(z);
}

Var additive_preactivation(const Var& u, const Var& u0, double t, const AdditiveWeights& w) {
  Var z = matmul(u, w.k_u);
  if (w.k_u0.valid()) {
    if (u0.rows() != u.rows() || u0.cols() != u.cols()) {
      throw ShapeError("reaction: U and U0 shapes differ");
    }
    z = add(z, matmul(u0, w.k_u0));
  }
  if (w.e_f.valid() && w.k_t.valid()) {
    // Every node sees the same embedded time, so mix one row and broadcast.
    Var time_row = matmul(sine(scale(w.e_f, t)), w.k_t);
    z = add(z, broadcast_row(time_row, u.rows()));
  }
  return z;
}

Var reaction_additive(const Var& u, const Var& u0, double t, const AdditiveWeights& w) {
  return relu(additive_preactivation(u, u0, t, w));
}

Var reaction_multiplicative(const Var& u, const Var& u0, double t, const ReactionWeights& w) {
  return hadamard(reaction_additive(u, u0, t, w.first), reaction_additive(u, u0, t, w.second));
}

Var reaction_total(const Var& u, const Var& u0, double t, const ReactionWeights& w,
                   ReactionMode mode) {
  switch (mode) {
    case ReactionMode::kNone:
      return u.tape().constant(Matrix::Zero(u.rows(), u.cols()));
    case ReactionMode::kLinear:
      return matmul(u, w.first.k_u);
    case ReactionMode::kAdditive: {
      AdditiveWeights no_u0 = w.first;
      no_u0.k_u0 = Var();
      return reaction_additive(u, u0, t, no_u0);
    }
    case ReactionMode::kAdditiveU0:
      return reaction_additive(u, u0, t, w.first);
    case ReactionMode::kMultiplicative:
      return reaction_multiplicative(u, u0, t, w);
    case ReactionMode::kAll: {
      Var add1 = reaction_additive(u, u0, t, w.first);
      Var add2 = reaction_additive(u, u0, t, w.second);
      return add(add1, hadamard(add1, add2));
    }
  }
  throw std::invalid_argument("reaction_total: unknown mode");
}

Var explicit_step(const Var& u, const NormalizedLaplacian& lap, const Var& sigma, const Var& f,
                  double h) {
  if (h <= 0) throw std::invalid_argument("explicit_step: h must be positive");
  Var diffusion = scale_columns(sparse_apply(lap, u), sigma);
  return add(u, scale(sub(f, diffusion), h));
}

Var implicit_diffusion(const Var& v, const NormalizedLaplacian& lap, const Var& sigma, double h,
                       const SolverOptions& options) {
  if (h <= 0) throw std::invalid_argument("implicit_diffusion: h must be positive");
  if (sigma.rows() != 1 || sigma.cols() != v.cols()) {
    throw ShapeError("implicit_diffusion: sigma must be 1 x " + std::to_string(v.cols()));
  }
  Matrix x = implicit_diffusion_solve(lap, v.value(), sigma.value().row(0), h, options.forward);
  const NormalizedLaplacian* l = &lap;
  const CgOptions adjoint = options.adjoint;
  Tape& tape = v.tape();
  // The backward closure reads the solution back from its own output node.
  const int out_id = static_cast<int>(tape.size());
  return tape.record(std::move(x), {v, sigma},
                     [v, sigma, l, h, adjoint, out_id](const Matrix& g, Tape& t) {
                       const Matrix& sol = t.value(out_id);
                       Matrix grad_v(g.rows(), g.cols());
                       Matrix grad_sigma(1, g.cols());
                       for (Index j = 0; j < g.cols(); ++j) {
                         AdjointResult adj = implicit_solve_adjoint(
                             *l, sigma.value()(0, j), h, sol.col(j), g.col(j), adjoint);
                         grad_v.col(j) = std::move(adj.grad_b);
                         grad_sigma(0, j) = adj.grad_kappa;
                       }
                       t.accumulate(v, grad_v);
                       t.accumulate(sigma, grad_sigma);
                     });
}

Var imex_step(const Var& u, const NormalizedLaplacian& lap, const Var& sigma, const Var& f,
              double h, const SolverOptions& options) {
  if (h <= 0) throw std::invalid_argument("imex_step: h must be positive");
  return implicit_diffusion(add(u, scale(f, h)), lap, sigma, h, options);
}

}  // namespace rdgnn
