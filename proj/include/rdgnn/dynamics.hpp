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

// Reaction-diffusion layer physics on a graph.
//
// State U is n x c (nodes x channels). One layer advances
//
//   dU/dt = -L^ U diag(sigma) + f(U, U0, t)
//
// by either forward Euler or an IMEX step that treats the reaction
// explicitly and the diffusion implicitly. Because diag(sigma) (x) L^ is
// block-diagonal, the implicit system splits into c independent n x n
// solves (I + h sigma_j L^) u_j = v_j, each handled by unpreconditioned CG.

#ifndef RDGNN_DYNAMICS_HPP_
#define RDGNN_DYNAMICS_HPP_

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "rdgnn/autodiff.hpp"
#include "rdgnn/graph.hpp"

namespace rdgnn {

enum class ReactionMode {
  kAdditive,        // relu(U K_U [+ time term]); no U0 coupling
  kAdditiveU0,      // relu(U K_U + U0 K_U0 [+ time term])
  kMultiplicative,  // f_add1 (.) f_add2
  kAll,             // f_add1 + f_add1 (.) f_add2, f_add1 weights shared
  kLinear,          // U K_U without activation (single-channel analysis)
  kNone,            // f = 0 (pure diffusion)
};

enum class Integrator { kExplicit, kImex };

std::string to_string(ReactionMode mode);
std::string to_string(Integrator integrator);
// Throws std::invalid_argument on unknown names.
ReactionMode parse_reaction_mode(const std::string& name);
Integrator parse_integrator(const std::string& name);

// ---------------------------------------------------------------------------
// Conjugate gradient on M = I + h kappa L^.

struct CgOptions {
  double tolerance = 1e-2;  // on ||M x - b|| / ||b||
  int max_iterations = 50;
};

template <typename Scalar>
struct BasicCgResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x;
  int iterations = 0;
  Scalar relative_residual = 0;
};
using CgResult = BasicCgResult<double>;

// Zero initial guess, no preconditioner. Throws SolverError when the
// tolerance is not met within max_iterations.
template <typename Scalar, typename Derived>
BasicCgResult<Scalar> cg_solve(const BasicNormalizedLaplacian<Scalar>& lap, Scalar kappa,
                               Scalar h, const Eigen::MatrixBase<Derived>& b,
                               const CgOptions& options = {}) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (b.rows() != lap.size() || b.cols() != 1) {
    throw ShapeError("cg_solve: right-hand side has " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ", expected " +
                     std::to_string(lap.size()) + "x1");
  }
  if (!std::isfinite(kappa) || !std::isfinite(h) || !b.allFinite()) {
    throw NumericError("cg_solve: non-finite input");
  }
  if (kappa < 0 || h <= 0) {
    throw std::invalid_argument("cg_solve: requires kappa >= 0 and h > 0");
  }
  BasicCgResult<Scalar> result;
  const Scalar b_norm = b.norm();
  if (b_norm == Scalar(0)) {
    result.x = Vec::Zero(b.rows());
    return result;
  }
  const Scalar hk = h * kappa;
  if (hk == Scalar(0)) {
    result.x = b;
    return result;
  }
  Vec x = Vec::Zero(b.rows());
  Vec r = b;
  Vec p = r;
  Vec mp(b.rows());
  Scalar rs = r.squaredNorm();
  int k = 0;
  while (std::sqrt(rs) / b_norm > options.tolerance) {
    if (k == options.max_iterations) {
      throw SolverError("cg_solve: no convergence after " + std::to_string(k) +
                            " iterations (relative residual " +
                            std::to_string(std::sqrt(rs) / b_norm) + ")",
                        k, static_cast<double>(std::sqrt(rs) / b_norm));
    }
    mp.noalias() = lap.matrix() * p;
    mp = p + hk * mp;
    const Scalar alpha = rs / p.dot(mp);
    x += alpha * p;
    r -= alpha * mp;
    const Scalar rs_next = r.squaredNorm();
    p = r + (rs_next / rs) * p;
    rs = rs_next;
    ++k;
  }
  result.x = std::move(x);
  result.iterations = k;
  result.relative_residual = std::sqrt(rs) / b_norm;
  return result;
}

struct SolverOptions {
  CgOptions forward{1e-2, 50};
  CgOptions adjoint{1e-4, 50};
};

// Column-wise solve of (I + h sigma_j L^) u_j = v_j. `sigma` has length c.
Matrix implicit_diffusion_solve(const NormalizedLaplacian& lap, const Matrix& v,
                                const RowVector& sigma, double h,
                                const CgOptions& options = {});

struct AdjointResult {
  Vector grad_b;
  double grad_kappa = 0.0;
};

// Implicit differentiation through one channel's solve M x = b.
// grad_b = M^{-1} grad_x and grad_kappa = -h grad_b^T (L^ x).
AdjointResult implicit_solve_adjoint(const NormalizedLaplacian& lap, double kappa, double h,
                                     const Vector& x, const Vector& grad_x,
                                     const CgOptions& options = {1e-4, 50});

// ---------------------------------------------------------------------------
// Tape-level layer pieces.

// One additive branch. Absent handles (default Var) drop their term:
// k_u0 for modes without U0 coupling, k_t / e_f outside the time variant.
struct AdditiveWeights {
  Var k_u;   // c x c
  Var k_u0;  // c x c
  Var k_t;   // c x c
  Var e_f;   // 1 x c
};

struct ReactionWeights {
  AdditiveWeights first;   // f_add1, shared by the additive and product terms
  AdditiveWeights second;  // f_add2
};

struct DiffusionWeights {
  Var sigma_hat;  // 1 x c
  Var e_sigma;    // 1 x c, time variant only
};

// exp(-relu(sigma_hat + sin(t e_sigma))); the sine term only when e_sigma is
// present. Always in (0, 1].
Var diffusion_coefficients(const DiffusionWeights& w, double t);
RowVector diffusion_coefficients(const RowVector& sigma_hat, const RowVector* e_sigma,
                                 double t);

// Pre-activation U K_U + U0 K_U0 + sin(t 1 e_f^T) K_t with absent terms dropped.
Var additive_preactivation(const Var& u, const Var& u0, double t, const AdditiveWeights& w);
Var reaction_additive(const Var& u, const Var& u0, double t, const AdditiveWeights& w);
Var reaction_multiplicative(const Var& u, const Var& u0, double t, const ReactionWeights& w);
// Dispatches on mode. For kAdditive the U0 coupling is skipped even if
// first.k_u0 is present; kNone returns a zero constant.
Var reaction_total(const Var& u, const Var& u0, double t, const ReactionWeights& w,
                   ReactionMode mode);

// U - h (L^ U diag(sigma) - f).
Var explicit_step(const Var& u, const NormalizedLaplacian& lap, const Var& sigma,
                  const Var& f, double h);

// mat((I + h diag(sigma) (x) L^)^{-1} vec(v)), differentiated implicitly.
Var implicit_diffusion(const Var& v, const NormalizedLaplacian& lap, const Var& sigma,
                       double h, const SolverOptions& options = {});

// V = U + h f, then the implicit diffusion solve.
Var imex_step(const Var& u, const NormalizedLaplacian& lap, const Var& sigma, const Var& f,
              double h, const SolverOptions& options = {});

}  // namespace rdgnn

#endif  // RDGNN_DYNAMICS_HPP_
