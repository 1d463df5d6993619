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

#include <doctest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include "rdgnn/dynamics.hpp"
#include "test_util.hpp"

using namespace rdgnn;
using namespace rdgnn::testing;

namespace {

const SolverOptions kTight{{1e-14, 500}, {1e-14, 500}};

struct RawAdditive {
  Matrix k_u, k_u0, k_t;
  RowVector e_f;

  static RawAdditive random(Index c, std::mt19937_64& rng) {
    return {random_matrix(c, c, rng), random_matrix(c, c, rng), random_matrix(c, c, rng),
            random_matrix(1, c, rng)};
  }

  AdditiveWeights bind(Tape& t, bool with_u0 = true, bool with_time = true) const {
    AdditiveWeights w;
    w.k_u = t.constant(k_u);
    if (with_u0) w.k_u0 = t.constant(k_u0);
    if (with_time) {
      w.k_t = t.constant(k_t);
      w.e_f = t.constant(e_f);
    }
    return w;
  }

  // Direct evaluation with plain Eigen expressions.
  Matrix eval(const Matrix& u, const Matrix& u0, double time, bool with_u0,
              bool with_time) const {
    Matrix pre = u * k_u;
    if (with_u0) pre += u0 * k_u0;
    if (with_time) {
      const Matrix phase = Matrix::Ones(u.rows(), 1) * (time * e_f);
      pre += phase.array().sin().matrix() * k_t;
    }
    return pre.cwiseMax(0.0);
  }
};

Matrix column(std::initializer_list<double> v) {
  Matrix m(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------

TEST_CASE("diffusion_coefficients: examples") {
  RowVector s(3);
  s << 0.0, -5.0, std::log(2.0);
  const RowVector k = diffusion_coefficients(s, nullptr, 0.0);
  CHECK(k[0] == 1.0);
  CHECK(k[1] == 1.0);
  CHECK(k[2] == doctest::Approx(0.5).epsilon(1e-15));

  Tape t;
  const Var kv = diffusion_coefficients(DiffusionWeights{t.constant(s), Var()}, 3.0);
  CHECK(max_abs_diff(kv.value(), k) == 0.0);
}

TEST_CASE("diffusion_coefficients: time term and range (0, 1]") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const RowVector s = random_matrix(1, 6, rng, -20.0, 20.0);
    const RowVector e = random_matrix(1, 6, rng, -5.0, 5.0);
    const double time = std::uniform_real_distribution<double>(0.0, 100.0)(rng);
    const RowVector k = diffusion_coefficients(s, &e, time);
    CHECK(k.minCoeff() > 0.0);
    CHECK(k.maxCoeff() <= 1.0);
    const RowVector expected =
        (-(s.array() + (time * e.array()).sin()).max(0.0)).exp().matrix();
    CHECK(max_abs_diff(k, expected) < 1e-15);
  }
}

TEST_CASE("reaction_additive: zero and identity weights") {
  std::mt19937_64 rng(1);
  const Matrix u = random_matrix(5, 3, rng), u0 = random_matrix(5, 3, rng);
  Tape t;
  const Var z = t.constant(Matrix::Zero(3, 3));
  AdditiveWeights zero{z, z, z, t.constant(Matrix::Zero(1, 3))};
  CHECK(reaction_additive(t.constant(u), t.constant(u0), 1.5, zero).value() == Matrix::Zero(5, 3));

  AdditiveWeights ident{t.constant(Matrix::Identity(3, 3)), z, z, Var()};
  CHECK(reaction_additive(t.constant(u), t.constant(u0), 0.0, ident).value() == u.cwiseMax(0.0));
}

TEST_CASE("reaction_additive: direct formula oracle") {
  std::mt19937_64 rng(2);
  const RawAdditive raw = RawAdditive::random(4, rng);
  const Matrix u = random_matrix(3, 4, rng), u0 = random_matrix(3, 4, rng);
  for (bool with_u0 : {false, true}) {
    for (bool with_time : {false, true}) {
      Tape t;
      const Matrix got = reaction_additive(t.constant(u), t.constant(u0), 0.7,
                                           raw.bind(t, with_u0, with_time))
                             .value();
      CHECK(max_abs_diff(got, raw.eval(u, u0, 0.7, with_u0, with_time)) < 1e-14);
    }
  }
  Tape t;
  CHECK_THROWS_AS(reaction_additive(t.constant(u), t.constant(Matrix::Zero(2, 4)), 0.0,
                                    raw.bind(t)),
                  ShapeError);
}

TEST_CASE("reaction_multiplicative: examples") {
  std::mt19937_64 rng(3);
  const RawAdditive a = RawAdditive::random(3, rng);
  const Matrix u = random_matrix(4, 3, rng), u0 = random_matrix(4, 3, rng);
  Tape t;
  const Var z = t.constant(Matrix::Zero(3, 3));
  ReactionWeights w{a.bind(t), AdditiveWeights{z, z, z, t.constant(Matrix::Zero(1, 3))}};
  CHECK(reaction_multiplicative(t.constant(u), t.constant(u0), 0.4, w).value() ==
        Matrix::Zero(4, 3));

  ReactionWeights same{a.bind(t), a.bind(t)};
  const Matrix f1 = a.eval(u, u0, 0.4, true, true);
  CHECK(max_abs_diff(reaction_multiplicative(t.constant(u), t.constant(u0), 0.4, same).value(),
                     f1.cwiseProduct(f1)) < 1e-14);
}

TEST_CASE("reaction_multiplicative: gradient check") {
  std::mt19937_64 rng(31);
  const Index n = 3, c = 3;
  const std::vector<Matrix> p{random_matrix(n, c, rng), random_matrix(c, c, rng),
                              random_matrix(c, c, rng), random_matrix(c, c, rng),
                              random_matrix(c, c, rng), random_matrix(1, c, rng),
                              random_matrix(1, c, rng)};
  const Matrix u0 = random_matrix(n, c, rng);
  const GradientCheck gc = check_gradients(
      [&](Tape& t, std::span<const Var> v) {
        ReactionWeights w{{v[1], v[2], t.constant(Matrix::Identity(c, c)), v[5]},
                          {v[3], v[4], t.constant(Matrix::Identity(c, c)), v[6]}};
        return sum(reaction_multiplicative(v[0], t.constant(u0), 0.9, w));
      },
      p);
  CHECK(gc.max_relative_error < 1e-5);
}

TEST_CASE("reaction_total: mode semantics") {
  std::mt19937_64 rng(5);
  const RawAdditive a = RawAdditive::random(4, rng), b = RawAdditive::random(4, rng);
  const Matrix u = random_matrix(6, 4, rng), u0 = random_matrix(6, 4, rng);
  const double time = 1.3;

  Tape t;
  const Var uv = t.constant(u), u0v = t.constant(u0);
  const ReactionWeights w{a.bind(t), b.bind(t)};

  // mode=all: f_add1 + f_add1 (.) f_add2, compared with separate evaluations.
  const Matrix f1 = a.eval(u, u0, time, true, true), f2 = b.eval(u, u0, time, true, true);
  CHECK(max_abs_diff(reaction_total(uv, u0v, time, w, ReactionMode::kAll).value(),
                     f1 + f1.cwiseProduct(f2)) < 1e-13);
  CHECK(max_abs_diff(reaction_total(uv, u0v, time, w, ReactionMode::kAll).value(),
                     reaction_total(uv, u0v, time, w, ReactionMode::kAdditiveU0).value() +
                         reaction_total(uv, u0v, time, w, ReactionMode::kMultiplicative).value()) <
        1e-13);

  // Zeroed multiplicative branch reduces mode=all to additive_u0 exactly.
  const Var z = t.constant(Matrix::Zero(4, 4));
  const ReactionWeights zeroed{a.bind(t), {z, z, z, t.constant(Matrix::Zero(1, 4))}};
  CHECK(reaction_total(uv, u0v, time, zeroed, ReactionMode::kAll).value() ==
        reaction_total(uv, u0v, time, zeroed, ReactionMode::kAdditiveU0).value());

  // mode=additive ignores U0.
  const Matrix other_u0 = random_matrix(6, 4, rng);
  CHECK(reaction_total(uv, u0v, time, w, ReactionMode::kAdditive).value() ==
        reaction_total(uv, t.constant(other_u0), time, w, ReactionMode::kAdditive).value());
  CHECK(max_abs_diff(reaction_total(uv, u0v, time, w, ReactionMode::kAdditive).value(),
                     a.eval(u, u0, time, false, true)) < 1e-14);

  CHECK(reaction_total(uv, u0v, time, w, ReactionMode::kNone).value() == Matrix::Zero(6, 4));
  CHECK(max_abs_diff(reaction_total(uv, u0v, time, w, ReactionMode::kLinear).value(),
                     u * a.k_u) < 1e-14);
}

TEST_CASE("reaction modes: names") {
  for (auto m : {ReactionMode::kAdditive, ReactionMode::kAdditiveU0, ReactionMode::kMultiplicative,
                 ReactionMode::kAll, ReactionMode::kLinear, ReactionMode::kNone}) {
    CHECK(parse_reaction_mode(to_string(m)) == m);
  }
  CHECK(parse_reaction_mode("none") == ReactionMode::kNone);
  CHECK_THROWS_AS(parse_reaction_mode("quadratic"), std::invalid_argument);
  CHECK(parse_integrator("explicit") == Integrator::kExplicit);
  CHECK(parse_integrator("imex") == Integrator::kImex);
  CHECK_THROWS_AS(parse_integrator("rk4"), std::invalid_argument);
}

// ---------------------------------------------------------------------------

TEST_CASE("explicit_step: examples") {
  const NormalizedLaplacian lap = normalized_laplacian(p2());
  Tape t;
  const Var u = t.constant(column({1, 0}));
  const Var f = t.constant(Matrix::Zero(2, 1));
  const Matrix next = explicit_step(u, lap, t.constant(Matrix::Ones(1, 1)), f, 1.0).value();
  CHECK(next(0, 0) == doctest::Approx(0.5));
  CHECK(next(1, 0) == doctest::Approx(0.5));
  CHECK(explicit_step(u, lap, t.constant(Matrix::Zero(1, 1)), f, 1.0).value() == u.value());
  CHECK_THROWS_AS(explicit_step(u, lap, t.constant(Matrix::Ones(1, 2)), f, 1.0), ShapeError);
}

TEST_CASE("explicit_step: update is O(h)") {
  const NormalizedLaplacian lap = normalized_laplacian(p2());
  std::mt19937_64 rng(6);
  const Matrix u0 = random_matrix(2, 2, rng), f0 = random_matrix(2, 2, rng);
  std::vector<double> ratios;
  for (double h : {1e-1, 1e-2, 1e-3, 1e-4}) {
    Tape t;
    const Var u = t.constant(u0);
    const Matrix next =
        explicit_step(u, lap, t.constant(Matrix::Ones(1, 2)), t.constant(f0), h).value();
    ratios.push_back((next - u0).norm() / h);
  }
  // ||U_{l+1} - U_l|| / h is constant: exactly ||L U - f||.
  for (double r : ratios) CHECK(r == doctest::Approx(ratios.front()).epsilon(1e-10));
}

TEST_CASE("cg_solve: examples") {
  const NormalizedLaplacian lap = normalized_laplacian(p2());
  const Vector b = column({1, 0});
  const CgResult id = cg_solve(lap, 0.0, 1.0, b);
  CHECK(id.iterations == 0);
  CHECK(id.x == b);

  const CgResult r = cg_solve(lap, 1.0, 1.0, b, CgOptions{1e-12, 50});
  CHECK(r.x[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(r.x[1] == doctest::Approx(0.25).epsilon(1e-12));

  const CgResult z = cg_solve(lap, 1.0, 1.0, Vector::Zero(2));
  CHECK(z.iterations == 0);
  CHECK(z.x == Vector::Zero(2));
}

TEST_CASE("cg_solve: citation-scale Laplacian within 10 iterations") {
  const Graph g = build_graph(2708, random_edges(2708, 5429, 7));
  const NormalizedLaplacian lap = normalized_laplacian(g);
  std::mt19937_64 rng(8);
  for (double kappa : {0.1, 0.5, 1.0}) {
    for (double h : {0.1, 0.5, 1.0}) {
      const Vector b = random_matrix(2708, 1, rng);
      const CgResult r = cg_solve(lap, kappa, h, b);
      CHECK(r.iterations <= 10);
      CHECK(r.relative_residual < 1e-2);
      const Vector mx = r.x + h * kappa * laplacian_apply(lap, r.x);
      CHECK((mx - b).norm() / b.norm() == doctest::Approx(r.relative_residual).epsilon(1e-6));
    }
  }
}

TEST_CASE("cg_solve: errors") {
  const Graph g = path_graph(200);
  const NormalizedLaplacian lap = normalized_laplacian(g);
  std::mt19937_64 rng(9);
  const Vector b = random_matrix(200, 1, rng);
  try {
    cg_solve(lap, 1.0, 100.0, b, CgOptions{1e-12, 3});
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(e.iterations() == 3);
    CHECK(e.relative_residual() > 1e-12);
    CHECK(std::string(e.what()).find("relative residual") != std::string::npos);
  }
  Vector bad = b;
  bad[3] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(cg_solve(lap, 1.0, 1.0, bad), NumericError);
  CHECK_THROWS_AS(cg_solve(lap, 1.0, 1.0, Vector::Ones(5)), ShapeError);
  CHECK_THROWS_AS(cg_solve(lap, -1.0, 1.0, b), std::invalid_argument);
  CHECK_THROWS_AS(cg_solve(lap, 1.0, 0.0, b), std::invalid_argument);
}

// ---------------------------------------------------------------------------

TEST_CASE("imex_step: examples") {
  const NormalizedLaplacian lap = normalized_laplacian(p2());
  Tape t;
  const Var u = t.constant(column({1, 0}));
  const Var f = t.constant(Matrix::Zero(2, 1));
  CHECK(imex_step(u, lap, t.constant(Matrix::Zero(1, 1)), f, 1.0).value() == u.value());
  const Matrix next = imex_step(u, lap, t.constant(Matrix::Ones(1, 1)), f, 1.0, kTight).value();
  CHECK(next(0, 0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(next(1, 0) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("imex_step: per-channel solve equals the dense Kronecker system") {
  std::mt19937_64 rng(10);
  std::vector<Graph> graphs{p2(), k3()};
  for (std::uint64_t s = 0; s < 30; ++s) graphs.push_back(random_graph(2 + s % 15, 0.3, s));
  for (const Graph& g : graphs) {
    const Index n = g.num_nodes();
    const Index c = std::max<Index>(1, std::min<Index>(64 / n, 3 + n % 4));
    const NormalizedLaplacian lap = normalized_laplacian(g);
    const RowVector sigma = random_matrix(1, c, rng, 0.0, 1.0);
    const double h = std::uniform_real_distribution<double>(0.01, 3.0)(rng);
    const Matrix u = random_matrix(n, c, rng), f = random_matrix(n, c, rng);
    Tape t;
    const Matrix got =
        imex_step(t.constant(u), lap, t.constant(sigma), t.constant(f), h, kTight).value();
    CHECK(max_abs_diff(got, kronecker_solve_oracle(lap.dense(), sigma, h, u + h * f)) < 1e-8);
  }
}

TEST_CASE("imex_step: default forward tolerance still solves to 1e-2") {
  const Graph g = random_graph(60, 0.1, 3);
  const NormalizedLaplacian lap = normalized_laplacian(g);
  std::mt19937_64 rng(12);
  const Matrix v = random_matrix(60, 4, rng);
  const RowVector sigma = random_matrix(1, 4, rng, 0.2, 1.0);
  const Matrix x = implicit_diffusion_solve(lap, v, sigma, 0.8);
  for (Index j = 0; j < 4; ++j) {
    const Vector r = x.col(j) + 0.8 * sigma[j] * laplacian_apply(lap, x.col(j)) - v.col(j);
    CHECK(r.norm() / v.col(j).norm() <= 1e-2);
  }
}

TEST_CASE("implicit_solve_adjoint: identity system") {
  const NormalizedLaplacian lap = normalized_laplacian(k3());
  std::mt19937_64 rng(13);
  const Vector x = random_matrix(3, 1, rng), gx = random_matrix(3, 1, rng);
  const AdjointResult r = implicit_solve_adjoint(lap, 0.0, 0.5, x, gx);
  CHECK(r.grad_b == gx);
  CHECK(r.grad_kappa == doctest::Approx(-0.5 * gx.dot(laplacian_apply(lap, x).col(0))));
}

TEST_CASE("implicit_solve_adjoint: matches dense implicit differentiation") {
  const Graph g = random_graph(8, 0.4, 2);
  const NormalizedLaplacian lap = normalized_laplacian(g);
  const Matrix l = lap.dense();
  std::mt19937_64 rng(14);
  const Vector b = random_matrix(8, 1, rng), gx = random_matrix(8, 1, rng);
  const double kappa = 0.7, h = 0.9;
  const Matrix m = Matrix::Identity(8, 8) + h * kappa * l;
  const Vector x = m.lu().solve(b);
  const AdjointResult r = implicit_solve_adjoint(lap, kappa, h, x, gx, CgOptions{1e-14, 200});
  const Vector gb = m.lu().solve(gx);
  CHECK(max_abs_diff(r.grad_b, gb) < 1e-10);
  CHECK(r.grad_kappa == doctest::Approx(-h * gb.dot(l * x)).epsilon(1e-10));
}

TEST_CASE("imex layer: gradients match finite differences") {
  for (const Graph& g : {p2(), k3()}) {
    const Index n = g.num_nodes(), c = 3;
    const NormalizedLaplacian lap = normalized_laplacian(g);
    std::mt19937_64 rng(15 + n);
    const Matrix u0 = random_matrix(n, c, rng);
    // u, k_u, k_u0, sigma_hat (negative entries stay off the ReLU kink at 0)
    const std::vector<Matrix> p{random_matrix(n, c, rng), random_matrix(c, c, rng),
                                random_matrix(c, c, rng),
                                (Matrix(1, c) << 0.3, 0.8, -0.4).finished()};
    const GradientCheck gc = check_gradients(
        [&](Tape& t, std::span<const Var> v) {
          const AdditiveWeights w{v[1], v[2], Var(), Var()};
          const Var f = reaction_additive(v[0], t.constant(u0), 0.0, w);
          const Var sigma = diffusion_coefficients(DiffusionWeights{v[3], Var()}, 0.0);
          const Var out = imex_step(v[0], lap, sigma, f, 0.7, kTight);
          return sum(hadamard(out, out));
        },
        p);
    CHECK(gc.max_relative_error < 1e-4);
  }
}

TEST_CASE("implicit_diffusion: kappa gradient sign agrees with finite differences") {
  // Smooth target: the null-space direction, so more diffusion helps.
  const Graph g = path_graph(6);
  const NormalizedLaplacian lap = normalized_laplacian(g);
  const Matrix target = lap.sqrt_degree();
  std::mt19937_64 rng(16);
  const Matrix v = target + 0.5 * random_matrix(6, 1, rng);
  auto loss = [&](double kappa) {
    Tape t;
    Var k = t.variable(Matrix::Constant(1, 1, kappa));
    const Var out = implicit_diffusion(t.constant(v), lap, k, 1.0, kTight);
    const Var d = out - t.constant(target);
    const Var l = sum(hadamard(d, d));
    t.backward(l);
    return std::make_pair(l.value()(0, 0), k.grad()(0, 0));
  };
  const auto [l0, grad] = loss(0.5);
  const double fd = (loss(0.5 + 1e-6).first - loss(0.5 - 1e-6).first) / 2e-6;
  CHECK(grad == doctest::Approx(fd).epsilon(1e-5));
  CHECK(grad < 0.0);
  CHECK(loss(0.6).first < l0);
}

// ---------------------------------------------------------------------------

TEST_CASE("pure IMEX diffusion never expands") {
  std::mt19937_64 rng(17);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Graph g = random_graph(12, 0.3, s);
    const NormalizedLaplacian lap = normalized_laplacian(g);
    for (double h : {0.01, 0.1, 1.0, 10.0, 100.0}) {
      const RowVector sigma = random_matrix(1, 2, rng, 0.0, 1.0);
      Matrix u = random_matrix(12, 2, rng);
      for (int l = 0; l < 5; ++l) {
        Tape t;
        const Matrix next = imex_step(t.constant(u), lap, t.constant(sigma),
                                      t.constant(Matrix::Zero(12, 2)), h, kTight)
                                .value();
        CHECK(next.norm() <= u.norm() * (1.0 + 1e-12));
        u = next;
      }
    }
  }
}

TEST_CASE("explicit diffusion on K3: growth iff h kappa lambda_max > 2") {
  // lambda_max(L^) = 1 on K3; iterate the non-null component.
  const NormalizedLaplacian lap = normalized_laplacian(k3());
  const Matrix u0 = column({1, -1, 0});  // eigenvector for lambda = 1
  for (double hk : {0.5, 1.5, 1.99, 2.01, 2.5, 3.0}) {
    Matrix u = u0;
    for (int l = 0; l < 10; ++l) {
      Tape t;
      u = explicit_step(t.constant(u), lap, t.constant(Matrix::Ones(1, 1)),
                        t.constant(Matrix::Zero(3, 1)), hk)
              .value();
    }
    const double predicted = std::pow(std::abs(1.0 - hk), 10) * u0.norm();
    CHECK(u.norm() == doctest::Approx(predicted).epsilon(1e-10));
    if (hk > 2.0) CHECK(u.norm() > u0.norm());
    if (hk < 2.0) CHECK(u.norm() < u0.norm());
  }
}
