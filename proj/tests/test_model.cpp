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

#include "rdgnn/model.hpp"
#include "test_util.hpp"

using namespace rdgnn;
using namespace rdgnn::testing;

namespace {

ModelConfig small_config(Variant v, ReactionMode mode, Integrator integ, int layers = 2,
                         int channels = 3) {
  ModelConfig cfg;
  cfg.variant = v;
  cfg.reaction = mode;
  cfg.integrator = integ;
  cfg.layers = layers;
  cfg.channels = channels;
  cfg.in_features = 2;
  cfg.out_features = 2;
  cfg.h = 0.6;
  cfg.solver = SolverOptions{{1e-14, 500}, {1e-14, 500}};
  return cfg;
}

// Moves diffusion parameters off the ReLU kink at zero.
void jitter_diffusion(ModelParams& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& e : p.entries()) {
    if (e.group == ParamGroup::kDiffusion) e.value = random_matrix(1, e.value.cols(), rng, -0.9, 0.9);
  }
}

}  // namespace

TEST_CASE("ModelConfig: structural validation") {
  ModelConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.layers = 0;
  cfg.h = 0.0;
  cfg.hidden_dropout = 0.95;
  try {
    cfg.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.violations().size() == 3);
  }
  CHECK(parse_variant("T") == Variant::kT);
  CHECK_THROWS_AS(parse_variant("X"), std::invalid_argument);
}

TEST_CASE("init_params: Glorot bounds, zero biases, unit diffusion") {
  ModelConfig cfg;
  cfg.channels = 64;
  cfg.in_features = 64;
  cfg.out_features = 64;
  cfg.variant = Variant::kT;
  const ModelParams p = init_params(cfg, 7);
  CHECK(glorot_bound(64, 64) == doctest::Approx(0.2165).epsilon(1e-4));
  const Matrix& k = p.at("shared.reaction.add1.k_u");
  CHECK(k.cwiseAbs().maxCoeff() <= glorot_bound(64, 64));
  CHECK(k.cwiseAbs().maxCoeff() > 0.9 * glorot_bound(64, 64));
  CHECK(p.at("embed.bias") == Matrix::Zero(1, 64));
  CHECK(p.at("readout.bias") == Matrix::Zero(1, 64));
  CHECK(p.at("shared.diffusion.sigma_hat") == Matrix::Zero(1, 64));
  const Matrix& e_sigma = p.at("shared.diffusion.e_sigma");
  CHECK(e_sigma.cwiseAbs().maxCoeff() <= glorot_bound(1, 64));
  CHECK(e_sigma.cwiseAbs().maxCoeff() > 0.0);
  CHECK(p.at("shared.reaction.add1.e_f").cwiseAbs().maxCoeff() <= glorot_bound(1, 64));

  const RowVector sh = p.at("shared.diffusion.sigma_hat");
  CHECK(diffusion_coefficients(sh, nullptr, 0.0) == RowVector::Ones(64));
}

TEST_CASE("init_params: determinism") {
  ModelConfig cfg;
  CHECK(init_params(cfg, 3) == init_params(cfg, 3));
  CHECK_FALSE(init_params(cfg, 3) == init_params(cfg, 4));
}

TEST_CASE("parameters: layout per variant and mode") {
  ModelConfig cfg = small_config(Variant::kI, ReactionMode::kAll, Integrator::kImex, 3);
  ModelParams p = init_params(cfg, 1);
  CHECK(p.find("layer2.reaction.add2.k_u0"));
  CHECK_FALSE(p.find("layer0.reaction.add1.k_t"));
  CHECK_FALSE(p.find("layer0.diffusion.e_sigma"));

  cfg.variant = Variant::kS;
  p = init_params(cfg, 1);
  CHECK(p.find("shared.reaction.add1.k_u"));
  CHECK_FALSE(p.find("layer0.reaction.add1.k_u"));
  CHECK_FALSE(p.find("shared.reaction.add1.e_f"));

  cfg.variant = Variant::kT;
  p = init_params(cfg, 1);
  CHECK(p.find("shared.reaction.add1.e_f"));
  CHECK(p.find("shared.reaction.add1.k_t"));
  CHECK(p.find("shared.diffusion.e_sigma"));

  cfg.reaction = ReactionMode::kAdditive;
  p = init_params(cfg, 1);
  CHECK_FALSE(p.find("shared.reaction.add1.k_u0"));
  CHECK_FALSE(p.find("shared.reaction.add2.k_u"));

  cfg.reaction = ReactionMode::kNone;
  p = init_params(cfg, 1);
  for (const auto& e : p.entries()) CHECK(e.group != ParamGroup::kReaction);
}

TEST_CASE("parameter_count: closed form, S/T independent of L, I affine in L") {
  for (auto mode : {ReactionMode::kAdditive, ReactionMode::kAdditiveU0,
                    ReactionMode::kMultiplicative, ReactionMode::kAll, ReactionMode::kLinear,
                    ReactionMode::kNone}) {
    for (auto v : {Variant::kI, Variant::kS, Variant::kT}) {
      std::vector<Index> counts;
      for (int layers = 1; layers <= 4; ++layers) {
        ModelConfig cfg = small_config(v, mode, Integrator::kImex, layers, 5);
        counts.push_back(parameter_count(cfg));
        CHECK(init_params(cfg, 0).scalar_count() == counts.back());
      }
      if (v == Variant::kI) {
        CHECK(counts[1] - counts[0] == counts[2] - counts[1]);
        CHECK(counts[3] - counts[2] == counts[2] - counts[1]);
        CHECK(counts[1] > counts[0]);
      } else {
        CHECK(counts[0] == counts[3]);
      }
    }
  }
  // c_in=2, c=5, c_out=2, mode=all, variant I, L=1:
  // embed 2*5+5, add1 2*25, add2 2*25, sigma 5, readout 5*2+2.
  CHECK(parameter_count(small_config(Variant::kI, ReactionMode::kAll, Integrator::kImex, 1, 5)) ==
        15 + 50 + 50 + 5 + 12);
}

TEST_CASE("embed_input") {
  std::mt19937_64 rng(2);
  Tape t;
  const Matrix x = random_matrix(4, 3, rng);
  const Var zero_w = t.constant(Matrix::Zero(3, 5)), zero_b = t.constant(Matrix::Zero(1, 5));
  CHECK(embed_input(t.constant(x), zero_w, zero_b, 0.0, false, nullptr).value() ==
        Matrix::Zero(4, 5));

  const Var w = t.constant(random_matrix(3, 5, rng)), b = t.constant(random_matrix(1, 5, rng));
  const Matrix reference = embed_input(t.constant(x), w, b, 0.0, false, nullptr).value();
  std::mt19937_64 drop(1);
  CHECK(embed_input(t.constant(x), w, b, 0.9, false, &drop).value() == reference);
  CHECK(max_abs_diff(reference,
                     (x * w.value() + Matrix::Ones(4, 1) * b.value()).cwiseMax(0.0)) < 1e-15);
  CHECK_THROWS_AS(embed_input(t.constant(x), t.constant(Matrix::Zero(4, 5)), zero_b, 0.0, false,
                              nullptr),
                  ShapeError);
}

TEST_CASE("embed_input: citation-scale shapes") {
  std::mt19937_64 rng(3);
  Tape t;
  const Matrix x = random_matrix(2708, 1433, rng, 0.0, 1.0);
  const Var w = t.constant(random_matrix(1433, 64, rng));
  const Var u0 = embed_input(t.constant(x), w, t.constant(Matrix::Zero(1, 64)), 0.0, false,
                             nullptr);
  CHECK(u0.rows() == 2708);
  CHECK(u0.cols() == 64);
}

TEST_CASE("readout") {
  std::mt19937_64 rng(4);
  Tape t;
  const Matrix u = random_matrix(5, 3, rng);
  const Matrix b = random_matrix(1, 2, rng);
  const Matrix y = readout(t.constant(u), t.constant(Matrix::Zero(3, 2)), t.constant(b)).value();
  for (Index i = 0; i < 5; ++i) CHECK(y.row(i) == b);
  const Matrix b3 = random_matrix(1, 3, rng);
  CHECK(max_abs_diff(
            readout(t.constant(u), t.constant(Matrix::Identity(3, 3)), t.constant(b3)).value(),
            u + Matrix::Ones(5, 1) * b3) < 1e-15);
  CHECK_THROWS_AS(readout(t.constant(u), t.constant(Matrix::Zero(2, 2)), t.constant(b)),
                  ShapeError);
  const std::vector<Matrix> p{u, random_matrix(3, 2, rng), b};
  CHECK(finite_difference_check(
            [](Tape& tt, std::span<const Var> v) {
              const Var y2 = readout(v[0], v[1], v[2]);
              return sum(hadamard(y2, y2));
            },
            p) < 1e-6);
}

TEST_CASE("forward: frozen dynamics reduce to readout(embed(X))") {
  for (auto integ : {Integrator::kExplicit, Integrator::kImex}) {
    ModelConfig cfg = small_config(Variant::kI, ReactionMode::kAll, integ, 4);
    ModelParams p = init_params(cfg, 5);
    for (auto& e : p.entries()) {
      if (e.group == ParamGroup::kReaction) e.value.setZero();
      // kappa = exp(-1000) is at most a subnormal, so diffusion vanishes.
      if (e.group == ParamGroup::kDiffusion) e.value.setConstant(1000.0);
    }
    const Graph g = k3();
    const NormalizedLaplacian lap = normalized_laplacian(g);
    std::mt19937_64 rng(6);
    const Matrix x = random_matrix(3, 2, rng);
    Tape t;
    BoundParams b(t, p, false);
    const Var u0 = embed_input(t.constant(x), b["embed.weight"], b["embed.bias"], 0.0, false,
                               nullptr);
    const Matrix expected = readout(u0, b["readout.weight"], b["readout.bias"]).value();
    CHECK(max_abs_diff(predict(p, x, lap, cfg), expected) < 1e-300);
  }
}

TEST_CASE("forward: scripted two-layer IMEX oracle on P2") {
  ModelConfig cfg = small_config(Variant::kI, ReactionMode::kAll, Integrator::kImex, 2, 2);
  ModelParams p = init_params(cfg, 8);
  std::mt19937_64 rng(9);
  for (auto& e : p.entries()) e.value = random_matrix(e.value.rows(), e.value.cols(), rng);
  const NormalizedLaplacian lap = normalized_laplacian(p2());
  const Matrix x = random_matrix(2, 2, rng);

  const Matrix l = dense_laplacian_oracle(2, {{0, 1}});
  auto relu = [](const Matrix& m) { return Matrix(m.cwiseMax(0.0)); };
  const Matrix u0 = relu(x * p.at("embed.weight") + Matrix::Ones(2, 1) * p.at("embed.bias"));
  Matrix u = u0;
  for (int layer = 0; layer < 2; ++layer) {
    const std::string b = "layer" + std::to_string(layer);
    const Matrix f1 = relu(u * p.at(b + ".reaction.add1.k_u") + u0 * p.at(b + ".reaction.add1.k_u0"));
    const Matrix f2 = relu(u * p.at(b + ".reaction.add2.k_u") + u0 * p.at(b + ".reaction.add2.k_u0"));
    const Matrix v = u + cfg.h * (f1 + f1.cwiseProduct(f2));
    const RowVector sh = p.at(b + ".diffusion.sigma_hat");
    Matrix next(2, 2);
    for (Index j = 0; j < 2; ++j) {
      const double kappa = std::exp(-std::max(0.0, sh[j]));
      next.col(j) = (Matrix::Identity(2, 2) + cfg.h * kappa * l).inverse() * v.col(j);
    }
    u = next;
  }
  const Matrix y = u * p.at("readout.weight") + Matrix::Ones(2, 1) * p.at("readout.bias");
  CHECK(max_abs_diff(predict(p, x, lap, cfg), y) < 1e-10);
}

TEST_CASE("forward: layer time t_l = t_offset + h l reaches the time embeddings") {
  ModelConfig cfg = small_config(Variant::kT, ReactionMode::kAdditive, Integrator::kExplicit, 1, 2);
  ModelParams p = init_params(cfg, 10);
  std::mt19937_64 rng(11);
  for (auto& e : p.entries()) e.value = random_matrix(e.value.rows(), e.value.cols(), rng);
  const NormalizedLaplacian lap = normalized_laplacian(p2());
  const Matrix x = random_matrix(2, 2, rng);
  const double t_offset = 2.5;

  const Matrix l = dense_laplacian_oracle(2, {{0, 1}});
  const Matrix u0 =
      (x * p.at("embed.weight") + Matrix::Ones(2, 1) * p.at("embed.bias")).cwiseMax(0.0);
  const Matrix phase =
      (Matrix::Ones(2, 1) * (t_offset * p.at("shared.reaction.add1.e_f"))).array().sin().matrix();
  const Matrix f =
      (u0 * p.at("shared.reaction.add1.k_u") + phase * p.at("shared.reaction.add1.k_t"))
          .cwiseMax(0.0);
  const RowVector kappa =
      (-(p.at("shared.diffusion.sigma_hat").array() +
         (t_offset * p.at("shared.diffusion.e_sigma").array()).sin())
            .max(0.0))
          .exp()
          .matrix();
  const Matrix u1 = u0 - cfg.h * (l * u0 * kappa.asDiagonal().toDenseMatrix() - f);
  const Matrix y = u1 * p.at("readout.weight") + Matrix::Ones(2, 1) * p.at("readout.bias");
  CHECK(max_abs_diff(predict(p, x, lap, cfg, t_offset), y) < 1e-12);
}

TEST_CASE("forward: parameter sharing semantics") {
  const NormalizedLaplacian lap = normalized_laplacian(k3());
  std::mt19937_64 rng(12);
  const Matrix x = random_matrix(3, 2, rng);
  auto trace = [&](const ModelParams& p, const ModelConfig& cfg) {
    Tape t;
    BoundParams b(t, p, false);
    ForwardOptions fo;
    fo.keep_trace = true;
    return forward(b, x, lap, cfg, fo).trace;
  };

  ModelConfig ci = small_config(Variant::kI, ReactionMode::kAdditiveU0, Integrator::kImex, 4);
  ModelParams pi = init_params(ci, 13);
  ModelParams pi2 = pi;
  pi2.at("layer3.reaction.add1.k_u") *= 3.0;
  const auto ti = trace(pi, ci), ti2 = trace(pi2, ci);
  for (int l = 0; l <= 3; ++l) CHECK(ti[l] == ti2[l]);
  CHECK(ti[4] != ti2[4]);

  ModelConfig cs = ci;
  cs.variant = Variant::kS;
  ModelParams ps = init_params(cs, 13);
  ModelParams ps2 = ps;
  ps2.at("shared.reaction.add1.k_u") *= 3.0;
  const auto ts = trace(ps, cs), ts2 = trace(ps2, cs);
  CHECK(ts[0] == ts2[0]);
  for (int l = 1; l <= 4; ++l) CHECK(ts[l] != ts2[l]);
}

TEST_CASE("forward: eval mode is deterministic and ignores dropout") {
  ModelConfig cfg = small_config(Variant::kI, ReactionMode::kAll, Integrator::kImex, 3);
  cfg.input_dropout = cfg.output_dropout = cfg.hidden_dropout = 0.5;
  const ModelParams p = init_params(cfg, 14);
  const NormalizedLaplacian lap = normalized_laplacian(k3());
  std::mt19937_64 rng(15);
  const Matrix x = random_matrix(3, 2, rng);
  const Matrix a = predict(p, x, lap, cfg);
  CHECK(predict(p, x, lap, cfg) == a);
  ModelConfig nodrop = cfg;
  nodrop.input_dropout = nodrop.output_dropout = nodrop.hidden_dropout = 0.0;
  CHECK(predict(p, x, lap, nodrop) == a);
  CHECK_THROWS_AS(predict(p, Matrix::Zero(4, 2), lap, cfg), ShapeError);
}

TEST_CASE("forward: mode=all with zeroed product branch equals additive_u0") {
  for (auto v : {Variant::kI, Variant::kS, Variant::kT}) {
    ModelConfig all = small_config(v, ReactionMode::kAll, Integrator::kImex, 3);
    ModelConfig add = all;
    add.reaction = ReactionMode::kAdditiveU0;
    ModelParams pa = init_params(all, 16);
    jitter_diffusion(pa, 2);
    ModelParams pu;
    for (auto& e : pa.entries()) {
      if (e.name.find(".add2.") != std::string::npos) {
        e.value.setZero();
      } else {
        pu.add(e.name, e.group, e.value);
      }
    }
    const NormalizedLaplacian lap = normalized_laplacian(k3());
    std::mt19937_64 rng(17);
    const Matrix x = random_matrix(3, 2, rng);
    CHECK(predict(pa, x, lap, all, 0.3) == predict(pu, x, lap, add, 0.3));
  }
}

TEST_CASE("forward: cross-entropy gradients per parameter group") {
  const std::vector<int> labels3{0, 1, 1};
  for (auto integ : {Integrator::kExplicit, Integrator::kImex}) {
    for (auto v : {Variant::kI, Variant::kS, Variant::kT}) {
      ModelConfig cfg = small_config(v, ReactionMode::kAll, integ, 3, 3);
      ModelParams p = init_params(cfg, 18);
      jitter_diffusion(p, 19);
      const NormalizedLaplacian lap = normalized_laplacian(k3());
      std::mt19937_64 rng(20);
      const Matrix x = random_matrix(3, 2, rng);
      const ModelGradientCheck gc = model_gradient_check(p, cfg, x, lap, labels3);
      INFO("variant " << to_string(v) << " integrator " << to_string(integ) << " worst "
                      << gc.worst);
      CHECK(gc.max_relative_error < 1e-4);
    }
  }
}
