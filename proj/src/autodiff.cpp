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

#include "rdgnn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rdgnn {

namespace {

std::string shape_str(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

void require_same_tape(const Var& a, const Var& b, const char* op) {
  if (!a.valid() || !b.valid() || &a.tape() != &b.tape()) {
    throw TapeError(std::string(op) + ": operands belong to different tapes");
  }
}

void require_same_shape(const Var& a, const Var& b, const char* op) {
  require_same_tape(a, b, op);
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.value()) +
                     " vs " + shape_str(b.value()));
  }
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Var Tape::variable(Matrix value) {
  Node node;
  node.grad = Matrix::Zero(value.rows(), value.cols());
  node.value = std::move(value);
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Matrix value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
  if (backward_done_) throw TapeError("record: tape has already been differentiated");
  if (check_finite_ && !value.allFinite()) {
    throw NumericError("non-finite value produced at tape node " +
                       std::to_string(nodes_.size()));
  }
  Node node;
  node.value = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape_ != this) throw TapeError("record: input from a different tape");
    node.requires_grad = node.requires_grad || nodes_[in.id_].requires_grad;
  }
  if (node.requires_grad) {
    node.grad = Matrix::Zero(node.value.rows(), node.value.cols());
    node.backward = std::move(backward);
  }
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::accumulate(const Var& v, const Matrix& g) {
  Node& node = nodes_[v.id_];
  if (!node.requires_grad) return;
  node.grad += g;
  node.touched = true;
}

const Matrix& Tape::grad(int id) const {
  const Node& node = nodes_[id];
  if (!node.requires_grad) {
    throw TapeError("grad requested for an untracked node " + std::to_string(id));
  }
  return node.grad;
}

void Tape::backward(const Var& loss) {
  if (loss.tape_ != this) throw TapeError("backward: loss belongs to another tape");
  if (backward_done_) throw TapeError("backward: called twice on one recording");
  if (loss.rows() != 1 || loss.cols() != 1) {
    throw TapeError("backward: loss must be 1x1, got " + shape_str(loss.value()));
  }
  backward_done_ = true;
  Node& root = nodes_[loss.id_];
  if (!root.requires_grad) return;
  root.grad(0, 0) = 1.0;
  root.touched = true;
  for (int id = loss.id_; id >= 0; --id) {
    Node& node = nodes_[id];
    if (!node.touched || !node.backward) continue;
    node.backward(node.grad, *this);
  }
}

// ---------------------------------------------------------------------------

Var matmul(const Var& a, const Var& b) {
  require_same_tape(a, b, "matmul");
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ " + shape_str(a.value()) + " * " +
                     shape_str(b.value()));
  }
  return a.tape().record(a.value() * b.value(), {a, b},
                         [a, b](const Matrix& g, Tape& t) {
                           if (a.requires_grad()) t.accumulate(a, g * b.value().transpose());
                           if (b.requires_grad()) t.accumulate(b, a.value().transpose() * g);
                         });
}

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  return a.tape().record(a.value() + b.value(), {a, b}, [a, b](const Matrix& g, Tape& t) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  return a.tape().record(a.value() - b.value(), {a, b}, [a, b](const Matrix& g, Tape& t) {
    t.accumulate(a, g);
    if (b.requires_grad()) t.accumulate(b, -g);
  });
}

Var hadamard(const Var& a, const Var& b) {
  require_same_shape(a, b, "hadamard");
  return a.tape().record(a.value().cwiseProduct(b.value()), {a, b},
                         [a, b](const Matrix& g, Tape& t) {
                           if (a.requires_grad()) t.accumulate(a, g.cwiseProduct(b.value()));
                           if (b.requires_grad()) t.accumulate(b, g.cwiseProduct(a.value()));
                         });
}

Var relu(const Var& x) {
  return x.tape().record(x.value().cwiseMax(0.0), {x}, [x](const Matrix& g, Tape& t) {
    t.accumulate(x, (x.value().array() > 0.0).select(g, 0.0));
  });
}

Var sine(const Var& x) {
  return x.tape().record(x.value().array().sin().matrix(), {x},
                         [x](const Matrix& g, Tape& t) {
                           t.accumulate(x, g.cwiseProduct(x.value().array().cos().matrix()));
                         });
}

Var scale(const Var& x, double alpha) {
  return x.tape().record(alpha * x.value(), {x},
                         [x, alpha](const Matrix& g, Tape& t) { t.accumulate(x, alpha * g); });
}

Var exp_neg_relu(const Var& x) {
  Matrix y = (-x.value().cwiseMax(0.0)).array().exp().matrix();
  return x.tape().record(y, {x}, [x, y](const Matrix& g, Tape& t) {
    t.accumulate(x, (x.value().array() > 0.0).select(-g.cwiseProduct(y), 0.0));
  });
}

Var broadcast_row(const Var& v, Index n) {
  if (n < 1) throw ShapeError("broadcast_row: row count must be at least 1");
  if (v.rows() != 1) {
    throw ShapeError("broadcast_row: expected a row vector, got " + shape_str(v.value()));
  }
  return v.tape().record(v.value().replicate(n, 1), {v}, [v](const Matrix& g, Tape& t) {
    t.accumulate(v, g.colwise().sum());
  });
}

Var scale_columns(const Var& u, const Var& s) {
  require_same_tape(u, s, "scale_columns");
  if (s.rows() != 1 || s.cols() != u.cols()) {
    throw ShapeError("scale_columns: scale " + shape_str(s.value()) + " does not match " +
                     shape_str(u.value()));
  }
  Matrix out = u.value() * s.value().row(0).asDiagonal();
  return u.tape().record(std::move(out), {u, s}, [u, s](const Matrix& g, Tape& t) {
    if (u.requires_grad()) t.accumulate(u, g * s.value().row(0).asDiagonal());
    if (s.requires_grad()) t.accumulate(s, g.cwiseProduct(u.value()).colwise().sum());
  });
}

Var sparse_apply(const NormalizedLaplacian& lap, const Var& u) {
  Matrix out = laplacian_apply(lap, u.value());
  const NormalizedLaplacian* l = &lap;
  return u.tape().record(std::move(out), {u}, [u, l](const Matrix& g, Tape& t) {
    t.accumulate(u, l->matrix() * g);
  });
}

Var sum(const Var& x) {
  Matrix out(1, 1);
  out(0, 0) = x.value().sum();
  return x.tape().record(std::move(out), {x}, [x](const Matrix& g, Tape& t) {
    t.accumulate(x, Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
  });
}

Var dropout(const Var& x, double p, std::mt19937_64& rng, bool training) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p must lie in [0, 1)");
  if (!training || p == 0.0) return x;
  std::bernoulli_distribution keep(1.0 - p);
  Matrix mask(x.rows(), x.cols());
  const double scale_kept = 1.0 / (1.0 - p);
  for (Index j = 0; j < mask.cols(); ++j) {
    for (Index i = 0; i < mask.rows(); ++i) mask(i, j) = keep(rng) ? scale_kept : 0.0;
  }
  Matrix out = x.value().cwiseProduct(mask);
  return x.tape().record(std::move(out), {x}, [x, mask](const Matrix& g, Tape& t) {
    t.accumulate(x, g.cwiseProduct(mask));
  });
}

// ---------------------------------------------------------------------------

double evaluate_objective(const ScalarObjective& f, const std::vector<Matrix>& params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Matrix& p : params) vars.push_back(tape.constant(p));
  const Var out = f(tape, vars);
  if (out.rows() != 1 || out.cols() != 1) throw TapeError("objective must be 1x1");
  const double value = out.value()(0, 0);
  if (!std::isfinite(value)) throw NumericError("objective is not finite");
  return value;
}

GradientCheck check_gradients(const ScalarObjective& f, const std::vector<Matrix>& params,
                              double step, double floor) {
  GradientCheck result;
  {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(params.size());
    for (const Matrix& p : params) vars.push_back(tape.variable(p));
    const Var loss = f(tape, vars);
    if (!std::isfinite(loss.value()(0, 0))) throw NumericError("objective is not finite");
    tape.backward(loss);
    for (const Var& v : vars) result.analytic.push_back(v.grad());
  }
  std::vector<Matrix> probe = params;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix numeric(params[k].rows(), params[k].cols());
    for (Index j = 0; j < params[k].cols(); ++j) {
      for (Index i = 0; i < params[k].rows(); ++i) {
        const double base = params[k](i, j);
        probe[k](i, j) = base + step;
        const double up = evaluate_objective(f, probe);
        probe[k](i, j) = base - step;
        const double down = evaluate_objective(f, probe);
        probe[k](i, j) = base;
        numeric(i, j) = (up - down) / (2.0 * step);
        const double a = result.analytic[k](i, j);
        const double n = numeric(i, j);
        const double err = std::abs(a - n) / std::max(floor, std::abs(a) + std::abs(n));
        result.max_relative_error = std::max(result.max_relative_error, err);
      }
    }
    result.numeric.push_back(std::move(numeric));
  }
  return result;
}

}  // namespace rdgnn
