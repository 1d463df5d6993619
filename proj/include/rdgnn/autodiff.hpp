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

// Define-by-run reverse-mode differentiation over dense 2-D double matrices.
//
// A Tape records every operation applied to its variables. Each op stores its
// output value and a closure that maps the upstream gradient to gradients of
// its inputs. Node ids are assigned in creation order, so the tape is always
// topologically sorted and backward() is a single reverse sweep.
//
//   Tape tape;
//   Var w = tape.variable(W);
//   Var loss = sum(hadamard(w, w));
//   tape.backward(loss);      // w.grad() == 2 * W
//
// A tape supports exactly one backward pass. Tapes are not thread-safe; use
// one tape per worker.

#ifndef RDGNN_AUTODIFF_HPP_
#define RDGNN_AUTODIFF_HPP_

#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rdgnn/errors.hpp"
#include "rdgnn/graph.hpp"

namespace rdgnn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  const Matrix& grad() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  bool requires_grad() const;

  Tape& tape() const { return *tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  // Receives the gradient flowing into the op's output.
  using Backward = std::function<void(const Matrix& upstream, Tape& tape)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Tracked leaf; its grad starts at zero.
  Var variable(Matrix value);
  // Untracked input.
  Var constant(Matrix value);
  // Records an op output. The node requires grad iff any input does; the
  // backward closure is dropped otherwise.
  Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward);

  // Adds `g` into the gradient of `v`. No-op for untracked nodes.
  void accumulate(const Var& v, const Matrix& g);

  void backward(const Var& loss);

  // When enabled, record() throws NumericError on NaN/Inf outputs.
  void set_check_finite(bool on) { check_finite_ = on; }
  bool check_finite() const { return check_finite_; }

  std::size_t size() const { return nodes_.size(); }
  bool backward_done() const { return backward_done_; }

  const Matrix& value(int id) const { return nodes_[id].value; }
  const Matrix& grad(int id) const;
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    bool touched = false;
    Backward backward;
  };

  std::vector<Node> nodes_;
  bool check_finite_ = false;
  bool backward_done_ = false;
};

// ---------------------------------------------------------------------------
// Primitives. Binary ops require equal shapes and throw ShapeError otherwise.

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var hadamard(const Var& a, const Var& b);
Var relu(const Var& x);
Var sine(const Var& x);
Var scale(const Var& x, double alpha);
// exp(-relu(x)).
Var exp_neg_relu(const Var& x);
// n copies of the 1 x c row `v`.
Var broadcast_row(const Var& v, Index n);
// U diag(s) for a 1 x c row `s`.
Var scale_columns(const Var& u, const Var& s);
// L^ U; the adjoint reuses L^ since it is symmetric.
Var sparse_apply(const NormalizedLaplacian& lap, const Var& u);
// 1 x 1 sum of all entries.
Var sum(const Var& x);
// Inverted dropout: keeps entries with probability 1 - p and rescales by
// 1 / (1 - p). Identity when !training or p == 0.
Var dropout(const Var& x, double p, std::mt19937_64& rng, bool training);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(double alpha, const Var& x) { return scale(x, alpha); }

// ---------------------------------------------------------------------------
// Finite-difference verification.

// Builds the scalar objective on `tape` from one Var per parameter block.
using ScalarObjective = std::function<Var(Tape&, std::span<const Var>)>;

struct GradientCheck {
  double max_relative_error = 0.0;
  std::vector<Matrix> analytic;
  std::vector<Matrix> numeric;
};

// Compares tape gradients with central differences, coordinate by
// coordinate. Per-coordinate error is |a - n| / max(floor, |a| + |n|).
GradientCheck check_gradients(const ScalarObjective& f,
                              const std::vector<Matrix>& params,
                              double step = 1e-6, double floor = 1e-12);

inline double finite_difference_check(const ScalarObjective& f,
                                      const std::vector<Matrix>& params,
                                      double step = 1e-6) {
  return check_gradients(f, params, step).max_relative_error;
}

// Evaluates the objective without tracking gradients.
double evaluate_objective(const ScalarObjective& f, const std::vector<Matrix>& params);

}  // namespace rdgnn

#endif  // RDGNN_AUTODIFF_HPP_
