// Copyright 2026 The rlcalib Authors
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

#pragma once

// Reverse-mode differentiation over rank-2 double tensors.
//
// A Tape records every primitive as it is evaluated. Values are computed
// eagerly and exactly as the plain expression would compute them; backward()
// replays the recorded rules in reverse order and accumulates into the grad
// buffers of leaves created with requires_grad. Nodes whose inputs carry no
// gradient are recorded without a backward rule.

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rlcalib/error.hpp"

namespace rlcalib::ad
{

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
class Var
{
public:
  Var() = default;

  const Matrix & value() const;
  const Matrix & grad() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  double scalar() const;
  bool requires_grad() const;

  Tape * tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

private:
  friend class Tape;
  Var(Tape * tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape * tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape
{
public:
  /// Receives the gradient flowing into the node and pushes contributions
  /// into its parents through Tape::accumulate.
  using BackwardFn = std::function<void(Tape &, const Matrix & grad_out)>;

  Tape() = default;
  Tape(const Tape &) = delete;
  Tape & operator=(const Tape &) = delete;

  Var leaf(Matrix value, bool requires_grad);
  Var constant(Matrix value) { return leaf(std::move(value), false); }

  /// Record a primitive. Throws PoisonedValue if `value` holds NaN/Inf.
  Var record(const char * op, Matrix value, const std::vector<Var> & parents, BackwardFn fn);

  /// Gradients of a 1x1 loss. Leaf gradients accumulate across calls until
  /// zero_grad(); interior buffers are reset on every call.
  void backward(const Var & loss);
  void zero_grad();

  /// Add `contribution` to the gradient of `target` if it needs one.
  void accumulate(const Var & target, const Matrix & contribution);
  bool needs_grad(const Var & v) const { return nodes_[v.id()].requires_grad; }

  const Matrix & value(const Var & v) const { return nodes_[v.id()].value; }
  const Matrix & grad(const Var & v) const;

  std::size_t size() const { return nodes_.size(); }

private:
  struct Node
  {
    const char * op;
    Matrix value;
    Matrix grad;
    bool requires_grad;
    bool is_leaf;
    BackwardFn backward;
  };

  Var make(Node node);

  std::vector<Node> nodes_;
};

// Elementwise / structural primitives. Shapes must match exactly unless the
// name says otherwise (add_row broadcasts a 1xC row over every row).
Var add(const Var & a, const Var & b);
Var sub(const Var & a, const Var & b);
Var mul(const Var & a, const Var & b);
Var neg(const Var & a);
Var scale(const Var & a, double s);
Var add_scalar(const Var & a, double s);
Var add_row(const Var & a, const Var & row);
Var sub_row(const Var & a, const Var & row);
Var scale_cols(const Var & a, const RowVector & s);
Var matmul(const Var & a, const Var & b);
Var transpose(const Var & a);

/// max(0, x); subgradient 0 at 0.
Var relu(const Var & a);
/// max(x, c) for a constant c; subgradient 0 where x == c.
Var max_const(const Var & a, double c);
/// |x|; subgradient 0 at 0.
Var abs(const Var & a);
Var sin(const Var & a);
Var cos(const Var & a);
/// sqrt(x); derivative taken as 0 at x == 0.
Var sqrt(const Var & a);
/// Elementwise atan2(y, x); derivative taken as 0 at the origin.
Var atan2(const Var & y, const Var & x);

/// Per-row Euclidean norm, NxC -> Nx1. Gradient 0 for zero rows.
Var row_norm(const Var & a);
/// Per-row dot product, NxC, NxC -> Nx1.
Var row_dot(const Var & a, const Var & b);
/// Row i of `a` scaled by s(i), Nx1, NxC -> NxC.
Var scale_rows(const Var & s, const Var & a);
/// Row i of `a` (Nx3) mapped through mats[i]: out_i = mats[i] * a_i.
Var per_row_linear(const Var & a, std::shared_ptr<const std::vector<Eigen::Matrix3d>> mats);

Var sum(const Var & a);
Var mean(const Var & a);
Var col(const Var & a, Index j);
Var hconcat(const std::vector<Var> & parts);
Var gather_cols(const Var & a, const std::vector<Index> & idx);

inline Var operator+(const Var & a, const Var & b) { return add(a, b); }
inline Var operator-(const Var & a, const Var & b) { return sub(a, b); }
inline Var operator*(double s, const Var & a) { return scale(a, s); }

/// Builds a scalar expression from leaves that mirror `point`.
using Builder = std::function<Var(Tape &, const std::vector<Var> & leaves)>;

struct GradCheckResult
{
  double max_rel_error = 0.0;
  std::size_t worst_leaf = 0;
  Index worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

/// Max over coordinates of |analytic - central difference| / max(1, |analytic|).
GradCheckResult grad_check(const Builder & f, const std::vector<Matrix> & point, double h = 1e-5);

/// Analytic gradient of the builder at `point`, one matrix per leaf.
std::vector<Matrix> gradient(const Builder & f, const std::vector<Matrix> & point);

}  // namespace rlcalib::ad
