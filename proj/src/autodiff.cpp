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

#include "rlcalib/autodiff.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace rlcalib::ad
{

namespace
{

void require(bool ok, const char * op, const char * what)
{
  if (!ok) {
    throw Error(ErrorKind::InvalidArgument, std::string(op) + ": " + what);
  }
}

void same_shape(const Var & a, const Var & b, const char * op)
{
  require(a.tape() == b.tape(), op, "operands live on different tapes");
  require(a.rows() == b.rows() && a.cols() == b.cols(), op, "shape mismatch");
}

Tape & tape_of(const Var & a)
{
  require(a.valid(), "op", "invalid variable");
  return *a.tape();
}

}  // namespace

const Matrix & Var::value() const { return tape_->value(*this); }
const Matrix & Var::grad() const { return tape_->grad(*this); }
bool Var::requires_grad() const { return tape_->needs_grad(*this); }

double Var::scalar() const
{
  const Matrix & v = value();
  require(v.rows() == 1 && v.cols() == 1, "scalar", "variable is not 1x1");
  return v(0, 0);
}

Var Tape::make(Node node)
{
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::leaf(Matrix value, bool requires_grad)
{
  if (!value.allFinite()) {
    throw Error(ErrorKind::PoisonedValue, "leaf: non-finite value");
  }
  Matrix grad = requires_grad ? Matrix::Zero(value.rows(), value.cols()) : Matrix();
  return make(Node{"leaf", std::move(value), std::move(grad), requires_grad, true, {}});
}

Var Tape::record(const char * op, Matrix value, const std::vector<Var> & parents, BackwardFn fn)
{
  if (!value.allFinite()) {
    throw Error(ErrorKind::PoisonedValue, std::string(op) + ": produced NaN or Inf");
  }
  bool rg = false;
  for (const Var & p : parents) {
    rg = rg || nodes_[p.id()].requires_grad;
  }
  return make(Node{op, std::move(value), Matrix(), rg, false, rg ? std::move(fn) : BackwardFn{}});
}

const Matrix & Tape::grad(const Var & v) const
{
  const Node & n = nodes_[v.id()];
  if (!n.requires_grad) {
    throw Error(ErrorKind::InvalidArgument, "grad: variable does not require grad");
  }
  return n.grad;
}

void Tape::accumulate(const Var & target, const Matrix & contribution)
{
  Node & n = nodes_[target.id()];
  if (!n.requires_grad) {
    return;
  }
  n.grad += contribution;
}

void Tape::zero_grad()
{
  for (Node & n : nodes_) {
    if (n.requires_grad) {
      n.grad.setZero(n.value.rows(), n.value.cols());
    }
  }
}

void Tape::backward(const Var & loss)
{
  require(loss.tape() == this, "backward", "loss is not on this tape");
  const Node & root = nodes_[loss.id()];
  require(root.value.rows() == 1 && root.value.cols() == 1, "backward", "loss must be a scalar");
  if (!root.requires_grad) {
    return;
  }
  for (std::size_t i = 0; i <= loss.id(); ++i) {
    Node & n = nodes_[i];
    if (n.requires_grad && (!n.is_leaf || n.grad.size() == 0)) {
      n.grad.setZero(n.value.rows(), n.value.cols());
    }
  }
  nodes_[loss.id()].grad(0, 0) += 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node & n = nodes_[i];
    if (!n.is_leaf && n.backward) {
      n.backward(*this, n.grad);
    }
  }
}

// ---------------------------------------------------------------------------

Var add(const Var & a, const Var & b)
{
  same_shape(a, b, "add");
  return tape_of(a).record("add", a.value() + b.value(), {a, b}, [a, b](Tape & t, const Matrix & g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(const Var & a, const Var & b)
{
  same_shape(a, b, "sub");
  return tape_of(a).record("sub", a.value() - b.value(), {a, b}, [a, b](Tape & t, const Matrix & g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Var mul(const Var & a, const Var & b)
{
  same_shape(a, b, "mul");
  return tape_of(a).record(
    "mul", a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape & t, const Matrix & g) {
      if (t.needs_grad(a)) t.accumulate(a, g.cwiseProduct(t.value(b)));
      if (t.needs_grad(b)) t.accumulate(b, g.cwiseProduct(t.value(a)));
    });
}

Var neg(const Var & a) { return scale(a, -1.0); }

Var scale(const Var & a, double s)
{
  return tape_of(a).record("scale", a.value() * s, {a}, [a, s](Tape & t, const Matrix & g) {
    t.accumulate(a, g * s);
  });
}

Var add_scalar(const Var & a, double s)
{
  return tape_of(a).record("add_scalar", (a.value().array() + s).matrix(), {a},
                           [a](Tape & t, const Matrix & g) { t.accumulate(a, g); });
}

Var add_row(const Var & a, const Var & row)
{
  require(row.rows() == 1 && row.cols() == a.cols(), "add_row", "row shape mismatch");
  Matrix v = a.value().rowwise() + row.value().row(0);
  return tape_of(a).record("add_row", std::move(v), {a, row}, [a, row](Tape & t, const Matrix & g) {
    t.accumulate(a, g);
    if (t.needs_grad(row)) t.accumulate(row, g.colwise().sum());
  });
}

Var sub_row(const Var & a, const Var & row)
{
  require(row.rows() == 1 && row.cols() == a.cols(), "sub_row", "row shape mismatch");
  Matrix v = a.value().rowwise() - row.value().row(0);
  return tape_of(a).record("sub_row", std::move(v), {a, row}, [a, row](Tape & t, const Matrix & g) {
    t.accumulate(a, g);
    if (t.needs_grad(row)) t.accumulate(row, -g.colwise().sum());
  });
}

Var scale_cols(const Var & a, const RowVector & s)
{
  require(s.size() == a.cols(), "scale_cols", "scale length mismatch");
  Matrix v = a.value().array().rowwise() * s.array();
  return tape_of(a).record("scale_cols", std::move(v), {a}, [a, s](Tape & t, const Matrix & g) {
    t.accumulate(a, (g.array().rowwise() * s.array()).matrix());
  });
}

Var matmul(const Var & a, const Var & b)
{
  require(a.tape() == b.tape(), "matmul", "operands live on different tapes");
  require(a.cols() == b.rows(), "matmul", "inner dimension mismatch");
  Matrix v(a.rows(), b.cols());
  v.noalias() = a.value() * b.value();
  return tape_of(a).record("matmul", std::move(v), {a, b}, [a, b](Tape & t, const Matrix & g) {
    if (t.needs_grad(a)) {
      Matrix ga(g.rows(), t.value(b).rows());
      ga.noalias() = g * t.value(b).transpose();
      t.accumulate(a, ga);
    }
    if (t.needs_grad(b)) {
      Matrix gb(t.value(a).cols(), g.cols());
      gb.noalias() = t.value(a).transpose() * g;
      t.accumulate(b, gb);
    }
  });
}

Var transpose(const Var & a)
{
  return tape_of(a).record("transpose", a.value().transpose(), {a}, [a](Tape & t, const Matrix & g) {
    t.accumulate(a, g.transpose());
  });
}

Var relu(const Var & a)
{
  Matrix v = a.value().cwiseMax(0.0);
  return tape_of(a).record("relu", std::move(v), {a}, [a](Tape & t, const Matrix & g) {
    t.accumulate(a, (t.value(a).array() > 0.0).select(g, 0.0).matrix());
  });
}

Var max_const(const Var & a, double c)
{
  Matrix v = a.value().cwiseMax(c);
  return tape_of(a).record("max_const", std::move(v), {a}, [a, c](Tape & t, const Matrix & g) {
    t.accumulate(a, (t.value(a).array() > c).select(g, 0.0).matrix());
  });
}

Var abs(const Var & a)
{
  return tape_of(a).record("abs", a.value().cwiseAbs(), {a}, [a](Tape & t, const Matrix & g) {
    const auto & x = t.value(a).array();
    Matrix sign = ((x > 0.0).cast<double>() - (x < 0.0).cast<double>()).matrix();
    t.accumulate(a, g.cwiseProduct(sign));
  });
}

Var sin(const Var & a)
{
  return tape_of(a).record("sin", a.value().array().sin().matrix(), {a}, [a](Tape & t, const Matrix & g) {
    t.accumulate(a, g.cwiseProduct(t.value(a).array().cos().matrix()));
  });
}

Var cos(const Var & a)
{
  return tape_of(a).record("cos", a.value().array().cos().matrix(), {a}, [a](Tape & t, const Matrix & g) {
    t.accumulate(a, -g.cwiseProduct(t.value(a).array().sin().matrix()));
  });
}

Var sqrt(const Var & a)
{
  if ((a.value().array() < 0.0).any()) {
    throw Error(ErrorKind::PoisonedValue, "sqrt: negative input");
  }
  Matrix v = a.value().array().sqrt().matrix();
  const Var out = tape_of(a).record("sqrt", v, {a}, [a, v](Tape & t, const Matrix & g) {
    t.accumulate(a, (v.array() > 0.0).select(g.array() / (2.0 * v.array()), 0.0).matrix());
  });
  return out;
}

Var atan2(const Var & y, const Var & x)
{
  same_shape(y, x, "atan2");
  Matrix v = y.value().binaryExpr(x.value(), [](double yy, double xx) { return std::atan2(yy, xx); });
  return tape_of(y).record("atan2", std::move(v), {y, x}, [y, x](Tape & t, const Matrix & g) {
    const auto & yy = t.value(y).array();
    const auto & xx = t.value(x).array();
    const Eigen::ArrayXXd r2 = yy.square() + xx.square();
    const Eigen::ArrayXXd safe = (r2 > 0.0).select(r2, 1.0);
    if (t.needs_grad(y)) t.accumulate(y, (r2 > 0.0).select(g.array() * xx / safe, 0.0).matrix());
    if (t.needs_grad(x)) t.accumulate(x, (r2 > 0.0).select(-g.array() * yy / safe, 0.0).matrix());
  });
}

Var row_norm(const Var & a)
{
  Matrix v = a.value().rowwise().norm();
  return tape_of(a).record("row_norm", v, {a}, [a, v](Tape & t, const Matrix & g) {
    const Matrix & x = t.value(a);
    Matrix ga = Matrix::Zero(x.rows(), x.cols());
    for (Index i = 0; i < x.rows(); ++i) {
      if (v(i, 0) > 0.0) {
        ga.row(i) = x.row(i) * (g(i, 0) / v(i, 0));
      }
    }
    t.accumulate(a, ga);
  });
}

Var row_dot(const Var & a, const Var & b)
{
  same_shape(a, b, "row_dot");
  Matrix v = a.value().cwiseProduct(b.value()).rowwise().sum();
  return tape_of(a).record("row_dot", std::move(v), {a, b}, [a, b](Tape & t, const Matrix & g) {
    if (t.needs_grad(a)) t.accumulate(a, (t.value(b).array().colwise() * g.col(0).array()).matrix());
    if (t.needs_grad(b)) t.accumulate(b, (t.value(a).array().colwise() * g.col(0).array()).matrix());
  });
}

Var scale_rows(const Var & s, const Var & a)
{
  require(s.tape() == a.tape(), "scale_rows", "operands live on different tapes");
  require(s.cols() == 1 && s.rows() == a.rows(), "scale_rows", "scale must be Nx1");
  Matrix v = (a.value().array().colwise() * s.value().col(0).array()).matrix();
  return tape_of(a).record("scale_rows", std::move(v), {s, a}, [s, a](Tape & t, const Matrix & g) {
    if (t.needs_grad(s)) t.accumulate(s, g.cwiseProduct(t.value(a)).rowwise().sum());
    if (t.needs_grad(a)) t.accumulate(a, (g.array().colwise() * t.value(s).col(0).array()).matrix());
  });
}

Var per_row_linear(const Var & a, std::shared_ptr<const std::vector<Eigen::Matrix3d>> mats)
{
  require(mats != nullptr && a.cols() == 3 && static_cast<Index>(mats->size()) == a.rows(),
          "per_row_linear", "expects Nx3 input and N matrices");
  const Matrix & x = a.value();
  Matrix v(x.rows(), 3);
  for (Index i = 0; i < x.rows(); ++i) {
    v.row(i) = ((*mats)[static_cast<std::size_t>(i)] * x.row(i).transpose()).transpose();
  }
  return tape_of(a).record("per_row_linear", std::move(v), {a}, [a, mats](Tape & t, const Matrix & g) {
    Matrix ga(g.rows(), 3);
    for (Index i = 0; i < g.rows(); ++i) {
      ga.row(i) = ((*mats)[static_cast<std::size_t>(i)].transpose() * g.row(i).transpose()).transpose();
    }
    t.accumulate(a, ga);
  });
}

Var sum(const Var & a)
{
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  return tape_of(a).record("sum", std::move(v), {a}, [a](Tape & t, const Matrix & g) {
    t.accumulate(a, Matrix::Constant(t.value(a).rows(), t.value(a).cols(), g(0, 0)));
  });
}

Var mean(const Var & a)
{
  require(a.value().size() > 0, "mean", "empty input");
  const double n = static_cast<double>(a.value().size());
  Matrix v(1, 1);
  v(0, 0) = a.value().sum() / n;
  return tape_of(a).record("mean", std::move(v), {a}, [a, n](Tape & t, const Matrix & g) {
    t.accumulate(a, Matrix::Constant(t.value(a).rows(), t.value(a).cols(), g(0, 0) / n));
  });
}

Var col(const Var & a, Index j)
{
  require(j >= 0 && j < a.cols(), "col", "column out of range");
  return tape_of(a).record("col", a.value().col(j), {a}, [a, j](Tape & t, const Matrix & g) {
    Matrix ga = Matrix::Zero(t.value(a).rows(), t.value(a).cols());
    ga.col(j) = g.col(0);
    t.accumulate(a, ga);
  });
}

Var hconcat(const std::vector<Var> & parts)
{
  require(!parts.empty(), "hconcat", "no inputs");
  const Index rows = parts.front().rows();
  Index cols = 0;
  for (const Var & p : parts) {
    require(p.rows() == rows && p.tape() == parts.front().tape(), "hconcat", "row count mismatch");
    cols += p.cols();
  }
  Matrix v(rows, cols);
  Index off = 0;
  for (const Var & p : parts) {
    v.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  return tape_of(parts.front()).record("hconcat", std::move(v), parts, [parts](Tape & t, const Matrix & g) {
    Index o = 0;
    for (const Var & p : parts) {
      const Index c = t.value(p).cols();
      if (t.needs_grad(p)) t.accumulate(p, g.middleCols(o, c));
      o += c;
    }
  });
}

Var gather_cols(const Var & a, const std::vector<Index> & idx)
{
  const Matrix & x = a.value();
  Matrix v(x.rows(), static_cast<Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    require(idx[k] >= 0 && idx[k] < x.cols(), "gather_cols", "index out of range");
    v.col(static_cast<Index>(k)) = x.col(idx[k]);
  }
  return tape_of(a).record("gather_cols", std::move(v), {a}, [a, idx](Tape & t, const Matrix & g) {
    Matrix ga = Matrix::Zero(t.value(a).rows(), t.value(a).cols());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      ga.col(idx[k]) += g.col(static_cast<Index>(k));
    }
    t.accumulate(a, ga);
  });
}

// ---------------------------------------------------------------------------

std::vector<Matrix> gradient(const Builder & f, const std::vector<Matrix> & point)
{
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(point.size());
  for (const Matrix & p : point) {
    leaves.push_back(tape.leaf(p, true));
  }
  const Var loss = f(tape, leaves);
  tape.backward(loss);
  std::vector<Matrix> out;
  out.reserve(leaves.size());
  for (const Var & l : leaves) {
    out.push_back(l.grad());
  }
  return out;
}

namespace
{

double evaluate(const Builder & f, const std::vector<Matrix> & point)
{
  Tape tape;
  std::vector<Var> leaves;
  leaves.reserve(point.size());
  for (const Matrix & p : point) {
    leaves.push_back(tape.constant(p));
  }
  return f(tape, leaves).scalar();
}

}  // namespace

GradCheckResult grad_check(const Builder & f, const std::vector<Matrix> & point, double h)
{
  const std::vector<Matrix> analytic = gradient(f, point);
  GradCheckResult res;
  std::vector<Matrix> probe = point;
  for (std::size_t l = 0; l < point.size(); ++l) {
    for (Index k = 0; k < point[l].size(); ++k) {
      const double x0 = point[l](k);
      probe[l](k) = x0 + h;
      const double fp = evaluate(f, probe);
      probe[l](k) = x0 - h;
      const double fm = evaluate(f, probe);
      probe[l](k) = x0;
      const double numeric = (fp - fm) / (2.0 * h);
      const double a = analytic[l](k);
      const double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
      ++res.coordinates;
      if (err > res.max_rel_error || res.coordinates == 1) {
        res.max_rel_error = std::max(res.max_rel_error, err);
        res.worst_leaf = l;
        res.worst_index = k;
        res.analytic = a;
        res.numeric = numeric;
      }
    }
  }
  return res;
}

}  // namespace rlcalib::ad
