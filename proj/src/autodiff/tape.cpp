#include "pinnebm/autodiff/tape.hpp"

#include "pinnebm/errors.hpp"

#include <string>

namespace pinnebm::ad {

namespace {

bool broadcastable(Index from, Index to) { return from == to || from == 1; }

Matrix expand(const Matrix& m, Index rows, Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  return m.replicate(rows / m.rows(), cols / m.cols());
}

// Sums a broadcast adjoint back down to the operand's shape.
Matrix reduce_to(const Matrix& g, Index rows, Index cols) {
  if (g.rows() == rows && g.cols() == cols) return g;
  if (rows == 1 && cols == 1) return Matrix::Constant(1, 1, g.sum());
  if (cols == 1) return g.rowwise().sum();
  return g.colwise().sum();
}

bool is_binary(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::MatMul:
    case Op::VStack:
      return true;
    default:
      return false;
  }
}

std::string describe(int id, Op op) {
  return "node " + std::to_string(id) + " (" + std::string(op_name(op)) + ")";
}

}  // namespace

std::string_view op_name(Op op) {
  switch (op) {
    case Op::Constant: return "constant";
    case Op::Parameter: return "parameter";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Neg: return "neg";
    case Op::Scale: return "scale";
    case Op::Shift: return "shift";
    case Op::MatMul: return "matmul";
    case Op::Tanh: return "tanh";
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Square: return "square";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::Row: return "row";
    case Op::Clamp: return "clamp";
    case Op::VStack: return "vstack";
  }
  return "unknown";
}

const Matrix& Var::value() const {
  if (!valid()) throw StructuralError("access through an unbound Var");
  return tape_->node(id_).value;
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) {
    throw StructuralError("scalar() on a " + std::to_string(v.rows()) + "x" +
                          std::to_string(v.cols()) + " node");
  }
  return v(0, 0);
}

Node& Tape::next_slot() {
  if (used_ == nodes_.size()) nodes_.emplace_back();
  Node& n = nodes_[used_];
  n.lhs = -1;
  n.rhs = -1;
  n.s = 0.0;
  n.s2 = 0.0;
  n.aux = 0;
  return n;
}

Var Tape::constant(const Matrix& value) {
  Node& n = next_slot();
  n.op = Op::Constant;
  n.value = value;
  return {this, static_cast<int>(used_++)};
}

Var Tape::constant(double value) { return constant(Matrix::Constant(1, 1, value)); }

Var Tape::parameter(const Matrix& value, Index offset) {
  if (offset < 0) throw StructuralError("negative parameter offset");
  Node& n = next_slot();
  n.op = Op::Parameter;
  n.aux = offset;
  n.value = value;
  extent_ = std::max(extent_, offset + n.value.size());
  const int id = static_cast<int>(used_++);
  params_.push_back(id);
  return {this, id};
}

Var Tape::push(Op op, int lhs, int rhs, double s, double s2, Index aux) {
  const int id = static_cast<int>(used_);
  if (lhs < 0 || lhs >= id || (is_binary(op) && (rhs < 0 || rhs >= id))) {
    throw StructuralError("dangling operand for " + describe(id, op));
  }
  Node& n = next_slot();
  n.op = op;
  n.lhs = lhs;
  n.rhs = rhs;
  n.s = s;
  n.s2 = s2;
  n.aux = aux;
  evaluate(n);
  ++used_;
  return {this, id};
}

void Tape::evaluate(Node& n) const {
  if (n.op == Op::Constant || n.op == Op::Parameter) return;
  const Matrix& a = nodes_[static_cast<std::size_t>(n.lhs)].value;
  switch (n.op) {
    case Op::Constant:
    case Op::Parameter:
      return;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      const Matrix& b = nodes_[static_cast<std::size_t>(n.rhs)].value;
      const Index rows = std::max(a.rows(), b.rows());
      const Index cols = std::max(a.cols(), b.cols());
      if (!broadcastable(a.rows(), rows) || !broadcastable(a.cols(), cols) ||
          !broadcastable(b.rows(), rows) || !broadcastable(b.cols(), cols)) {
        throw StructuralError("shape mismatch in " + std::string(op_name(n.op)) + ": " +
                              std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                              " vs " + std::to_string(b.rows()) + "x" +
                              std::to_string(b.cols()));
      }
      if (a.rows() == b.rows() && a.cols() == b.cols()) {
        switch (n.op) {
          case Op::Add: n.value = a + b; break;
          case Op::Sub: n.value = a - b; break;
          case Op::Mul: n.value = a.cwiseProduct(b); break;
          default: n.value = a.cwiseQuotient(b); break;
        }
      } else if (b.size() == 1) {
        const double s = b(0, 0);
        switch (n.op) {
          case Op::Add: n.value = a.array() + s; break;
          case Op::Sub: n.value = a.array() - s; break;
          case Op::Mul: n.value = a * s; break;
          default: n.value = a / s; break;
        }
      } else {
        const Matrix ea = expand(a, rows, cols);
        const Matrix eb = expand(b, rows, cols);
        switch (n.op) {
          case Op::Add: n.value = ea + eb; break;
          case Op::Sub: n.value = ea - eb; break;
          case Op::Mul: n.value = ea.cwiseProduct(eb); break;
          default: n.value = ea.cwiseQuotient(eb); break;
        }
      }
      return;
    }
    case Op::MatMul: {
      const Matrix& b = nodes_[static_cast<std::size_t>(n.rhs)].value;
      if (a.cols() != b.rows()) {
        throw StructuralError("matmul inner dimensions " + std::to_string(a.cols()) +
                              " vs " + std::to_string(b.rows()));
      }
      n.value.noalias() = a * b;
      return;
    }
    case Op::Neg: n.value = -a; return;
    case Op::Scale: n.value = a * n.s; return;
    case Op::Shift: n.value = a.array() + n.s; return;
    // 1 - 2/(e^{2a} + 1): vectorizes through exp, saturates cleanly at +-1.
    case Op::Tanh: n.value = 1.0 - 2.0 / ((2.0 * a.array()).exp() + 1.0); return;
    case Op::Exp: n.value = a.array().exp(); return;
    case Op::Log: n.value = a.array().log(); return;
    case Op::Sin: n.value = a.array().sin(); return;
    case Op::Cos: n.value = a.array().cos(); return;
    case Op::Square: n.value = a.array().square(); return;
    case Op::Sum: n.value = Matrix::Constant(1, 1, a.sum()); return;
    case Op::Mean: n.value = Matrix::Constant(1, 1, a.mean()); return;
    case Op::Row:
      if (n.aux < 0 || n.aux >= a.rows()) {
        throw StructuralError("row index " + std::to_string(n.aux) + " out of range");
      }
      n.value = a.row(n.aux);
      return;
    case Op::Clamp: n.value = a.cwiseMax(n.s).cwiseMin(n.s2); return;
    case Op::VStack: {
      const Matrix& b = nodes_[static_cast<std::size_t>(n.rhs)].value;
      if (a.cols() != b.cols()) throw StructuralError("vstack column mismatch");
      n.value.resize(a.rows() + b.rows(), a.cols());
      n.value << a, b;
      return;
    }
  }
}

void Tape::set_value(Var leaf, const Matrix& value) {
  if (leaf.tape() != this || leaf.id() < 0 || static_cast<std::size_t>(leaf.id()) >= used_) {
    throw StructuralError("set_value on a node that is not on this tape");
  }
  Node& n = nodes_[static_cast<std::size_t>(leaf.id())];
  if (n.op != Op::Constant && n.op != Op::Parameter) {
    throw StructuralError("set_value on non-leaf " + describe(leaf.id(), n.op));
  }
  if (n.value.rows() != value.rows() || n.value.cols() != value.cols()) {
    throw StructuralError("set_value changes the shape of " + describe(leaf.id(), n.op));
  }
  n.value = value;
}

void Tape::replay() {
  for (std::size_t i = 0; i < used_; ++i) evaluate(nodes_[i]);
}

void Tape::clear() {
  used_ = 0;
  params_.clear();
  extent_ = 0;
}

Vector Tape::backward(Var output) const { return backward_impl(output, false); }

Vector Tape::backward_impl(Var output, bool check_each) const {
  if (output.tape() != this || output.id() < 0 ||
      static_cast<std::size_t>(output.id()) >= used_) {
    throw StructuralError("backward from a node that is not on this tape");
  }
  const int out = output.id();
  if (nodes_[static_cast<std::size_t>(out)].value.size() != 1) {
    throw StructuralError("backward requires a scalar output, got " + describe(out, nodes_[static_cast<std::size_t>(out)].op));
  }

  Vector grad = Vector::Zero(extent_);
  // Adjoint buffers persist across calls so repeated same-shape sweeps do not reallocate.
  if (adj_.size() < static_cast<std::size_t>(out) + 1) adj_.resize(static_cast<std::size_t>(out) + 1);
  live_.assign(static_cast<std::size_t>(out) + 1, 0);
  adj_[static_cast<std::size_t>(out)].setOnes(1, 1);
  live_[static_cast<std::size_t>(out)] = 1;

  auto accumulate = [&](int id, const auto& g) {
    const auto i = static_cast<std::size_t>(id);
    if (live_[i]) {
      adj_[i] += g;
    } else {
      adj_[i] = g;
      live_[i] = 1;
    }
  };

  for (int id = out; id >= 0; --id) {
    if (!live_[static_cast<std::size_t>(id)]) continue;
    const Matrix& g = adj_[static_cast<std::size_t>(id)];
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (check_each && !g.allFinite()) throw NumericError("non-finite adjoint at " + describe(id, n.op));
    if (n.op == Op::Constant) continue;
    if (n.op == Op::Parameter) {
      grad.segment(n.aux, g.size()) += Eigen::Map<const Vector>(g.data(), g.size());
      continue;
    }
    if (n.lhs < 0 || n.lhs >= id || (is_binary(n.op) && (n.rhs < 0 || n.rhs >= id))) {
      throw StructuralError("dangling operand at " + describe(id, n.op));
    }
    const Matrix& a = nodes_[static_cast<std::size_t>(n.lhs)].value;
    switch (n.op) {
      case Op::Add:
      case Op::Sub: {
        const Matrix& b = nodes_[static_cast<std::size_t>(n.rhs)].value;
        accumulate(n.lhs, reduce_to(g, a.rows(), a.cols()));
        const Matrix gb = reduce_to(g, b.rows(), b.cols());
        if (n.op == Op::Add) {
          accumulate(n.rhs, gb);
        } else {
          accumulate(n.rhs, -gb);
        }
        break;
      }
      case Op::Mul: {
        const Matrix& b = nodes_[static_cast<std::size_t>(n.rhs)].value;
        const Index rows = g.rows();
        const Index cols = g.cols();
        if (b.rows() == rows && b.cols() == cols) {
          accumulate(n.lhs, reduce_to(g.cwiseProduct(b), a.rows(), a.cols()));
        } else {
          accumulate(n.lhs, reduce_to(g.cwiseProduct(expand(b, rows, cols)), a.rows(), a.cols()));
        }
        if (a.rows() == rows && a.cols() == cols) {
          accumulate(n.rhs, reduce_to(g.cwiseProduct(a), b.rows(), b.cols()));
        } else {
          accumulate(n.rhs, reduce_to(g.cwiseProduct(expand(a, rows, cols)), b.rows(), b.cols()));
        }
        break;
      }
      case Op::Div: {
        const Matrix& b = nodes_[static_cast<std::size_t>(n.rhs)].value;
        const Matrix eb = expand(b, g.rows(), g.cols());
        const Matrix ga = g.cwiseQuotient(eb);
        accumulate(n.lhs, reduce_to(ga, a.rows(), a.cols()));
        // d(a/b)/db = -(a/b)/b
        accumulate(n.rhs, reduce_to(Matrix(-ga.cwiseProduct(n.value)), b.rows(), b.cols()));
        break;
      }
      case Op::MatMul: {
        const Matrix& b = nodes_[static_cast<std::size_t>(n.rhs)].value;
        const auto li = static_cast<std::size_t>(n.lhs);
        const auto ri = static_cast<std::size_t>(n.rhs);
        if (live_[li]) {
          adj_[li].noalias() += g * b.transpose();
        } else {
          adj_[li].noalias() = g * b.transpose();
          live_[li] = 1;
        }
        if (live_[ri]) {
          adj_[ri].noalias() += a.transpose() * g;
        } else {
          adj_[ri].noalias() = a.transpose() * g;
          live_[ri] = 1;
        }
        break;
      }
      case Op::Neg: accumulate(n.lhs, -g); break;
      case Op::Scale: accumulate(n.lhs, g * n.s); break;
      case Op::Shift: accumulate(n.lhs, g); break;
      case Op::Tanh:
        accumulate(n.lhs, (g.array() * (1.0 - n.value.array().square())).matrix());
        break;
      case Op::Exp: accumulate(n.lhs, g.cwiseProduct(n.value)); break;
      case Op::Log: accumulate(n.lhs, g.cwiseQuotient(a)); break;
      case Op::Sin: accumulate(n.lhs, (g.array() * a.array().cos()).matrix()); break;
      case Op::Cos: accumulate(n.lhs, (-g.array() * a.array().sin()).matrix()); break;
      case Op::Square: accumulate(n.lhs, (2.0 * g.array() * a.array()).matrix()); break;
      case Op::Sum: accumulate(n.lhs, Matrix::Constant(a.rows(), a.cols(), g(0, 0))); break;
      case Op::Mean:
        accumulate(n.lhs, Matrix::Constant(a.rows(), a.cols(),
                                           g(0, 0) / static_cast<double>(a.size())));
        break;
      case Op::Row: {
        Matrix ga = Matrix::Zero(a.rows(), a.cols());
        ga.row(n.aux) = g;
        accumulate(n.lhs, ga);
        break;
      }
      case Op::Clamp: {
        const auto inside = (a.array() >= n.s && a.array() <= n.s2).cast<double>();
        accumulate(n.lhs, (g.array() * inside).matrix());
        break;
      }
      case Op::VStack: {
        const Matrix& b = nodes_[static_cast<std::size_t>(n.rhs)].value;
        accumulate(n.lhs, g.topRows(a.rows()));
        accumulate(n.rhs, g.bottomRows(b.rows()));
        break;
      }
      case Op::Constant:
      case Op::Parameter:
        break;
    }
  }
  if (!grad.allFinite()) {
    // Rerun with per-node checks to name the first offending node.
    if (!check_each) backward_impl(output, true);
    throw NumericError("non-finite parameter gradient");
  }
  return grad;
}

namespace {

Tape& common_tape(Var a, Var b) {
  if (!a.valid() || !b.valid() || a.tape() != b.tape()) {
    throw StructuralError("operands recorded on different tapes");
  }
  return *a.tape();
}

Tape& tape_of(Var a) {
  if (!a.valid()) throw StructuralError("operation on an unbound Var");
  return *a.tape();
}

}  // namespace

Var operator+(Var a, Var b) { return common_tape(a, b).push(Op::Add, a.id(), b.id()); }
Var operator-(Var a, Var b) { return common_tape(a, b).push(Op::Sub, a.id(), b.id()); }
Var operator*(Var a, Var b) { return common_tape(a, b).push(Op::Mul, a.id(), b.id()); }
Var operator/(Var a, Var b) { return common_tape(a, b).push(Op::Div, a.id(), b.id()); }
Var operator-(Var a) { return tape_of(a).push(Op::Neg, a.id()); }
Var operator+(Var a, double s) { return tape_of(a).push(Op::Shift, a.id(), -1, s); }
Var operator+(double s, Var a) { return a + s; }
Var operator-(Var a, double s) { return a + (-s); }
Var operator-(double s, Var a) { return -a + s; }
Var operator*(Var a, double s) { return tape_of(a).push(Op::Scale, a.id(), -1, s); }
Var operator*(double s, Var a) { return a * s; }
Var operator/(Var a, double s) { return a * (1.0 / s); }
Var operator/(double s, Var a) { return tape_of(a).constant(s) / a; }

Var matmul(Var a, Var b) { return common_tape(a, b).push(Op::MatMul, a.id(), b.id()); }
Var tanh(Var a) { return tape_of(a).push(Op::Tanh, a.id()); }
Var exp(Var a) { return tape_of(a).push(Op::Exp, a.id()); }
Var log(Var a) { return tape_of(a).push(Op::Log, a.id()); }
Var sin(Var a) { return tape_of(a).push(Op::Sin, a.id()); }
Var cos(Var a) { return tape_of(a).push(Op::Cos, a.id()); }
Var square(Var a) { return tape_of(a).push(Op::Square, a.id()); }
Var sum(Var a) { return tape_of(a).push(Op::Sum, a.id()); }
Var mean(Var a) { return tape_of(a).push(Op::Mean, a.id()); }
Var row(Var a, Index r) { return tape_of(a).push(Op::Row, a.id(), -1, 0.0, 0.0, r); }
Var clamp(Var a, double lo, double hi) { return tape_of(a).push(Op::Clamp, a.id(), -1, lo, hi); }
Var vstack(Var top, Var bottom) { return common_tape(top, bottom).push(Op::VStack, top.id(), bottom.id()); }

}  // namespace pinnebm::ad
