#pragma once

// Reverse-mode tape over dense Eigen blocks.
//
// Every node holds a matrix value (a 1x1 matrix for a scalar). Elementwise
// binary ops broadcast a 1x1 operand, a column (rows x 1) or a row (1 x cols)
// against the other operand. Parameters are leaves tagged with an offset into
// the flat gradient vector returned by backward().

#include <Eigen/Dense>

#include <cstdint>
#include <string_view>
#include <vector>

namespace pinnebm::ad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

enum class Op : std::uint8_t {
  Constant,
  Parameter,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Scale,      // x * s
  Shift,      // x + s
  MatMul,
  Tanh,
  Exp,
  Log,
  Sin,
  Cos,
  Square,
  Sum,
  Mean,
  Row,        // row `aux` of x
  Clamp,      // clamp to [s, s2]
  VStack,     // [lhs; rhs]
};

std::string_view op_name(Op op);

struct Node {
  Op op = Op::Constant;
  int lhs = -1;
  int rhs = -1;
  double s = 0.0;
  double s2 = 0.0;
  Index aux = 0;
  Matrix value;
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; does not own the node.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  bool valid() const { return tape_ != nullptr && id_ >= 0; }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

  const Matrix& value() const;
  double scalar() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(const Matrix& value);
  Var constant(double value);
  /// Registers a trainable leaf whose gradient lands at
  /// [offset, offset + value.size()) of backward()'s result, column-major.
  Var parameter(const Matrix& value, Index offset);

  Var push(Op op, int lhs, int rhs = -1, double s = 0.0, double s2 = 0.0, Index aux = 0);

  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }
  std::size_t size() const { return used_; }
  /// One past the highest gradient slot claimed by any parameter.
  Index parameter_extent() const { return extent_; }

  /// Overwrites a leaf value; call replay() afterwards to refresh dependents.
  void set_value(Var leaf, const Matrix& value);
  /// Recomputes every non-leaf node in recording order.
  void replay();
  /// Forgets all nodes. Node storage is kept and reused by later recordings.
  void clear();

  /// Gradient of a 1x1 output node with respect to all registered parameters.
  Vector backward(Var output) const;

 private:
  Node& next_slot();
  void evaluate(Node& n) const;
  Vector backward_impl(Var output, bool check_each) const;

  std::vector<Node> nodes_;
  std::size_t used_ = 0;
  std::vector<int> params_;
  mutable std::vector<Matrix> adj_;
  mutable std::vector<char> live_;
  Index extent_ = 0;
};

inline Vector backward(const Tape& tape, Var output) { return tape.backward(output); }

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double s);
Var operator+(double s, Var a);
Var operator-(Var a, double s);
Var operator-(double s, Var a);
Var operator*(Var a, double s);
Var operator*(double s, Var a);
Var operator/(Var a, double s);
Var operator/(double s, Var a);

Var matmul(Var a, Var b);
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);
Var sin(Var a);
Var cos(Var a);
Var square(Var a);
Var sum(Var a);
Var mean(Var a);
Var row(Var a, Index r);
Var clamp(Var a, double lo, double hi);
Var vstack(Var top, Var bottom);

}  // namespace pinnebm::ad
