#include "pinnebm/autodiff/adam.hpp"
#include "pinnebm/autodiff/forward.hpp"
#include "pinnebm/autodiff/jet.hpp"
#include "pinnebm/autodiff/params.hpp"
#include "pinnebm/autodiff/tape.hpp"
#include "pinnebm/errors.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace pinnebm;
using namespace pinnebm::ad;

namespace {

Matrix m2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tape

TEST(Tape, ScalarExpressionValueAndGradient) {
  Tape tape;
  Var x = tape.parameter(Matrix::Constant(1, 1, 0.7), 0);
  Var y = tape.parameter(Matrix::Constant(1, 1, -1.3), 1);
  Var f = sin(x) * exp(y) + square(x - y) / (2.0 + cos(y));
  const double xv = 0.7, yv = -1.3;
  const double denom = 2.0 + std::cos(yv);
  EXPECT_NEAR(f.scalar(), std::sin(xv) * std::exp(yv) + (xv - yv) * (xv - yv) / denom, 1e-15);
  const Vector g = tape.backward(f);
  ASSERT_EQ(g.size(), 2);
  EXPECT_NEAR(g(0), std::cos(xv) * std::exp(yv) + 2 * (xv - yv) / denom, 1e-14);
  EXPECT_NEAR(g(1),
              std::sin(xv) * std::exp(yv) - 2 * (xv - yv) / denom +
                  (xv - yv) * (xv - yv) * std::sin(yv) / (denom * denom),
              1e-14);
}

TEST(Tape, MatMulGradientIsOuterProductForm) {
  Tape tape;
  const Matrix w = m2(1, 2, 3, 4);
  const Matrix v = m2(0.5, -1, 2, 0.25);
  Var W = tape.parameter(w, 0);
  Var V = tape.parameter(v, 4);
  Var s = sum(matmul(W, V));
  const Vector g = tape.backward(s);
  // d sum(WV)/dW = 1 V^T, d/dV = W^T 1
  const Matrix gw = Matrix::Ones(2, 2) * v.transpose();
  const Matrix gv = w.transpose() * Matrix::Ones(2, 2);
  for (Index i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(g(i), gw(i));
    EXPECT_DOUBLE_EQ(g(4 + i), gv(i));
  }
}

TEST(Tape, BroadcastColumnRowAndScalar) {
  Tape tape;
  Var a = tape.parameter(m2(1, 2, 3, 4), 0);
  Var col = tape.parameter(Matrix::Constant(2, 1, 10.0), 4);
  Var rowv = tape.parameter(Matrix::Constant(1, 2, 100.0), 6);
  Var sc = tape.parameter(Matrix::Constant(1, 1, 2.0), 8);
  Var f = sum((a + col + rowv) * sc);
  EXPECT_DOUBLE_EQ(f.scalar(), 2.0 * (10 + 4 * 10 + 4 * 100));
  const Vector g = tape.backward(f);
  for (Index i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(g(i), 2.0);
  EXPECT_DOUBLE_EQ(g(4), 4.0);  // each column entry is used twice, times 2
  EXPECT_DOUBLE_EQ(g(6), 4.0);
  EXPECT_DOUBLE_EQ(g(8), 10 + 4 * 10 + 4 * 100);
}

TEST(Tape, ShapeMismatchIsStructural) {
  Tape tape;
  Var a = tape.constant(Matrix::Ones(2, 3));
  Var b = tape.constant(Matrix::Ones(3, 2));
  EXPECT_THROW(a + b, StructuralError);
  EXPECT_THROW(matmul(a, a), StructuralError);
}

TEST(Tape, BackwardRequiresScalar) {
  Tape tape;
  Var a = tape.parameter(Matrix::Ones(2, 2), 0);
  EXPECT_THROW(tape.backward(a * 2.0), StructuralError);
}

TEST(Tape, DanglingOperandIsStructural) {
  Tape tape;
  tape.constant(1.0);
  EXPECT_THROW(tape.push(Op::Add, 0, 5), StructuralError);
  EXPECT_THROW(tape.push(Op::Neg, -1), StructuralError);
}

TEST(Tape, NonFiniteGradientNamesTheNode) {
  Tape tape;
  Var x = tape.parameter(Matrix::Constant(1, 1, 0.0), 0);
  Var f = log(x);  // d/dx = 1/0
  try {
    tape.backward(f);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("node"), std::string::npos) << e.what();
  }
}

TEST(Tape, ClearReusesStorageWithIdenticalResults) {
  Tape tape;
  Vector first;
  for (int rep = 0; rep < 3; ++rep) {
    tape.clear();
    Var w = tape.parameter(m2(0.1, 0.2, -0.3, 0.4), 0);
    Var x = tape.constant(Matrix::Constant(2, 5, 0.5));
    Var f = mean(square(tanh(matmul(w, x))));
    const Vector g = tape.backward(f);
    if (rep == 0) {
      first = g;
    } else {
      EXPECT_EQ(g, first);
    }
  }
}

TEST(Tape, SetValueAndReplay) {
  Tape tape;
  Var x = tape.constant(2.0);
  Var f = square(x) + 1.0;
  EXPECT_DOUBLE_EQ(f.scalar(), 5.0);
  tape.set_value(x, Matrix::Constant(1, 1, 3.0));
  tape.replay();
  EXPECT_DOUBLE_EQ(f.scalar(), 10.0);
  EXPECT_THROW(tape.set_value(f, Matrix::Constant(1, 1, 0.0)), StructuralError);
}

TEST(Tape, ClampPassesGradientOnlyInside) {
  Tape tape;
  Matrix v(1, 3);
  v << -2.0, 0.5, 3.0;
  Var x = tape.parameter(v, 0);
  Var f = sum(clamp(x, -1.0, 1.0));
  EXPECT_DOUBLE_EQ(f.scalar(), -1.0 + 0.5 + 1.0);
  const Vector g = tape.backward(f);
  EXPECT_EQ(g, Vector((Vector(3) << 0.0, 1.0, 0.0).finished()));
}

TEST(Tape, RowAndVStackRoundTrip) {
  Tape tape;
  Var a = tape.parameter(m2(1, 2, 3, 4), 0);
  Var stacked = vstack(row(a, 1), row(a, 0));
  EXPECT_EQ(stacked.value(), m2(3, 4, 1, 2));
  Matrix w(2, 2);
  w << 1, 10, 100, 1000;
  const Vector g = tape.backward(sum(stacked * tape.constant(w)));
  EXPECT_EQ(g, Vector((Vector(4) << 100, 1, 1000, 10).finished()));
}

// ---------------------------------------------------------------------------
// Jets

TEST(Jet, CompositeMatchesSymbolicDerivatives) {
  // f(t) = exp(sin t) tanh t + log(2 + t^2) cos t at t = 0.7, derivatives by
  // symbolic differentiation.
  const Jet<double> t = Jet<double>::seed(0.7, 1.0, 3);
  const Jet<double> f = exp(sin(t)) * tanh(t) + log(t * t + 2.0) * cos(t);
  EXPECT_NEAR(f.value(), 1.8487686407174067, 1e-14);
  EXPECT_NEAR(f.d(1), 1.9315282961987943, 1e-13);
  EXPECT_NEAR(f.d(2), -0.7298250988598604, 1e-13);
  EXPECT_NEAR(f.d(3), -7.81084328391596, 1e-12);
}

TEST(Jet, TapeJetAgreesWithDoubleJet) {
  Tape tape;
  const Jet<Var> t = Jet<Var>::seed(tape.constant(0.7), tape.constant(1.0), 3);
  const Jet<Var> f = exp(sin(t)) * tanh(t) + log(t * t + 2.0) * cos(t);
  EXPECT_NEAR(f.value().scalar(), 1.8487686407174067, 1e-14);
  EXPECT_NEAR(f.d(1).scalar(), 1.9315282961987943, 1e-13);
  EXPECT_NEAR(f.d(2).scalar(), -0.7298250988598604, 1e-13);
  EXPECT_NEAR(f.d(3).scalar(), -7.81084328391596, 1e-12);
}

TEST(Jet, StructuralZerosAndOrders) {
  const Jet<double> c = Jet<double>::constant(2.0, 2);
  EXPECT_TRUE(c.is_zero(1));
  EXPECT_EQ(c.d(3), 0.0);
  Tape tape;
  const Jet<Var> v = Jet<Var>::seed(tape.constant(1.0), tape.constant(1.0), 1);
  EXPECT_THROW(v.d(2), StructuralError);
  EXPECT_THROW(Jet<double>::constant(1.0, 4), UnsupportedError);
}

TEST(Jet, ProductFollowsLeibnizRule) {
  // (t^2)(t^3) = t^5: derivatives 5t^4, 20t^3, 60t^2 at t = 1.5
  const Jet<double> t = Jet<double>::seed(1.5, 1.0, 3);
  const Jet<double> p = (t * t) * (t * t * t);
  EXPECT_NEAR(p.value(), std::pow(1.5, 5), 1e-12);
  EXPECT_NEAR(p.d(1), 5 * std::pow(1.5, 4), 1e-12);
  EXPECT_NEAR(p.d(2), 20 * std::pow(1.5, 3), 1e-12);
  EXPECT_NEAR(p.d(3), 60 * std::pow(1.5, 2), 1e-12);
}

namespace {

// g(x, y) = sin(x) exp(x y) + tanh(x - 2 y)
Jet<double> g_xy(std::span<const Jet<double>> in) {
  return sin(in[0]) * exp(in[0] * in[1]) + tanh(in[0] + in[1] * -2.0);
}

}  // namespace

TEST(Forward, MixedPartialsByPolarization) {
  const double p[2] = {0.3, 0.8};
  const double d_plus[2] = {1.0, 1.0};
  const double d_minus[2] = {1.0, -1.0};
  const double d_x[2] = {1.0, 0.0};
  const double d_y[2] = {0.0, 1.0};
  auto jet = [&](const double* d, int order) { return directional_jet(g_xy, p, std::span<const double>(d, 2), order); };
  EXPECT_NEAR(mixed_second(g_xy, p, 0, 1), -0.05716041386878595, 1e-13);
  const double xxy = polarize_third_aab(jet(d_plus, 3).d(3), jet(d_minus, 3).d(3), jet(d_y, 3).d(3));
  const double xyy = polarize_third_abb(jet(d_plus, 3).d(3), jet(d_minus, 3).d(3), jet(d_x, 3).d(3));
  EXPECT_NEAR(xxy, 2.3081982506695793, 1e-12);
  EXPECT_NEAR(xyy, 2.890165925310742, 1e-12);
  EXPECT_NEAR(jet(d_x, 2).d(2), 2.2515806830817926, 1e-13);
  EXPECT_NEAR(jet(d_y, 3).d(3), -5.046670102876093, 1e-12);
}

TEST(Forward, MixedSecondIsExactlySymmetric) {
  const double p[2] = {-0.4, 1.1};
  EXPECT_EQ(mixed_second(g_xy, p, 0, 1), mixed_second(g_xy, p, 1, 0));
  EXPECT_THROW(mixed_second(g_xy, p, 1, 1), StructuralError);
  EXPECT_THROW(mixed_second(g_xy, p, 0, 2), StructuralError);
}

TEST(Forward, ForwardJetValidatesSeedsAndOrder) {
  const Jet<double> a = Jet<double>::seed(0.3, 1.0, 3);
  const Jet<double> b = Jet<double>::seed(0.8, 1.0, 3);
  const Jet<double> c = Jet<double>::constant(0.8, 3);
  const Jet<double> two[2] = {a, b};
  const Jet<double> none[2] = {Jet<double>::constant(0.3, 3), c};
  const Jet<double> one[2] = {a, c};
  EXPECT_THROW(forward_jet(g_xy, two, 2), StructuralError);
  EXPECT_THROW(forward_jet(g_xy, none, 2), StructuralError);
  EXPECT_THROW(forward_jet(g_xy, one, 4), UnsupportedError);
  const Jet<double> r = forward_jet(g_xy, one, 2);
  EXPECT_NEAR(r.d(2), 2.2515806830817926, 1e-13);
  EXPECT_EQ(r.d(3), 0.0);
}

// ---------------------------------------------------------------------------
// Adam and parameter layout

TEST(Adam, TwoStepsMatchReferenceUpdate) {
  Vector p(3);
  p << 0.5, -1.0, 2.0;
  Vector g1(3), g2(3);
  g1 << 0.1, -0.2, 0.0;
  g2 << -0.3, 0.05, 1e-3;
  AdamState st(3);
  adam_step(p, g1, st, {});
  EXPECT_NEAR(p(0), 0.49800000019999996, 1e-15);
  EXPECT_NEAR(p(1), -0.9980000001, 1e-15);
  EXPECT_EQ(p(2), 2.0);
  adam_step(p, g2, st, {});
  EXPECT_NEAR(p(0), 0.4989883798224013, 1e-15);
  EXPECT_NEAR(p(1), -0.997061063822009, 1e-15);
  EXPECT_NEAR(p(2), 1.9985117473946739, 1e-15);
  EXPECT_EQ(st.step(), 2);
}

TEST(Adam, ExtendedSegmentStartsFresh) {
  Vector p = Vector::Zero(2);
  AdamState st(2);
  adam_step(p, Vector::Ones(2), st, {});
  st.extend(1);
  Vector q(3);
  q << p(0), p(1), 0.0;
  adam_step(q, Vector::Ones(3), st, {});
  EXPECT_EQ(st.step(0), 2);
  EXPECT_EQ(st.step(2), 1);
  // A fresh segment's first step has magnitude lr (bias-corrected m/sqrt(v) = 1).
  EXPECT_NEAR(q(2), -0.002, 1e-10);
  EXPECT_THROW(adam_step(p, Vector::Ones(3), st, {}), StructuralError);
}

TEST(Params, LayoutOffsetsAndPackRoundTrip) {
  ParamLayout layout;
  layout.add("W", 3, 2);
  layout.add("b", 3, 1);
  EXPECT_EQ(layout.size(), 9);
  EXPECT_EQ(layout.block(1).offset, 6);
  Matrix w(3, 2);
  w << 1, 2, 3, 4, 5, 6;
  const ParamVector pv = pack({{"W", w}, {"b", Matrix::Constant(3, 1, 7.0)}});
  EXPECT_EQ(pv.values(1), 3.0);  // column-major
  const auto blocks = unpack(pv);
  EXPECT_EQ(blocks[0], w);
  EXPECT_EQ(blocks[1], Matrix::Constant(3, 1, 7.0));
}

// ---------------------------------------------------------------------------
// Property: reverse-mode gradients of random networks match finite differences.

TEST(AutodiffProperty, RandomMlpGradientsMatchCentralDifferences) {
  Rng rng(20240611);
  for (int trial = 0; trial < 25; ++trial) {
    const int in_dim = 1 + trial % 3;
    MLP mlp = oracle::random_mlp(rng, in_dim, 1 + trial % 2);
    const Matrix x = oracle::random_matrix(rng, in_dim, 7);
    Vector dir = oracle::random_matrix(rng, in_dim, 1);
    auto loss_of = [&](const Vector& theta) {
      MLP copy = mlp;
      copy.params.values = theta;
      Tape tape;
      const BoundMLP net = bind_frozen(tape, copy);
      const Jet<Var> j = directional(net, x, dir, 2);
      return (mean(square(j.value())) + mean(square(j.d(1))) + mean(j.d(2))).scalar();
    };
    Tape tape;
    const BoundMLP net = bind(tape, mlp, 0);
    const Jet<Var> j = directional(net, x, dir, 2);
    const Var loss = mean(square(j.value())) + mean(square(j.d(1))) + mean(j.d(2));
    const Vector g = tape.backward(loss);
    const Vector fd = oracle::fd_gradient(loss_of, mlp.params.values);
    EXPECT_LT(oracle::rel_error(g, fd), 1e-5) << "trial " << trial;
  }
}
