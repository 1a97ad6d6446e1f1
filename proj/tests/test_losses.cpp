#include "pinnebm/errors.hpp"
#include "pinnebm/losses.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <vector>

using namespace pinnebm;
using ad::Var;

namespace {

Matrix row_of(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) m(0, i++) = x;
  return m;
}

}  // namespace

TEST(Losses, LeastSquaresOracle) {
  ad::Tape tape;
  const Var a = tape.constant(row_of({0.3, -1.2, 2.5, 0.0, 4.4, -0.7, 1.1}));
  const Var b = tape.constant(row_of({1.0, -1.0, 2.0, 0.5, 4.0, 0.2, -0.3}));
  EXPECT_NEAR(data_loss_ls(a, b).scalar(), 0.5657142857142857, 1e-15);
}

TEST(Losses, LeastSquaresPoolsChannels) {
  ad::Tape tape;
  Matrix p(2, 2), y(2, 2);
  p << 1, 2, 3, 4;
  y << 0, 0, 0, 0;
  EXPECT_DOUBLE_EQ(data_loss_ls(tape.constant(p), tape.constant(y)).scalar(), 30.0 / 4.0);
  EXPECT_THROW(data_loss_ls(tape.constant(p), tape.constant(Matrix::Zero(1, 2))), StructuralError);
  EXPECT_THROW(data_loss_ls(tape.constant(Matrix(1, 0)), tape.constant(Matrix(1, 0))), CountError);
}

TEST(Losses, OffsetShiftsPredictions) {
  ad::Tape tape;
  const Matrix p = row_of({1.0, 2.0, 3.0});
  const Matrix y = row_of({5.0, 6.0, 7.0});
  const Var theta = tape.parameter(Matrix::Constant(1, 1, 4.0), 0);
  const Var l = data_loss_ls_offset(tape.constant(p), theta, tape.constant(y));
  EXPECT_DOUBLE_EQ(l.scalar(), 0.0);
  const Var theta2 = tape.parameter(Matrix::Constant(1, 1, 3.0), 1);
  const Var l2 = data_loss_ls_offset(tape.constant(p), theta2, tape.constant(y));
  EXPECT_DOUBLE_EQ(l2.scalar(), 1.0);
  // d/dtheta mean((p + theta - y)^2) = 2 mean(p + theta - y) = -2
  EXPECT_DOUBLE_EQ(tape.backward(l2)(1), -2.0);
  EXPECT_THROW(data_loss_ls_offset(tape.constant(p), tape.constant(Matrix::Ones(1, 2)), tape.constant(y)),
               StructuralError);
}

TEST(Losses, PdeLossPoolsAllRows) {
  ad::Tape tape;
  const std::vector<Var> rows{tape.constant(row_of({1.0, 2.0})), tape.constant(row_of({3.0, 0.0, 1.0}))};
  EXPECT_DOUBLE_EQ(pde_loss(rows).scalar(), (1 + 4 + 9 + 0 + 1) / 5.0);
  EXPECT_THROW(pde_loss(std::vector<Var>{}), CountError);
}

TEST(Losses, TotalAndBreakdown) {
  ad::Tape tape;
  const Var d = tape.constant(2.0);
  const Var p = tape.constant(3.0);
  EXPECT_DOUBLE_EQ(total_loss(d, p, 0.5).scalar(), 3.5);
  EXPECT_DOUBLE_EQ(total_loss(d, p, 0.0).scalar(), 2.0);
  EXPECT_THROW(total_loss(d, p, -1.0), StructuralError);
  const LossBreakdown b = breakdown(2.0, 3.0, 50.0);
  EXPECT_DOUBLE_EQ(b.total, 152.0);
  EXPECT_DOUBLE_EQ(b.omega_used, 50.0);
}

// Property: the least-squares gradient equals 2 (p - y) / N.
TEST(LossesProperty, LeastSquaresGradient) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Index rows = 1 + trial % 2, cols = 1 + trial * 3;
    const Matrix p = oracle::random_matrix(rng, rows, cols, -5, 5);
    const Matrix y = oracle::random_matrix(rng, rows, cols, -5, 5);
    ad::Tape tape;
    const Vector g = tape.backward(data_loss_ls(tape.parameter(p, 0), tape.constant(y)));
    const Matrix expect = 2.0 * (p - y) / static_cast<double>(p.size());
    EXPECT_LT(oracle::rel_error(g, expect.reshaped()), 1e-14);
  }
}
