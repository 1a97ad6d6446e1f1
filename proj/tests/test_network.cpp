#include "pinnebm/errors.hpp"
#include "pinnebm/network.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

using namespace pinnebm;
using ad::Jet;
using ad::Var;

namespace {

// Plain Eigen forward pass, independent of the tape.
Matrix reference_forward(const MLP& mlp, const Matrix& x, const std::optional<Matrix>& mask = std::nullopt) {
  const Normalizer& n = mlp.normalizer;
  Matrix a = (x.colwise() - n.input_shift).array().colwise() / n.input_scale.array();
  const int layers = mlp.config.linear_layers();
  for (int l = 0; l < layers; ++l) {
    const Matrix w = mlp.params.block(static_cast<std::size_t>(2 * l));
    const Vector b = mlp.params.block(static_cast<std::size_t>(2 * l + 1));
    if (l == layers - 1 && mask) a = a.cwiseProduct(*mask);
    a = (w * a).colwise() + b;
    if (l < layers - 1) a = a.array().tanh().matrix();
  }
  return (a.array().colwise() * n.output_scale.array()).matrix().colwise() + n.output_shift;
}

}  // namespace

TEST(MLPConfig, ParameterCounts) {
  EXPECT_EQ(mlp_layout({{1, 40, 40, 40, 1}}).size(), 3401);
  EXPECT_EQ(mlp_layout({{1, 40, 40, 40, 40, 1}}).size(), 5041);
  EXPECT_EQ(mlp_layout({{1, 5, 5, 5, 1}}).size(), 76);
  EXPECT_EQ(mlp_layout({{3, 20, 20, 20, 20, 20, 20, 20, 20, 2}}).size(), 3*20 + 20 + 7 * 420 + 42);
}

TEST(MLPConfig, ValidationRejectsBadShapes) {
  EXPECT_THROW(mlp_layout({{1, 1}}), StructuralError);
  EXPECT_THROW(mlp_layout({{1, 0, 1}}), StructuralError);
  EXPECT_THROW(mlp_layout({{}}), StructuralError);
}

TEST(MLP, GlorotInitAndZeroBiases) {
  Rng rng(3);
  const MLP mlp = init_mlp({{2, 30, 10, 1}}, rng);
  for (int l = 0; l < 3; ++l) {
    const auto w = mlp.params.block(static_cast<std::size_t>(2 * l));
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    EXPECT_LE(w.cwiseAbs().maxCoeff(), limit);
    EXPECT_GT(w.cwiseAbs().maxCoeff(), 0.5 * limit);
    EXPECT_TRUE(mlp.params.block(static_cast<std::size_t>(2 * l + 1)).isZero(0.0));
  }
}

TEST(Normalizer, FitMapsRangeToUnitInterval) {
  Matrix x(2, 4);
  x << 0, 10, 5, 2, -3, -1, -2, -1;
  const Normalizer n = fit_normalizer(x, x.row(0));
  const Matrix z = n.normalize_input(x);
  EXPECT_DOUBLE_EQ(z.row(0).minCoeff(), -1.0);
  EXPECT_DOUBLE_EQ(z.row(0).maxCoeff(), 1.0);
  EXPECT_DOUBLE_EQ(z.row(1).minCoeff(), -1.0);
  EXPECT_DOUBLE_EQ(z.row(1).maxCoeff(), 1.0);
  EXPECT_TRUE(n.denormalize_input(z).isApprox(x, 1e-15));
  EXPECT_THROW(fit_normalizer(Matrix::Ones(1, 5), x.row(0)), DegenerateDataError);
  EXPECT_THROW(fit_normalizer(Matrix(1, 0), x.row(0)), DegenerateDataError);
}

TEST(MLP, TapeForwardMatchesEigenReference) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int in = 1 + trial % 3;
    const int out = 1 + trial % 2;
    const MLP mlp = oracle::random_mlp(rng, in, out);
    const Matrix x = oracle::random_matrix(rng, in, 9, -3.0, 3.0);
    EXPECT_LT(oracle::rel_error(evaluate(mlp, x), reference_forward(mlp, x)), 1e-13) << trial;
  }
}

TEST(MLP, DropoutMaskIsPerElementAndScaled) {
  Rng rng(5);
  MLPConfig cfg{{1, 5, 5, 5, 1}, 0.5};
  MLP mlp = init_mlp(cfg, rng);
  const auto big = sample_dropout_mask(cfg, 400, rng);
  ASSERT_TRUE(big);
  ASSERT_EQ(big->rows(), 5);
  ASSERT_EQ(big->cols(), 400);
  EXPECT_TRUE((big->array() == 0.0 || big->array() == 2.0).all());
  EXPECT_NEAR((big->array() > 0.0).cast<double>().mean(), 0.5, 0.03);
  // Columns are not all copies of the first one.
  Index differing = 0;
  for (Index j = 1; j < big->cols(); ++j) differing += big->col(j) != big->col(0);
  EXPECT_GT(differing, 300);
  EXPECT_FALSE(sample_dropout_mask({{1, 5, 1}, 0.0}, 3, rng));

  const auto mask = sample_dropout_mask(cfg, 6, rng);
  const Matrix x = oracle::random_matrix(rng, 1, 6);
  ad::Tape tape;
  const BoundMLP net = bind_frozen(tape, mlp);
  const Matrix y = forward(net, tape.constant(x), mask).value();
  EXPECT_LT(oracle::rel_error(y, reference_forward(mlp, x, mask)), 1e-13);
  EXPECT_THROW(forward(net, tape.constant(Matrix::Zero(1, 5)), mask), StructuralError);
}

TEST(MLP, BindOffsetsAndGradientExtent) {
  Rng rng(2);
  const MLP mlp = init_mlp({{1, 4, 1}}, rng);
  ad::Tape tape;
  const BoundMLP net = bind(tape, mlp, 7);
  EXPECT_EQ(tape.parameter_extent(), 7 + mlp.parameter_count());
  const Var y = forward(net, tape.constant(Matrix::Constant(1, 3, 0.2)));
  const Vector g = tape.backward(ad::sum(y));
  EXPECT_EQ(g.size(), 7 + mlp.parameter_count());
  EXPECT_TRUE(g.head(7).isZero(0.0));
  EXPECT_THROW(forward(net, tape.constant(Matrix::Ones(2, 3))), StructuralError);
}

TEST(MLP, SaveLoadRoundTripIsBitExact) {
  Rng rng(9);
  const MLP mlp = oracle::random_mlp(rng, 3, 2);
  const auto path = std::filesystem::temp_directory_path() / "pinnebm_test_params.bin";
  save_params(mlp, path);
  const MLP back = load_params(path);
  std::filesystem::remove(path);
  EXPECT_EQ(back.config.widths, mlp.config.widths);
  EXPECT_EQ(back.params.layout, mlp.params.layout);
  EXPECT_EQ(back.params.values, mlp.params.values);
  EXPECT_EQ(back.normalizer.input_shift, mlp.normalizer.input_shift);
  EXPECT_EQ(back.normalizer.output_scale, mlp.normalizer.output_scale);
}

TEST(MLP, LoadRejectsMissingAndTruncatedFiles) {
  const auto dir = std::filesystem::temp_directory_path();
  EXPECT_THROW(load_params(dir / "pinnebm_no_such_file.bin"), IoError);
  Rng rng(1);
  const MLP mlp = init_mlp({{1, 3, 1}}, rng);
  const auto path = dir / "pinnebm_trunc.bin";
  save_params(mlp, path);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
  EXPECT_ANY_THROW(load_params(path));
  std::filesystem::remove(path);
}

// Property: directional jets of random networks agree with finite differences
// of the value along the same direction, orders 1 to 3.
TEST(NetworkProperty, DirectionalJetsMatchFiniteDifferences) {
  Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const int in = 1 + trial % 3;
    const MLP mlp = oracle::random_mlp(rng, in, 1);
    const Vector x0 = oracle::random_matrix(rng, in, 1);
    const Vector dir = oracle::random_matrix(rng, in, 1);
    ad::Tape tape;
    const BoundMLP net = bind_frozen(tape, mlp);
    const Jet<Var> j = directional(net, Matrix(x0), dir, 3);
    auto f = [&](double s) { return evaluate(mlp, Matrix(x0 + s * dir))(0, 0); };
    EXPECT_NEAR(j.value().scalar(), f(0.0), 1e-14);
    EXPECT_NEAR(j.d(1).scalar(), oracle::fd_d1(f, 0.0), 1e-7 * (1 + std::abs(j.d(1).scalar()))) << trial;
    EXPECT_NEAR(j.d(2).scalar(), oracle::fd_d2(f, 0.0), 1e-5 * (1 + std::abs(j.d(2).scalar()))) << trial;
    EXPECT_NEAR(j.d(3).scalar(), oracle::fd_d3(f, 0.0), 1e-3 * (1 + std::abs(j.d(3).scalar()))) << trial;
  }
}
