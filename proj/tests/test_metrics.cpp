#include "pinnebm/errors.hpp"
#include "pinnebm/metrics.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace pinnebm;

namespace {

RunMetrics run(double dl, double rmse_v, double nll_v, double f2_v) {
  return {Vector::Constant(1, dl), rmse_v, nll_v, f2_v};
}

// A trained-looking result around an arbitrary network.
TrainResult fake_result(Variant v, Rng& rng) {
  TrainResult r;
  r.variant = v;
  r.pinn = oracle::random_mlp(rng, 1, 1);
  r.lambda = Vector::Constant(1, 0.25);
  return r;
}

}  // namespace

TEST(Metrics, DeltaLambda) {
  EXPECT_EQ(delta_lambda((Vector(2) << 1.2, 0.005).finished(), (Vector(2) << 1.0, 0.01).finished()),
            (Vector(2) << 1.2 - 1.0, 0.01 - 0.005).finished());
  EXPECT_THROW(delta_lambda(Vector::Zero(1), Vector::Zero(2)), StructuralError);
}

TEST(Metrics, SummaryOracle) {
  const Summary s = summarize({0.8, 1.9, 2.4, 0.3, 1.1, 3.7, 2.2, 0.9, 1.5, 2.8});
  EXPECT_NEAR(s.mean, 1.7600000000000002, 1e-15);
  EXPECT_NEAR(s.stddev, 1.0415799963943668, 1e-14);
  EXPECT_TRUE(std::isnan(summarize({3.0}).stddev));
  EXPECT_EQ(summarize({3.0}).mean, 3.0);
  EXPECT_THROW(summarize({}), CountError);
}

TEST(Metrics, AggregateMatchesColumnSummaries) {
  const std::vector<RunMetrics> runs{run(0.1, 1.0, 2.0, 3.0), run(0.3, 2.0, 2.5, 1.0), run(0.2, 3.0, 3.0, 2.0)};
  const AggregateMetrics a = aggregate(runs);
  EXPECT_EQ(a.runs, 3u);
  EXPECT_NEAR(a.delta_lambda[0].mean, 0.2, 1e-15);
  EXPECT_NEAR(a.delta_lambda[0].stddev, 0.1, 1e-15);
  EXPECT_DOUBLE_EQ(a.rmse.mean, 2.0);
  EXPECT_DOUBLE_EQ(a.rmse.stddev, 1.0);
  EXPECT_DOUBLE_EQ(a.nll.mean, 2.5);
  EXPECT_DOUBLE_EQ(a.f2.stddev, 1.0);
  EXPECT_THROW(aggregate({}), CountError);
  std::vector<RunMetrics> bad = runs;
  bad[1].delta_lambda = Vector::Zero(2);
  EXPECT_THROW(aggregate(bad), StructuralError);
}

TEST(Metrics, GaussianNllOracle) {
  const Vector train = (Vector(2) << 1.0, -1.0).finished();
  EXPECT_NEAR(gaussian_nll(train, Vector::Zero(1), 0.0), 0.9189385332046727, 1e-15);
  EXPECT_NEAR(gaussian_nll(train, Vector::Constant(1, 2.0), 0.0), 2.918938533204673, 1e-15);
  // Offset: training residuals 3 and 5 about offset 4 have unit variance.
  const Vector shifted = (Vector(2) << 3.0, 5.0).finished();
  EXPECT_NEAR(gaussian_nll(shifted, Vector::Constant(1, 4.0), 4.0), 0.9189385332046727, 1e-15);
  EXPECT_THROW(gaussian_nll(Vector::Constant(3, 4.0), train, 4.0), DegenerateDataError);
  EXPECT_THROW(gaussian_nll(Vector(0), train, 0.0), CountError);
}

TEST(Metrics, RangeGrid) {
  Matrix x(1, 3);
  x << 2.0, -1.0, 4.0;
  const Matrix g = range_grid(x, 6);
  EXPECT_EQ(g, (Matrix(1, 6) << -1.0, 0.0, 1.0, 2.0, 3.0, 4.0).finished());
  Matrix x3(3, 2);
  x3 << 0, 1, 0, 2, 0, 4;
  const Matrix g3 = range_grid(x3, 3);
  EXPECT_EQ(g3.cols(), 27);
  EXPECT_EQ(g3.col(0), Vector::Zero(3));
  EXPECT_EQ(g3.col(26), (Vector(3) << 1, 2, 4).finished());
  EXPECT_EQ(g3.col(1), (Vector(3) << 0, 0, 2).finished());
  EXPECT_THROW(range_grid(Matrix(1, 0), 5), CountError);
}

TEST(Metrics, RmseAndF2OnExactSolution) {
  // A network cannot represent exp exactly; instead check RMSE against a direct computation.
  Rng rng(1);
  auto p = make_problem(ProblemKind::Exponential);
  const MLP mlp = oracle::random_mlp(rng, 1, 1);
  Samples s;
  s.inputs = oracle::random_matrix(rng, 1, 25, 0.0, 10.0);
  s.truth = p->solution(s.inputs);
  s.targets = s.truth;
  const double direct = std::sqrt((evaluate(mlp, s.inputs) - s.truth).array().square().mean());
  EXPECT_NEAR(rmse(*p, mlp, s), direct, 1e-13);

  // f2 on a grid equals the mean squared residual computed by finite differences.
  const Matrix grid = range_grid(s.inputs, 500);
  double acc = 0.0;
  for (Index j = 0; j < grid.cols(); ++j) {
    auto f = [&](double h) { return evaluate(mlp, Matrix::Constant(1, 1, grid(0, j) + h))(0, 0); };
    const double r = oracle::fd_d1(f, 0.0) - 0.3 * f(0.0);
    acc += r * r;
  }
  EXPECT_NEAR(f2_train(*p, mlp, Vector::Constant(1, 0.3), s), acc / 500.0, 1e-6 * (1 + acc / 500.0));
}

TEST(Metrics, NllVariants) {
  Rng rng(2);
  auto p = make_problem(ProblemKind::Exponential);
  Dataset d = synth_dataset(*p, make_noise(NoiseKind::Mixture3), 60, 20, 50, rng);
  TrainResult pinn = fake_result(Variant::Pinn, rng);
  const Vector tr = data_residuals(*p, pinn.pinn, d.train);
  const Vector va = data_residuals(*p, pinn.pinn, d.validation);
  EXPECT_DOUBLE_EQ(nll_validation(*p, pinn, d.train, d.validation), gaussian_nll(tr, va, 0.0));

  TrainResult off = pinn;
  off.variant = Variant::PinnOff;
  off.theta0 = 3.0;
  EXPECT_DOUBLE_EQ(nll_validation(*p, off, d.train, d.validation), gaussian_nll(tr, va, 3.0));

  TrainResult ebm = pinn;
  ebm.variant = Variant::PinnEbm;
  EXPECT_DOUBLE_EQ(nll_validation(*p, ebm, d.train, d.validation), gaussian_nll(tr, va, 0.0));
}

// The EBM validation NLL equals the value recomputed from the exported density
// table when the validation residuals sit on quadrature nodes.
TEST(Metrics, EbmNllMatchesDensityTable) {
  Rng rng(3);
  auto p = make_problem(ProblemKind::Exponential);
  const Dataset d = synth_dataset(*p, make_noise(NoiseKind::Mixture3), 80, 10, 50, rng);
  TrainResult r = fake_result(Variant::PinnEbm, rng);
  r.ebm = init_ebm(data_residuals(*p, r.pinn, d.train), 2000, rng);
  const auto [eps, density] = pdf_table(*r.ebm);

  Samples val;
  val.inputs = oracle::random_matrix(rng, 1, 6, 0.0, 10.0);
  val.truth = p->solution(val.inputs);
  const Index nodes[6] = {20, 50, 90, 100, 130, 180};
  val.targets = evaluate(r.pinn, val.inputs);
  double expect = 0.0;
  for (int k = 0; k < 6; ++k) {
    val.targets(0, k) += eps(nodes[k]);
    expect -= std::log(density(nodes[k]));
  }
  expect /= 6.0;
  EXPECT_NEAR(nll_validation(*p, r, d.train, val), expect, 1e-6);
}

TEST(Metrics, ComputeMetricsBundlesEverything) {
  Rng rng(4);
  auto p = make_problem(ProblemKind::Exponential);
  const Dataset d = synth_dataset(*p, make_noise(NoiseKind::Gaussian), 30, 10, 50, rng);
  const TrainResult r = fake_result(Variant::Pinn, rng);
  const RunMetrics m = compute_metrics(*p, r, d, p->true_lambda());
  EXPECT_NEAR(m.delta_lambda(0), 0.05, 1e-15);
  EXPECT_DOUBLE_EQ(m.rmse, rmse(*p, r.pinn, d.validation));
  EXPECT_DOUBLE_EQ(m.f2, f2_train(*p, r.pinn, r.lambda, d.train));
  EXPECT_DOUBLE_EQ(m.nll, nll_validation(*p, r, d.train, d.validation));
}
