#include "pinnebm/metrics.hpp"

#include "pinnebm/errors.hpp"
#include "pinnebm/losses.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace pinnebm {

Vector delta_lambda(const Vector& learned, const Vector& truth) {
  if (learned.size() != truth.size()) {
    throw StructuralError("lambda has " + std::to_string(learned.size()) + " components, truth has " +
                          std::to_string(truth.size()));
  }
  return (learned - truth).cwiseAbs();
}

double rmse(const Problem& problem, const MLP& pinn, const Samples& eval) {
  if (eval.truth.size() == 0) throw StructuralError("no ground truth for RMSE");
  ad::Tape tape;
  const BoundMLP net = bind_frozen(tape, pinn);
  const Matrix pred = problem.predict(net, eval.inputs).value();
  if (pred.rows() != eval.truth.rows() || pred.cols() != eval.truth.cols()) {
    throw StructuralError("prediction and truth shapes differ");
  }
  return std::sqrt((pred - eval.truth).array().square().mean());
}

double gaussian_nll(const Vector& train_residuals, const Vector& eval_residuals, double offset) {
  if (train_residuals.size() == 0 || eval_residuals.size() == 0) throw CountError("empty residual set");
  const double var = (train_residuals.array() - offset).square().mean();
  if (!(var > 0.0)) throw DegenerateDataError("training residuals have zero spread about the offset");
  const double quad = (eval_residuals.array() - offset).square().mean();
  return 0.5 * std::log(2.0 * std::numbers::pi * var) + 0.5 * quad / var;
}

double nll_validation(const Problem& problem, const TrainResult& result, const Samples& train,
                      const Samples& validation) {
  const Vector val = data_residuals(problem, result.pinn, validation);
  switch (result.variant) {
    case Variant::Pinn:
      return gaussian_nll(data_residuals(problem, result.pinn, train), val, 0.0);
    case Variant::PinnOff:
      return gaussian_nll(data_residuals(problem, result.pinn, train), val, result.theta0.value_or(0.0));
    case Variant::PinnEbm:
      if (!result.ebm) {
        // The EBM never took over; the model is a plain PINN.
        return gaussian_nll(data_residuals(problem, result.pinn, train), val, 0.0);
      }
      return -ebm_pdf(*result.ebm, val).array().log().mean();
  }
  throw StructuralError("unknown variant");
}

Matrix range_grid(const Matrix& inputs, Index per_dim) {
  if (inputs.cols() == 0) throw CountError("no inputs to span");
  if (per_dim < 1) throw CountError("grid needs at least one point per dimension");
  const Index dims = inputs.rows();
  const Vector lo = inputs.rowwise().minCoeff();
  const Vector hi = inputs.rowwise().maxCoeff();
  Index total = 1;
  for (Index d = 0; d < dims; ++d) total *= per_dim;
  Matrix grid(dims, total);
  for (Index j = 0; j < total; ++j) {
    Index rest = j;
    for (Index d = dims - 1; d >= 0; --d) {
      const Index k = rest % per_dim;
      rest /= per_dim;
      grid(d, j) = per_dim == 1 ? lo(d) : lo(d) + (hi(d) - lo(d)) * static_cast<double>(k) / static_cast<double>(per_dim - 1);
    }
  }
  return grid;
}

double f2(const Problem& problem, const MLP& pinn, const Vector& lambda, const Matrix& points) {
  ad::Tape tape;
  const BoundMLP net = bind_frozen(tape, pinn);
  const std::vector<ad::Var> r = problem.residuals(net, points, tape.constant(Matrix(lambda)));
  return pde_loss(r).scalar();
}

double f2_train(const Problem& problem, const MLP& pinn, const Vector& lambda, const Samples& train) {
  const Index per_dim = train.inputs.rows() == 1 ? 500 : 8;
  return f2(problem, pinn, lambda, range_grid(train.inputs, per_dim));
}

RunMetrics compute_metrics(const Problem& problem, const TrainResult& result, const Dataset& data,
                           const Vector& true_lambda) {
  RunMetrics m;
  m.delta_lambda = delta_lambda(result.lambda, true_lambda);
  m.rmse = rmse(problem, result.pinn, data.validation);
  m.nll = nll_validation(problem, result, data.train, data.validation);
  m.f2 = f2_train(problem, result.pinn, result.lambda, data.train);
  return m;
}

Summary summarize(const std::vector<double>& values) {
  if (values.empty()) throw CountError("nothing to summarize");
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  if (values.size() < 2) return {mean, std::numeric_limits<double>::quiet_NaN()};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

AggregateMetrics aggregate(const std::vector<RunMetrics>& runs) {
  if (runs.empty()) throw CountError("no runs to aggregate");
  const Index k = runs.front().delta_lambda.size();
  AggregateMetrics a;
  a.runs = runs.size();
  std::vector<double> rm, nll, f2v;
  for (const auto& r : runs) {
    if (r.delta_lambda.size() != k) throw StructuralError("runs disagree on the number of parameters");
    rm.push_back(r.rmse);
    nll.push_back(r.nll);
    f2v.push_back(r.f2);
  }
  for (Index c = 0; c < k; ++c) {
    std::vector<double> col;
    for (const auto& r : runs) col.push_back(r.delta_lambda(c));
    a.delta_lambda.push_back(summarize(col));
  }
  a.rmse = summarize(rm);
  a.nll = summarize(nll);
  a.f2 = summarize(f2v);
  return a;
}

}  // namespace pinnebm
