#pragma once

// Evaluation metrics of a trained model and their aggregation over runs.

#include "pinnebm/problems.hpp"
#include "pinnebm/trainer.hpp"
#include "pinnebm/types.hpp"

#include <vector>

namespace pinnebm {

struct RunMetrics {
  Vector delta_lambda;
  double rmse = 0.0;
  double nll = 0.0;
  double f2 = 0.0;
};

/// |learned - truth| per component.
Vector delta_lambda(const Vector& learned, const Vector& truth);

/// Root-mean-square of (prediction - truth) pooled over all channels.
double rmse(const Problem& problem, const MLP& pinn, const Samples& eval);

/// Mean negative log-likelihood of the validation targets under the model's
/// noise density: a zero-mean (PINN) or theta0-mean (PINN-off) Gaussian with
/// the 1/N variance of the training residuals, or the learned EBM density.
double nll_validation(const Problem& problem, const TrainResult& result, const Samples& train,
                      const Samples& validation);

/// Gaussian NLL with the given offset and 1/N variance of `train_residuals`
/// about that offset.
double gaussian_nll(const Vector& train_residuals, const Vector& eval_residuals, double offset);

/// Uniform grid of `per_dim` points per input dimension spanning the range of
/// `inputs` (tensor product for several dimensions).
Matrix range_grid(const Matrix& inputs, Index per_dim);

/// Mean squared PDE residual at `points` with the learned lambda.
double f2(const Problem& problem, const MLP& pinn, const Vector& lambda, const Matrix& points);

/// f2 on a 500-point grid (8 per dimension for 3-D inputs) over the training range.
double f2_train(const Problem& problem, const MLP& pinn, const Vector& lambda, const Samples& train);

RunMetrics compute_metrics(const Problem& problem, const TrainResult& result, const Dataset& data,
                           const Vector& true_lambda);

struct Summary {
  double mean = 0.0;
  /// Sample (n-1) standard deviation; NaN for a single value.
  double stddev = 0.0;
};

Summary summarize(const std::vector<double>& values);

struct AggregateMetrics {
  std::vector<Summary> delta_lambda;
  Summary rmse;
  Summary nll;
  Summary f2;
  std::size_t runs = 0;
};

/// Throws CountError for an empty list, StructuralError for mismatched lambda lengths.
AggregateMetrics aggregate(const std::vector<RunMetrics>& runs);

}  // namespace pinnebm
