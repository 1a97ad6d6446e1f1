#pragma once

#include <Eigen/Dense>

#include <random>

namespace pinnebm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

/// Every stochastic routine takes its generator explicitly; one stream per replica.
using Rng = std::mt19937_64;

}  // namespace pinnebm
