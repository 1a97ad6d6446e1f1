#pragma once

#include "pinnebm/autodiff/tape.hpp"

#include <span>

namespace pinnebm {

struct LossBreakdown {
  double data_loss = 0.0;
  double pde_loss = 0.0;
  double total = 0.0;
  double omega_used = 0.0;
};

/// mean((prediction - target)^2) over every entry.
ad::Var data_loss_ls(ad::Var predictions, ad::Var targets);

/// mean((prediction + theta0 - target)^2); theta0 is 1x1.
ad::Var data_loss_ls_offset(ad::Var predictions, ad::Var theta0, ad::Var targets);

/// Mean of squared residuals pooled over all rows passed in.
ad::Var pde_loss(std::span<const ad::Var> residuals);

/// data + omega * pde on the tape. Throws StructuralError for omega < 0.
ad::Var total_loss(ad::Var data, ad::Var pde, double omega);

LossBreakdown breakdown(double data, double pde, double omega);

}  // namespace pinnebm
