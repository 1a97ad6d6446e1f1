#include "pinnebm/losses.hpp"

#include "pinnebm/errors.hpp"

#include <cmath>

namespace pinnebm {

using ad::Var;

namespace {

void check_pair(Var a, Var b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw StructuralError("prediction is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                          ", target is " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
  if (a.value().size() == 0) throw CountError("empty data batch");
}

void check_omega(double omega) {
  if (!(omega >= 0.0)) throw StructuralError("PDE weight must be nonnegative, got " + std::to_string(omega));
}

}  // namespace

Var data_loss_ls(Var predictions, Var targets) {
  check_pair(predictions, targets);
  return ad::mean(ad::square(predictions - targets));
}

Var data_loss_ls_offset(Var predictions, Var theta0, Var targets) {
  check_pair(predictions, targets);
  if (theta0.value().size() != 1) throw StructuralError("offset must be a scalar");
  return ad::mean(ad::square(predictions + theta0 - targets));
}

Var pde_loss(std::span<const Var> residuals) {
  if (residuals.empty()) throw CountError("no residual rows");
  ad::Index count = 0;
  Var acc;
  for (const Var& r : residuals) {
    if (r.value().size() == 0) throw CountError("empty collocation batch");
    count += r.value().size();
    const Var s = ad::sum(ad::square(r));
    acc = acc.valid() ? acc + s : s;
  }
  return acc * (1.0 / static_cast<double>(count));
}

Var total_loss(Var data, Var pde, double omega) {
  check_omega(omega);
  return data + pde * omega;
}

LossBreakdown breakdown(double data, double pde, double omega) {
  check_omega(omega);
  return {data, pde, data + omega * pde, omega};
}

}  // namespace pinnebm
