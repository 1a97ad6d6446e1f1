#include "pinnebm/ebm.hpp"

#include "pinnebm/autodiff/adam.hpp"
#include "pinnebm/errors.hpp"

#include <cmath>
#include <sstream>

namespace pinnebm {

using ad::Var;

MLPConfig EBMConfig::network() const {
  MLPConfig cfg;
  cfg.widths.push_back(1);
  cfg.widths.insert(cfg.widths.end(), hidden.begin(), hidden.end());
  cfg.widths.push_back(1);
  cfg.dropout_before_last = dropout;
  return cfg;
}

RowVector trapezoid_weights(Index nodes, double h) {
  if (nodes < 2) throw StructuralError("quadrature grid needs at least two nodes");
  RowVector w = RowVector::Constant(nodes, h);
  w(0) = 0.5 * h;
  w(nodes - 1) = 0.5 * h;
  return w;
}

Var log_partition(Var energies, double spacing) {
  if (energies.rows() != 1) throw StructuralError("grid energies must be a single row");
  ad::Tape& tape = *energies.tape();
  const double top = energies.value().maxCoeff();
  if (!std::isfinite(top)) throw NumericError("non-finite energy on the quadrature grid");
  const Var weights = tape.constant(Matrix(trapezoid_weights(energies.cols(), spacing)));
  return ad::log(ad::sum(ad::exp(energies - top) * weights)) + top;
}

double log_partition(const RowVector& energies, double spacing) {
  const double top = energies.maxCoeff();
  if (!std::isfinite(top)) throw NumericError("non-finite energy on the quadrature grid");
  const RowVector w = trapezoid_weights(energies.size(), spacing);
  return std::log(((energies.array() - top).exp() * w.array()).sum()) + top;
}

Var grid_energies(const BoundMLP& energy, const EBMState& state, const std::optional<Matrix>& mask) {
  if (energy.weights.empty()) throw StructuralError("unbound energy network");
  ad::Tape& tape = *energy.weights.front().tape();
  return forward(energy, tape.constant(Matrix(state.grid.transpose())), mask);
}

namespace {

void require_initialized(const EBMState& state) {
  if (state.grid.size() < 2 || state.energy.params.values.size() == 0) {
    throw StructuralError("EBM state is not initialized");
  }
}

RowVector eval_energies(const EBMState& state, const Matrix& z) { return evaluate(state.energy, z); }

}  // namespace

double partition(const EBMState& state) {
  require_initialized(state);
  return std::exp(log_partition(RowVector(eval_energies(state, state.grid.transpose())), state.spacing()));
}

Var ebm_data_loss(Var residuals, const BoundMLP& energy, const EBMState& state, Rng* dropout,
                  Index* clamped) {
  require_initialized(state);
  if (residuals.rows() != 1) throw StructuralError("EBM residuals must be a single row");
  if (residuals.cols() == 0) throw CountError("empty residual batch");
  const Var z = (residuals - state.shift) * (1.0 / state.scale);
  if (clamped) {
    const auto& v = z.value().array();
    *clamped = ((v < state.z_lo()) || (v > state.z_hi())).count();
  }
  const Var zc = ad::clamp(z, state.z_lo(), state.z_hi());
  const MLPConfig& cfg = energy.mlp->config;
  std::optional<Matrix> grid_mask, data_mask;
  if (dropout) {
    grid_mask = sample_dropout_mask(cfg, state.grid.size(), *dropout);
    data_mask = sample_dropout_mask(cfg, zc.cols(), *dropout);
  }
  const Var log_z = log_partition(grid_energies(energy, state, grid_mask), state.spacing());
  const Var h = forward(energy, zc, data_mask);
  return log_z - ad::mean(h) + std::log(state.scale);
}

double ebm_nll(const EBMState& state, const Vector& residuals) {
  if (residuals.size() == 0) throw CountError("empty residual batch");
  ad::Tape tape;
  const BoundMLP net = bind_frozen(tape, state.energy);
  return ebm_data_loss(tape.constant(Matrix(residuals.transpose())), net, state).scalar();
}

Vector ebm_pdf(const EBMState& state, const Vector& eps) {
  require_initialized(state);
  const double log_z = log_partition(RowVector(eval_energies(state, state.grid.transpose())), state.spacing());
  Vector out = Vector::Zero(eps.size());
  Matrix z(1, eps.size());
  for (Index i = 0; i < eps.size(); ++i) z(0, i) = state.normalize(eps(i));
  const Matrix h = eval_energies(state, z);
  for (Index i = 0; i < eps.size(); ++i) {
    if (z(0, i) >= state.z_lo() && z(0, i) <= state.z_hi()) {
      out(i) = std::exp(h(0, i) - log_z) / state.scale;
    }
  }
  return out;
}

double ebm_pdf(const EBMState& state, double eps) { return ebm_pdf(state, Vector::Constant(1, eps))(0); }

std::pair<Vector, Vector> pdf_table(const EBMState& state) {
  require_initialized(state);
  const double log_z = log_partition(RowVector(eval_energies(state, state.grid.transpose())), state.spacing());
  const RowVector h = eval_energies(state, state.grid.transpose());
  Vector eps(state.grid.size());
  Vector density(state.grid.size());
  for (Index i = 0; i < state.grid.size(); ++i) {
    eps(i) = state.denormalize(state.grid(i));
    density(i) = std::exp(h(i) - log_z) / state.scale;
  }
  return {eps, density};
}

namespace {

void train_energy(EBMState& state, const Matrix& residual_row, long iterations, Rng& rng,
                  const EBMConfig& config) {
  ad::AdamState adam(state.energy.parameter_count());
  ad::AdamHyper hyper;
  hyper.lr = config.lr;
  ad::Tape tape;
  for (long it = 0; it < iterations; ++it) {
    tape.clear();
    const BoundMLP net = bind(tape, state.energy, 0);
    const Var l = ebm_data_loss(tape.constant(residual_row), net, state, &rng);
    if (!std::isfinite(l.scalar())) {
      throw NumericError("EBM loss is not finite at initialization step " + std::to_string(it));
    }
    adam_step(state.energy.params.values, tape.backward(l), adam, hyper);
  }
}

}  // namespace

EBMState init_ebm(const Vector& residuals, long iterations, Rng& rng, const EBMConfig& config) {
  if (residuals.size() < 2) throw DegenerateDataError("EBM initialization needs at least two residuals");
  if (iterations < 0) throw CountError("negative EBM iteration count");
  if (config.grid_nodes < 2) throw StructuralError("EBM grid needs at least two nodes");
  if (!residuals.allFinite()) throw NumericError("non-finite residual passed to EBM initialization");

  const double mu = residuals.mean();
  const double sd = std::sqrt((residuals.array() - mu).square().mean());
  if (!(sd > 0.0)) throw DegenerateDataError("residuals have zero spread");

  EBMState state;
  state.shift = mu;
  state.scale = sd;
  const Vector z = (residuals.array() - mu) / sd;
  state.grid = Vector::LinSpaced(config.grid_nodes, z.minCoeff() - config.margin, z.maxCoeff() + config.margin);
  const Matrix residual_row = residuals.transpose();

  std::ostringstream history;
  long budget = iterations;
  for (int attempt = 0; attempt <= config.max_retries; ++attempt, budget *= 2) {
    state.energy = init_mlp(config.network(), rng);
    EBMDiagnostics& diag = state.diagnostics;
    diag.attempts = attempt + 1;
    diag.iterations = budget;
    diag.initial_loss = ebm_nll(state, residuals);
    train_energy(state, residual_row, budget, rng, config);
    diag.final_loss = ebm_nll(state, residuals);
    const auto [eps, density] = pdf_table(state);
    const double peak = density.maxCoeff();
    diag.left_ratio = density(0) / peak;
    diag.right_ratio = density(density.size() - 1) / peak;
    if (diag.left_ratio < config.tau && diag.right_ratio < config.tau) return state;
    history << " [attempt " << attempt + 1 << ": " << budget << " iterations, endpoint/peak "
            << diag.left_ratio << " / " << diag.right_ratio << "]";
  }
  throw InitFailureError("EBM density did not decay at the grid ends (tau " + std::to_string(config.tau) +
                         "):" + history.str());
}

}  // namespace pinnebm
