#pragma once

// Energy-based model of a one-dimensional homogeneous noise density.
//
// p(eps) = exp(h(z)) / Z / scale,  z = (eps - shift) / scale,
// Z = trapezoid integral of exp(h) over a fixed uniform grid in z.

#include "pinnebm/autodiff/tape.hpp"
#include "pinnebm/network.hpp"
#include "pinnebm/types.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace pinnebm {

struct EBMConfig {
  std::vector<int> hidden{5, 5, 5};
  double dropout = 0.5;
  Index grid_nodes = 201;
  /// Grid margin beyond the extreme normalized residuals.
  double margin = 3.0;
  /// Endpoint density must fall below tau * peak density.
  double tau = 1e-3;
  int max_retries = 3;
  double lr = 0.002;

  MLPConfig network() const;
};

struct EBMDiagnostics {
  int attempts = 0;
  long iterations = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double left_ratio = 0.0;
  double right_ratio = 0.0;
};

struct EBMState {
  MLP energy;
  double shift = 0.0;
  double scale = 1.0;
  /// Normalized quadrature nodes, strictly increasing and uniform.
  Vector grid;
  EBMDiagnostics diagnostics;

  double z_lo() const { return grid(0); }
  double z_hi() const { return grid(grid.size() - 1); }
  double spacing() const { return (z_hi() - z_lo()) / static_cast<double>(grid.size() - 1); }
  double normalize(double eps) const { return (eps - shift) / scale; }
  double denormalize(double z) const { return shift + scale * z; }
};

/// Trapezoid weights for a uniform grid of `nodes` points with spacing `h`.
RowVector trapezoid_weights(Index nodes, double h);

/// log of the trapezoid integral of exp(h) given energies on a uniform grid
/// (1 x N). The maximum energy is subtracted before exponentiating.
ad::Var log_partition(ad::Var energies, double spacing);
double log_partition(const RowVector& energies, double spacing);

/// Energies of the bound network at the state's grid nodes (1 x N_q).
ad::Var grid_energies(const BoundMLP& energy, const EBMState& state,
                      const std::optional<Matrix>& mask = std::nullopt);

double partition(const EBMState& state);

/// Mean negative log-likelihood of raw residuals (1 x N) in raw units.
/// Residuals outside the grid are clamped to the nearest endpoint; the
/// number clamped is reported through `clamped`. With `dropout` set, the grid
/// and the residuals are evaluated in train mode, grid mask drawn first.
ad::Var ebm_data_loss(ad::Var residuals, const BoundMLP& energy, const EBMState& state, Rng* dropout = nullptr,
                      Index* clamped = nullptr);

/// Eval-mode mean NLL of raw residuals.
double ebm_nll(const EBMState& state, const Vector& residuals);

/// Density over raw residuals; zero outside the grid.
double ebm_pdf(const EBMState& state, double eps);
Vector ebm_pdf(const EBMState& state, const Vector& eps);

/// Raw grid locations and densities, suitable for export.
std::pair<Vector, Vector> pdf_table(const EBMState& state);

/// Fits the normalizer and grid to the residuals, then trains a fresh energy
/// network for `iterations` Adam steps. If the density does not decay at both
/// grid ends the fit is repeated from scratch with twice the iterations, up
/// to `max_retries` times.
EBMState init_ebm(const Vector& residuals, long iterations, Rng& rng, const EBMConfig& config = {});

}  // namespace pinnebm
