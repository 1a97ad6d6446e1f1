#pragma once

// Differential-equation problems: analytic truths, residual operators over
// jets, synthetic data generation and ingestion of an external flow dataset.

#include "pinnebm/autodiff/jet.hpp"
#include "pinnebm/network.hpp"
#include "pinnebm/noise.hpp"
#include "pinnebm/types.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pinnebm {

enum class ProblemKind { Exponential, Bessel, NavierStokes };

std::string_view to_string(ProblemKind kind);
/// Accepts exp, bessel, ns.
ProblemKind parse_problem_kind(std::string_view name);

struct Domain {
  Vector lower;
  Vector upper;
};

/// Inputs are (input_dim x N); targets and truth are (measured_dim x N).
struct Samples {
  Matrix inputs;
  Matrix targets;
  Matrix truth;

  Index size() const { return inputs.cols(); }
};

struct Dataset {
  Samples train;
  Samples validation;
  Matrix collocation;
};

// ---------------------------------------------------------------------------
// Residual operators, generic over double and tape values.

inline double true_solution_exp(double t, double lambda) { return std::exp(lambda * t); }

/// x' - lambda x
template <class T>
T residual_exp(const ad::Jet<T>& x, const T& lambda) {
  if (x.order() < 1) throw StructuralError("exponential residual needs a first-order jet");
  return x.d(1) - lambda * x.value();
}

/// Bessel's equation in the scaled variable z = lambda t, written with
/// t-derivatives: t^2 x'' + t x' + ((lambda t)^2 - nu^2) x. Zero on J_nu(lambda t).
template <class T, class U>
T residual_bessel(const ad::Jet<T>& x, const T& lambda, const U& t, double nu) {
  if (x.order() < 2) throw StructuralError("Bessel residual needs a second-order jet");
  const T lt = lambda * t;
  return t * t * x.d(2) + t * x.d(1) + (lt * lt - nu * nu) * x.value();
}

/// Derivatives of the stream function psi and pressure p needed by the
/// momentum residuals; u = psi_y, v = -psi_x.
template <class T>
struct StreamBundle {
  std::optional<T> psi_x, psi_y;
  std::optional<T> psi_tx, psi_ty;
  std::optional<T> psi_xx, psi_xy, psi_yy;
  std::optional<T> psi_xxx, psi_xxy, psi_xyy, psi_yyy;
  std::optional<T> p_x, p_y;
};

namespace detail {
template <class T>
const T& need(const std::optional<T>& v, const char* name) {
  if (!v) throw StructuralError(std::string("Navier-Stokes residual is missing ") + name);
  return *v;
}
}  // namespace detail

/// Momentum residuals
///   r_u = u_t + l1 (u u_x + v u_y) + p_x - l2 (u_xx + u_yy)
///   r_v = v_t + l1 (u v_x + v v_y) + p_y - l2 (v_xx + v_yy)
template <class T>
std::pair<T, T> residual_ns(const StreamBundle<T>& b, const T& lambda1, const T& lambda2) {
  using detail::need;
  const T& u = need(b.psi_y, "psi_y");
  const T v = -need(b.psi_x, "psi_x");
  const T& u_t = need(b.psi_ty, "psi_ty");
  const T& u_x = need(b.psi_xy, "psi_xy");
  const T& u_y = need(b.psi_yy, "psi_yy");
  const T& u_xx = need(b.psi_xxy, "psi_xxy");
  const T& u_yy = need(b.psi_yyy, "psi_yyy");
  const T v_t = -need(b.psi_tx, "psi_tx");
  const T v_x = -need(b.psi_xx, "psi_xx");
  const T v_y = -need(b.psi_xy, "psi_xy");
  const T v_xx = -need(b.psi_xxx, "psi_xxx");
  const T v_yy = -need(b.psi_xyy, "psi_xyy");
  const T& p_x = need(b.p_x, "p_x");
  const T& p_y = need(b.p_y, "p_y");
  T r_u = u_t + lambda1 * (u * u_x + v * u_y) + p_x - lambda2 * (u_xx + u_yy);
  T r_v = v_t + lambda1 * (u * v_x + v * v_y) + p_y - lambda2 * (v_xx + v_yy);
  return {r_u, r_v};
}

/// Stream-function bundle of a (t, x, y) -> (psi, p) network at every column
/// of `inputs`, assembled from directional jets by polarization.
StreamBundle<ad::Var> stream_bundle(const BoundMLP& net, const Matrix& inputs,
                                    const std::optional<Matrix>& mask = std::nullopt);

// ---------------------------------------------------------------------------

class Problem {
 public:
  virtual ~Problem() = default;

  virtual ProblemKind kind() const = 0;
  /// Learnable PDE parameters at their true values.
  virtual Vector true_lambda() const = 0;
  /// Starting values of the learnable parameters.
  virtual Vector initial_lambda() const { return Vector::Zero(true_lambda().size()); }
  virtual int input_dim() const = 0;
  virtual int network_output_dim() const = 0;
  /// Number of measured output channels.
  virtual int measured_dim() const = 0;
  virtual Domain domain() const = 0;
  /// Base noise factor f_n^0 for this problem.
  virtual double noise_base_scale() const = 0;
  virtual std::vector<std::string> input_names() const = 0;
  virtual std::vector<std::string> measured_names() const = 0;

  virtual bool has_analytic_solution() const = 0;
  /// Noise-free measured channels at `inputs`.
  virtual Matrix solution(const Matrix& inputs) const = 0;

  /// Network prediction of the measured channels (measured_dim x N).
  virtual ad::Var predict(const BoundMLP& net, const Matrix& inputs,
                          const std::optional<Matrix>& mask = std::nullopt) const = 0;
  /// PDE residual rows (each 1 x N) at collocation inputs.
  virtual std::vector<ad::Var> residuals(const BoundMLP& net, const Matrix& collocation,
                                         ad::Var lambda) const = 0;
};

std::unique_ptr<Problem> make_problem(ProblemKind kind);

/// N points evenly spaced over [lo, hi], endpoints included.
Vector linspace(double lo, double hi, Index n);

/// Uniform random train/validation inputs, noisy measurements, collocation
/// on a uniform grid. Navier-Stokes is not supported (use ingestion).
Dataset synth_dataset(const Problem& problem, const NoiseSpec& noise, Index n_data, Index n_val,
                      Index n_colloc, Rng& rng);

/// Rows of an external flow dataset: inputs (t, x, y), outputs (u, v, p).
struct FlowTable {
  Matrix inputs;   // 3 x rows
  Matrix outputs;  // 3 x rows
};

/// Parses CSV with header `t,x,y,u,v,p`; `#` lines and blank lines skipped.
FlowTable read_flow_csv(const std::filesystem::path& path);

/// Subsamples train/validation rows without replacement and disjointly, adds
/// noise to u and v, and subsamples collocation inputs from all rows.
Dataset load_external_dataset(const std::filesystem::path& path, Index n_data, Index n_val,
                              Index n_colloc, Rng& rng, const NoiseSpec& noise);

/// Navier-Stokes problem with its domain taken from a dataset's inputs.
std::unique_ptr<Problem> make_navier_stokes(const Domain& domain);

}  // namespace pinnebm
