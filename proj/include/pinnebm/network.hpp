#pragma once

// Fully-connected tanh networks evaluated on the tape, with affine
// input/output normalization and optional dropout before the last layer.

#include "pinnebm/autodiff/jet.hpp"
#include "pinnebm/autodiff/params.hpp"
#include "pinnebm/autodiff/tape.hpp"
#include "pinnebm/types.hpp"

#include <filesystem>
#include <optional>
#include <vector>

namespace pinnebm {

struct MLPConfig {
  /// input, hidden..., output
  std::vector<int> widths;
  /// Inverted dropout applied to the last hidden activation in train mode.
  double dropout_before_last = 0.0;

  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }
  int linear_layers() const { return static_cast<int>(widths.size()) - 1; }
  /// Throws StructuralError unless there is at least one hidden layer and
  /// every width is positive.
  void validate() const;
};

/// apply(x) = (x - shift) / scale per dimension.
struct Normalizer {
  Vector input_shift;
  Vector input_scale;
  Vector output_shift;
  Vector output_scale;

  static Normalizer identity(int input_dim, int output_dim);

  Matrix normalize_input(const Matrix& x) const;
  Matrix denormalize_input(const Matrix& z) const;
  Matrix normalize_output(const Matrix& y) const;
  Matrix denormalize_output(const Matrix& z) const;
};

/// Affine maps sending the per-dimension sample min/max to [-1, 1].
Normalizer fit_normalizer(const Matrix& inputs, const Matrix& outputs);

struct MLP {
  MLPConfig config;
  ad::ParamVector params;
  Normalizer normalizer;

  Index parameter_count() const { return params.values.size(); }
};

ad::ParamLayout mlp_layout(const MLPConfig& config);

/// Glorot-uniform weights, zero biases, identity normalizer.
MLP init_mlp(const MLPConfig& config, Rng& rng);

enum class Mode { Train, Eval };

/// Network parameters as tape nodes.
struct BoundMLP {
  const MLP* mlp = nullptr;
  std::vector<ad::Var> weights;
  std::vector<ad::Var> biases;
};

/// Registers parameters as trainable leaves with gradient slots starting at `offset`.
BoundMLP bind(ad::Tape& tape, const MLP& mlp, Index offset);
/// Records parameters as constants (no gradient).
BoundMLP bind_frozen(ad::Tape& tape, const MLP& mlp);

/// Dropout mask over the last hidden layer (units x columns), pre-scaled by
/// 1/(1-p), drawn independently per unit and column. Empty when dropout is off.
std::optional<Matrix> sample_dropout_mask(const MLPConfig& config, Index columns, Rng& rng);

/// Forward pass of a jet whose components are (input_dim x N) blocks in raw
/// input units; returns (output_dim x N) components in raw output units.
ad::Jet<ad::Var> forward(const BoundMLP& net, const ad::Jet<ad::Var>& input,
                         const std::optional<Matrix>& mask = std::nullopt);

/// Value-only forward pass of raw inputs (input_dim x N).
ad::Var forward(const BoundMLP& net, ad::Var input, const std::optional<Matrix>& mask = std::nullopt);

/// Value-only forward pass; in train mode a fresh dropout mask is drawn.
ad::Var forward(const BoundMLP& net, ad::Var input, Mode mode, Rng& rng);

/// Jet of the network output along `direction` (raw input units) at every
/// column of `inputs`.
ad::Jet<ad::Var> directional(const BoundMLP& net, const Matrix& inputs, const Vector& direction,
                             int order, const std::optional<Matrix>& mask = std::nullopt);

/// Eval-mode outputs for a batch of raw inputs, off the training tape.
Matrix evaluate(const MLP& mlp, const Matrix& inputs);

/// Writes one JSON header line (layout, widths, normalizer) followed by the
/// parameters as little-endian 64-bit floats.
void save_params(const MLP& mlp, const std::filesystem::path& path);
MLP load_params(const std::filesystem::path& path);

}  // namespace pinnebm
