#pragma once

// Staged training of PINN, PINN-off and PINN-EBM.

#include "pinnebm/ebm.hpp"
#include "pinnebm/network.hpp"
#include "pinnebm/problems.hpp"
#include "pinnebm/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pinnebm {

enum class Variant { Pinn, PinnOff, PinnEbm };

/// "PINN", "PINN-off", "PINN-EBM".
std::string_view to_string(Variant v);
/// Case-insensitive; '-' and '_' are interchangeable.
Variant parse_variant(std::string_view name);

struct LrDecay {
  double factor = 1.0;
  long at = 0;
};

struct TrainConfig {
  long iterations = 40000;
  long i_ebm = 4000;
  long n_ebm = 2000;
  double omega = 1.0;
  double lr = 0.002;
  std::optional<LrDecay> lr_decay;
  Index batch_data = 200;
  Index batch_colloc = 100;
  long curve_stride = 100;
  /// PINN hidden widths; input and output widths come from the problem.
  std::vector<int> hidden{40, 40, 40, 40};
  EBMConfig ebm;
  std::uint64_t seed = 0;
  /// Starting PDE parameters; the problem's default when unset.
  std::optional<Vector> lambda_init;

  /// Throws StructuralError or CountError when unusable for the variant and data.
  void validate(Variant variant, const Dataset& data) const;
};

enum class DataLossKind { LeastSquares, LeastSquaresOffset, EbmNll };

std::string_view to_string(DataLossKind kind);

struct CurvePoint {
  long iteration = 0;
  double data_loss = 0.0;
  double pde_loss = 0.0;
  double total = 0.0;
  double omega = 0.0;
  double lr = 0.0;
  Vector lambda;
  double theta0 = 0.0;
  DataLossKind kind = DataLossKind::LeastSquares;
  Index trainable = 0;
  /// Residuals clamped to the EBM grid in this step.
  Index clamped = 0;
};

struct TrainResult {
  Variant variant = Variant::Pinn;
  Vector lambda;
  MLP pinn;
  std::optional<double> theta0;
  std::optional<EBMState> ebm;
  std::vector<CurvePoint> curve;
  /// Iteration at which the EBM took over the data loss; -1 if it never did.
  long ebm_switch = -1;
  double wall_seconds = 0.0;
};

/// Draws index batches from [0, pool) as a stream of random permutations:
/// without replacement inside a permutation, reshuffled when exhausted.
class MinibatchSampler {
 public:
  MinibatchSampler(Index pool, Index batch);

  std::vector<Index> next(Rng& rng);

 private:
  Index pool_;
  Index batch_;
  std::vector<Index> perm_;
  std::size_t pos_;
};

double lr_at(const TrainConfig& config, long iteration);

/// Network widths for a problem: input, hidden..., output.
MLPConfig pinn_network(const Problem& problem, const TrainConfig& config);

/// Runs exactly config.iterations steps. The final curve point is an eval-mode
/// evaluation on the full training and collocation sets after the last step.
TrainResult train(const Problem& problem, const Dataset& data, Variant variant, const TrainConfig& config);

/// Residuals y - x_hat at the given samples, flattened channel by channel.
Vector data_residuals(const Problem& problem, const MLP& pinn, const Samples& samples);

}  // namespace pinnebm
