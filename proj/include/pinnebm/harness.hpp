#pragma once

// Config-driven experiments: replicas, sweeps, result tables and per-run
// artifacts for plotting.

#include "pinnebm/metrics.hpp"
#include "pinnebm/noise.hpp"
#include "pinnebm/problems.hpp"
#include "pinnebm/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pinnebm {

enum class SweepParam { Omega, NData, NoiseStrength };

std::string_view to_string(SweepParam p);
SweepParam parse_sweep_param(std::string_view name);

struct Sweep {
  SweepParam param = SweepParam::Omega;
  std::vector<double> values;
};

struct ExperimentConfig {
  ProblemKind problem = ProblemKind::Exponential;
  NoiseKind noise = NoiseKind::Mixture3;
  double f_n = 1.0;
  double noise_shift = 0.0;
  /// Overrides the problem's base noise factor when set.
  std::optional<double> noise_base_scale;
  Index n_data = 200;
  Index n_val = 50;
  Index n_colloc = 2000;
  std::vector<Variant> variants{Variant::Pinn, Variant::PinnOff, Variant::PinnEbm};
  TrainConfig train;
  int n_replicas = 10;
  std::uint64_t seed = 0;
  std::optional<Sweep> sweep;
  std::filesystem::path outdir = "results";
  int workers = 1;
  /// External flow dataset (Navier-Stokes only).
  std::filesystem::path dataset;
  bool export_runs = true;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

using Override = std::pair<std::string, std::string>;

/// Parses `key = value` lines (`#` starts a comment). Overrides are applied
/// after the file, in order. Unknown keys, malformed values and a missing
/// `problem` key raise ConfigError with the key and line number.
ExperimentConfig parse_config(const std::filesystem::path& path, const std::vector<Override>& overrides = {});
ExperimentConfig parse_config_text(const std::string& text, const std::vector<Override>& overrides = {});

/// Every key parse_config accepts.
const std::vector<std::string>& config_keys();

struct RunRecord {
  std::optional<double> sweep_value;
  Variant variant = Variant::Pinn;
  int replica = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  Vector lambda;
  std::optional<double> theta0;
  RunMetrics metrics;
  int ebm_attempts = 0;
};

struct AggregateRow {
  std::optional<double> sweep_value;
  Variant variant = Variant::Pinn;
  std::size_t ok = 0;
  std::size_t failed = 0;
  std::optional<AggregateMetrics> metrics;
};

struct ExperimentResult {
  std::vector<RunRecord> runs;
  std::vector<AggregateRow> aggregates;
  std::size_t lambda_count = 0;
};

/// Seed of the training stream for a replica, decorrelated from the data stream.
std::uint64_t training_seed(std::uint64_t replica_seed);

/// Problem instance and dataset of one replica (all variants share it).
std::pair<std::unique_ptr<Problem>, Dataset> replica_data(const ExperimentConfig& config, std::uint64_t replica_seed);

/// Trains every (sweep value, variant, replica) combination, using up to
/// `workers` threads, and writes results.csv, aggregate.csv and runs/<tag>/
/// under outdir. Output order does not depend on completion order.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Directory name of one run.
std::string run_tag(const ExperimentConfig& config, std::optional<double> sweep_value, Variant variant, int replica);

/// curves.csv, prediction.csv, params.bin and (PINN-EBM) pdf.csv in `dir`.
void export_artifacts(const Problem& problem, const TrainResult& result, const Dataset& data,
                      const std::filesystem::path& dir);

void write_results_csv(const ExperimentConfig& config, const ExperimentResult& result,
                       const std::filesystem::path& path);
void write_aggregate_csv(const ExperimentConfig& config, const ExperimentResult& result,
                         const std::filesystem::path& path);

}  // namespace pinnebm
