#pragma once

// Homogeneous measurement-noise families with analytic densities and moments.
//
// A draw is  shift + strength * base_scale * e,  e ~ base distribution.

#include "pinnebm/types.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace pinnebm {

enum class NoiseKind {
  Gaussian,          // "G"   N(0, 2.5^2)
  Uniform,           // "u"   U[0, 10]
  Mixture3,          // "3G"  (N(0,2^2) + N(4,4^2) + N(8,0.5^2)) / 3
  Mixture3ZeroMean,  // "3G0" 3G shifted by its mean
};

std::string_view to_string(NoiseKind kind);
/// Accepts G, u, 3G, 3G0 (case-sensitive as written in result tables).
NoiseKind parse_noise_kind(std::string_view name);

struct MixtureComponent {
  double weight;
  double mean;
  double stddev;
};

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Gaussian;
  /// Gaussian and mixture kinds.
  std::vector<MixtureComponent> components;
  /// Uniform kind.
  double low = 0.0;
  double high = 0.0;
  /// Problem-specific base factor f_n^0.
  double base_scale = 1.0;
  /// Sweepable noise strength f_n.
  double strength = 1.0;
  /// Location shift added after scaling (raw units).
  double shift = 0.0;

  double factor() const { return base_scale * strength; }
  /// Throws StructuralError on bad weights or bounds.
  void validate() const;
};

/// The standard family member with the given scale factors.
NoiseSpec make_noise(NoiseKind kind, double base_scale = 1.0, double strength = 1.0);

Vector sample(const NoiseSpec& spec, Index n, Rng& rng);
double pdf(const NoiseSpec& spec, double eps);
double mean(const NoiseSpec& spec);
double stddev(const NoiseSpec& spec);

}  // namespace pinnebm
