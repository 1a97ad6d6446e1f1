#include "pinnebm/noise.hpp"

#include "pinnebm/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace pinnebm {

std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::Gaussian: return "G";
    case NoiseKind::Uniform: return "u";
    case NoiseKind::Mixture3: return "3G";
    case NoiseKind::Mixture3ZeroMean: return "3G0";
  }
  return "?";
}

NoiseKind parse_noise_kind(std::string_view name) {
  if (name == "G") return NoiseKind::Gaussian;
  if (name == "u") return NoiseKind::Uniform;
  if (name == "3G") return NoiseKind::Mixture3;
  if (name == "3G0") return NoiseKind::Mixture3ZeroMean;
  throw StructuralError("unknown noise kind '" + std::string(name) + "' (expected G, u, 3G or 3G0)");
}

void NoiseSpec::validate() const {
  if (kind == NoiseKind::Uniform) {
    if (!(high > low)) throw StructuralError("uniform noise needs high > low");
  } else {
    if (components.empty()) throw StructuralError("noise mixture has no components");
    double total = 0.0;
    for (const auto& c : components) {
      if (!(c.weight > 0.0)) throw StructuralError("mixture weights must be positive");
      if (!(c.stddev > 0.0)) throw StructuralError("mixture stddev must be positive");
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) throw StructuralError("mixture weights must sum to 1");
  }
  if (!(base_scale >= 0.0) || !(strength >= 0.0)) {
    throw StructuralError("noise scale factors must be nonnegative");
  }
}

NoiseSpec make_noise(NoiseKind kind, double base_scale, double strength) {
  NoiseSpec s;
  s.kind = kind;
  s.base_scale = base_scale;
  s.strength = strength;
  constexpr double third = 1.0 / 3.0;
  switch (kind) {
    case NoiseKind::Gaussian:
      s.components = {{1.0, 0.0, 2.5}};
      break;
    case NoiseKind::Uniform:
      s.low = 0.0;
      s.high = 10.0;
      break;
    case NoiseKind::Mixture3:
      s.components = {{third, 0.0, 2.0}, {third, 4.0, 4.0}, {third, 8.0, 0.5}};
      break;
    case NoiseKind::Mixture3ZeroMean:
      // 3G moved by its analytic mean (0 + 4 + 8) / 3 = 4.
      s.components = {{third, -4.0, 2.0}, {third, 0.0, 4.0}, {third, 4.0, 0.5}};
      break;
  }
  return s;
}

namespace {

double base_draw(const NoiseSpec& spec, Rng& rng) {
  if (spec.kind == NoiseKind::Uniform) {
    std::uniform_real_distribution<double> u(spec.low, spec.high);
    return u(rng);
  }
  const auto& comps = spec.components;
  std::size_t pick = 0;
  if (comps.size() > 1) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double r = u(rng);
    pick = comps.size() - 1;
    for (std::size_t i = 0; i < comps.size(); ++i) {
      if (r < comps[i].weight) {
        pick = i;
        break;
      }
      r -= comps[i].weight;
    }
  }
  std::normal_distribution<double> g(comps[pick].mean, comps[pick].stddev);
  return g(rng);
}

double base_pdf(const NoiseSpec& spec, double e) {
  if (spec.kind == NoiseKind::Uniform) {
    return (e >= spec.low && e <= spec.high) ? 1.0 / (spec.high - spec.low) : 0.0;
  }
  double p = 0.0;
  for (const auto& c : spec.components) {
    const double z = (e - c.mean) / c.stddev;
    p += c.weight * std::exp(-0.5 * z * z) / (c.stddev * std::sqrt(2.0 * std::numbers::pi));
  }
  return p;
}

}  // namespace

Vector sample(const NoiseSpec& spec, Index n, Rng& rng) {
  spec.validate();
  if (n < 0) throw CountError("negative sample count");
  Vector out(n);
  const double f = spec.factor();
  for (Index i = 0; i < n; ++i) out(i) = spec.shift + f * base_draw(spec, rng);
  return out;
}

double pdf(const NoiseSpec& spec, double eps) {
  spec.validate();
  const double f = spec.factor();
  const double e = eps - spec.shift;
  if (f == 0.0) return e == 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return base_pdf(spec, e / f) / f;
}

double mean(const NoiseSpec& spec) {
  spec.validate();
  double m = 0.0;
  if (spec.kind == NoiseKind::Uniform) {
    m = 0.5 * (spec.low + spec.high);
  } else {
    for (const auto& c : spec.components) m += c.weight * c.mean;
  }
  return spec.shift + spec.factor() * m;
}

double stddev(const NoiseSpec& spec) {
  spec.validate();
  double var = 0.0;
  if (spec.kind == NoiseKind::Uniform) {
    const double w = spec.high - spec.low;
    var = w * w / 12.0;
  } else {
    double m = 0.0;
    double m2 = 0.0;
    for (const auto& c : spec.components) {
      m += c.weight * c.mean;
      m2 += c.weight * (c.stddev * c.stddev + c.mean * c.mean);
    }
    var = m2 - m * m;
  }
  return spec.factor() * std::sqrt(var);
}

}  // namespace pinnebm
