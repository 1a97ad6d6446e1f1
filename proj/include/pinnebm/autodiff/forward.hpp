#pragma once

// Directional and mixed derivatives of scalar functions of several inputs.
//
// A "recorded computation" is any callable taking std::span<const Jet<T>>
// and returning a Jet<T>. Mixed partials are recovered by polarization:
// evaluating pure directional jets along e_a ± e_b and combining them.

#include "pinnebm/autodiff/jet.hpp"

#include <span>
#include <string>
#include <vector>

namespace pinnebm::ad {

/// Polarization of second directional derivatives:
/// f_ab = (D²_{a+b} f − D²_{a−b} f) / 4.
template <class T>
T polarize_second(const T& along_sum, const T& along_diff) {
  return (along_sum - along_diff) * 0.25;
}

/// f_aab = (D³_{a+b} f − D³_{a−b} f − 2 D³_b f) / 6.
template <class T>
T polarize_third_aab(const T& along_sum, const T& along_diff, const T& along_b) {
  return (along_sum - along_diff - along_b * 2.0) * (1.0 / 6.0);
}

/// f_abb = (D³_{a+b} f + D³_{a−b} f − 2 D³_a f) / 6.
template <class T>
T polarize_third_abb(const T& along_sum, const T& along_diff, const T& along_a) {
  return (along_sum + along_diff - along_a * 2.0) * (1.0 / 6.0);
}

/// Evaluates f along `point + s * direction` as a jet in s.
template <class F>
Jet<double> directional_jet(F&& f, std::span<const double> point,
                            std::span<const double> direction, int order) {
  if (point.size() != direction.size()) {
    throw StructuralError("direction has " + std::to_string(direction.size()) +
                          " entries for a point of dimension " + std::to_string(point.size()));
  }
  std::vector<Jet<double>> in;
  in.reserve(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) {
    in.push_back(Jet<double>::seed(point[i], direction[i], order));
  }
  return f(std::span<const Jet<double>>(in)).truncated(order);
}

/// Value and derivatives of f along the single seeded input, up to `order`.
/// Orders above `order` are zero-filled in the result.
template <class F>
Jet<double> forward_jet(F&& f, std::span<const Jet<double>> inputs, int order) {
  if (order < 1 || order > Jet<double>::kMaxOrder) {
    throw UnsupportedError("forward_jet order " + std::to_string(order) + " not in 1..3");
  }
  int seeded = 0;
  for (const auto& in : inputs) {
    if (in.d(1) != 0.0) ++seeded;
  }
  if (seeded != 1) {
    throw StructuralError("forward_jet needs exactly one seeded input, got " +
                          std::to_string(seeded));
  }
  std::vector<Jet<double>> truncated;
  truncated.reserve(inputs.size());
  for (const auto& in : inputs) {
    std::array<double, 4> c{in.value(), in.d(1), in.d(2), in.d(3)};
    truncated.push_back(Jet<double>::from(c, order));
  }
  return f(std::span<const Jet<double>>(truncated)).truncated(order);
}

/// ∂²f/∂x_a∂x_b at `point`. Symmetric in (a, b) by construction: the pair
/// is canonicalized before evaluation.
template <class F>
double mixed_second(F&& f, std::span<const double> point, int dir_a, int dir_b) {
  const int dim = static_cast<int>(point.size());
  if (dir_a < 0 || dir_b < 0 || dir_a >= dim || dir_b >= dim) {
    throw StructuralError("mixed_second direction out of range for dimension " +
                          std::to_string(dim));
  }
  if (dir_a == dir_b) throw StructuralError("mixed_second needs two distinct directions");
  const auto lo = static_cast<std::size_t>(std::min(dir_a, dir_b));
  const auto hi = static_cast<std::size_t>(std::max(dir_a, dir_b));
  std::vector<double> plus(point.size(), 0.0);
  std::vector<double> minus(point.size(), 0.0);
  plus[lo] = 1.0;
  plus[hi] = 1.0;
  minus[lo] = 1.0;
  minus[hi] = -1.0;
  const double d_plus = directional_jet(f, point, plus, 2).d(2);
  const double d_minus = directional_jet(f, point, minus, 2).d(2);
  return polarize_second(d_plus, d_minus);
}

}  // namespace pinnebm::ad
