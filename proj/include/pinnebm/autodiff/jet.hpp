#pragma once

// Truncated directional Taylor expansion up to third order.
//
// Jet<T> holds f, f', f'', f''' along one input direction. T is either a
// plain double or an ad::Var, in which case every component is a node on a
// tape and reverse mode runs through the jet arithmetic. Components that are
// known to vanish (e.g. d2 of an affine seed) are tracked structurally and
// never materialized on the tape.

#include "pinnebm/autodiff/tape.hpp"
#include "pinnebm/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <type_traits>

namespace pinnebm::ad {

template <class T>
class Jet {
 public:
  static constexpr int kMaxOrder = 3;

  Jet() = default;

  /// Constant jet: all derivatives vanish.
  static Jet constant(T value, int order) {
    Jet j;
    j.order_ = checked_order(order);
    j.c_[0] = std::move(value);
    j.nz_ = {true, false, false, false};
    return j;
  }

  /// Affine seed x + s*h: d1 = direction, higher orders vanish.
  static Jet seed(T value, T direction, int order) {
    Jet j = constant(std::move(value), order);
    if (order >= 1) {
      j.c_[1] = std::move(direction);
      j.nz_[1] = true;
    }
    return j;
  }

  /// Full jet from explicit components (only the first order+1 are used).
  static Jet from(std::array<T, 4> comps, int order) {
    Jet j;
    j.order_ = checked_order(order);
    for (int k = 0; k <= j.order_; ++k) {
      j.c_[static_cast<std::size_t>(k)] = std::move(comps[static_cast<std::size_t>(k)]);
      j.nz_[static_cast<std::size_t>(k)] = true;
    }
    return j;
  }

  int order() const { return order_; }
  const T& value() const { return c_[0]; }

  /// True when component k is structurally zero (always for k > order).
  bool is_zero(int k) const { return k > order_ || !nz_[static_cast<std::size_t>(k)]; }

  /// k-th directional derivative. Orders above order() read as zero for
  /// doubles; for tape values they are a structural error.
  T d(int k) const {
    if (k < 0 || k > kMaxOrder) throw StructuralError("jet component " + std::to_string(k));
    if (k > order_) {
      if constexpr (std::is_arithmetic_v<T>) {
        return T{0};
      } else {
        throw StructuralError("jet of order " + std::to_string(order_) +
                              " has no derivative of order " + std::to_string(k));
      }
    }
    if (nz_[static_cast<std::size_t>(k)]) return c_[static_cast<std::size_t>(k)];
    return zero_like(c_[0]);
  }

  /// Drops components above `order`.
  Jet truncated(int order) const {
    Jet j = *this;
    j.order_ = std::min(order_, checked_order(order));
    for (int k = j.order_ + 1; k <= kMaxOrder; ++k) j.nz_[static_cast<std::size_t>(k)] = false;
    return j;
  }

  // Raw slot access used by the arithmetic below.
  const std::optional<T> slot(int k) const {
    if (is_zero(k)) return std::nullopt;
    return c_[static_cast<std::size_t>(k)];
  }
  void set_slot(int k, std::optional<T> v) {
    if (k < 0 || k > kMaxOrder) throw StructuralError("jet component " + std::to_string(k));
    nz_[static_cast<std::size_t>(k)] = v.has_value();
    if (v) c_[static_cast<std::size_t>(k)] = std::move(*v);
  }
  void set_order(int order) { order_ = checked_order(order); }

  static T zero_like(const T& v) {
    if constexpr (std::is_arithmetic_v<T>) {
      return T{0};
    } else {
      return v * 0.0;
    }
  }

  static int checked_order(int order) {
    if (order < 0 || order > kMaxOrder) {
      throw UnsupportedError("jet order " + std::to_string(order) + " outside 0..3");
    }
    return order;
  }

 private:
  std::array<T, 4> c_{};
  std::array<bool, 4> nz_{true, false, false, false};
  int order_ = 0;
};

namespace jet_detail {

template <class T>
void add_to(std::optional<T>& acc, const T& term) {
  if (acc) {
    acc = *acc + term;
  } else {
    acc = term;
  }
}

// Chain rule for a univariate g with derivatives g1..g3 at value():
//   (g∘z)'   = g1 z'
//   (g∘z)''  = g2 z'^2 + g1 z''
//   (g∘z)''' = g3 z'^3 + 3 g2 z' z'' + g1 z'''
template <class T, class Derivs>
Jet<T> compose(const Jet<T>& z, T g0, Derivs&& derivs) {
  Jet<T> out = Jet<T>::constant(std::move(g0), z.order());
  const int n = z.order();
  if (n == 0) return out;
  const auto z1 = z.slot(1);
  const auto z2 = z.slot(2);
  const auto z3 = z.slot(3);
  if (!z1 && !z2 && !z3) return out;
  const std::array<T, 3> g = derivs(n);  // g[0] = g1, g[1] = g2 (if n >= 2), g[2] = g3 (if n == 3)

  if (z1) out.set_slot(1, g[0] * *z1);
  if (n >= 2) {
    std::optional<T> d2;
    std::optional<T> z1sq;
    if (z1) {
      z1sq = *z1 * *z1;
      add_to(d2, T(g[1] * *z1sq));
    }
    if (z2) add_to(d2, T(g[0] * *z2));
    out.set_slot(2, d2);
  }
  if (n >= 3) {
    std::optional<T> d3;
    if (z1) add_to(d3, T(g[2] * (*z1 * *z1 * *z1)));
    if (z1 && z2) add_to(d3, T(3.0 * (g[1] * (*z1 * *z2))));
    if (z3) add_to(d3, T(g[0] * *z3));
    out.set_slot(3, d3);
  }
  return out;
}

}  // namespace jet_detail

template <class T>
Jet<T> operator+(const Jet<T>& a, const Jet<T>& b) {
  Jet<T> out = Jet<T>::constant(a.value() + b.value(), std::min(a.order(), b.order()));
  for (int k = 1; k <= out.order(); ++k) {
    auto x = a.slot(k);
    auto y = b.slot(k);
    if (x && y) {
      out.set_slot(k, T(*x + *y));
    } else if (x) {
      out.set_slot(k, x);
    } else {
      out.set_slot(k, y);
    }
  }
  return out;
}

template <class T>
Jet<T> operator-(const Jet<T>& a) {
  Jet<T> out = Jet<T>::constant(-a.value(), a.order());
  for (int k = 1; k <= a.order(); ++k) {
    if (auto x = a.slot(k)) out.set_slot(k, T(-*x));
  }
  return out;
}

template <class T>
Jet<T> operator-(const Jet<T>& a, const Jet<T>& b) {
  Jet<T> out = Jet<T>::constant(a.value() - b.value(), std::min(a.order(), b.order()));
  for (int k = 1; k <= out.order(); ++k) {
    auto x = a.slot(k);
    auto y = b.slot(k);
    if (x && y) {
      out.set_slot(k, T(*x - *y));
    } else if (x) {
      out.set_slot(k, x);
    } else if (y) {
      out.set_slot(k, T(-*y));
    }
  }
  return out;
}

/// Leibniz rule up to third order.
template <class T>
Jet<T> operator*(const Jet<T>& a, const Jet<T>& b) {
  const int n = std::min(a.order(), b.order());
  Jet<T> out = Jet<T>::constant(a.value() * b.value(), n);
  static constexpr int kBinom[4][4] = {{1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};
  for (int k = 1; k <= n; ++k) {
    std::optional<T> acc;
    for (int i = 0; i <= k; ++i) {
      auto x = a.slot(i);
      auto y = b.slot(k - i);
      if (!x || !y) continue;
      T term = *x * *y;
      if (kBinom[k][i] != 1) term = term * static_cast<double>(kBinom[k][i]);
      jet_detail::add_to(acc, term);
    }
    out.set_slot(k, acc);
  }
  return out;
}

/// Scaling by a value that is constant along the jet direction.
template <class T>
Jet<T> operator*(const T& s, const Jet<T>& a) {
  Jet<T> out = Jet<T>::constant(s * a.value(), a.order());
  for (int k = 1; k <= a.order(); ++k) {
    if (auto x = a.slot(k)) out.set_slot(k, T(s * *x));
  }
  return out;
}

template <class T>
Jet<T> operator*(const Jet<T>& a, const T& s) {
  return s * a;
}

template <class T>
  requires(!std::is_same_v<T, double>)
Jet<T> operator*(double s, const Jet<T>& a) {
  Jet<T> out = Jet<T>::constant(a.value() * s, a.order());
  for (int k = 1; k <= a.order(); ++k) {
    if (auto x = a.slot(k)) out.set_slot(k, T(*x * s));
  }
  return out;
}

template <class T>
  requires(!std::is_same_v<T, double>)
Jet<T> operator*(const Jet<T>& a, double s) {
  return s * a;
}

/// Adds a value that is constant along the jet direction.
template <class T>
Jet<T> operator+(const Jet<T>& a, const T& s) {
  Jet<T> out = a;
  out.set_slot(0, T(a.value() + s));
  return out;
}

template <class T>
  requires(!std::is_same_v<T, double>)
Jet<T> operator+(const Jet<T>& a, double s) {
  Jet<T> out = a;
  out.set_slot(0, T(a.value() + s));
  return out;
}

template <class T>
Jet<T> tanh(const Jet<T>& z) {
  using std::tanh;
  T t = tanh(z.value());
  return jet_detail::compose(z, t, [&](int n) {
    std::array<T, 3> g{};
    g[0] = 1.0 - t * t;
    if (n >= 2) g[1] = -2.0 * (t * g[0]);
    if (n >= 3) g[2] = g[0] * (6.0 * (t * t) - 2.0);
    return g;
  });
}

template <class T>
Jet<T> exp(const Jet<T>& z) {
  using std::exp;
  T e = exp(z.value());
  return jet_detail::compose(z, e, [&](int) { return std::array<T, 3>{e, e, e}; });
}

template <class T>
Jet<T> sin(const Jet<T>& z) {
  using std::cos;
  using std::sin;
  T s = sin(z.value());
  return jet_detail::compose(z, s, [&](int n) {
    std::array<T, 3> g{};
    g[0] = cos(z.value());
    if (n >= 2) g[1] = -s;
    if (n >= 3) g[2] = -g[0];
    return g;
  });
}

template <class T>
Jet<T> cos(const Jet<T>& z) {
  using std::cos;
  using std::sin;
  T c = cos(z.value());
  return jet_detail::compose(z, c, [&](int n) {
    std::array<T, 3> g{};
    g[0] = -sin(z.value());
    if (n >= 2) g[1] = -c;
    if (n >= 3) g[2] = -g[0];
    return g;
  });
}

template <class T>
Jet<T> log(const Jet<T>& z) {
  using std::log;
  T l = log(z.value());
  return jet_detail::compose(z, l, [&](int n) {
    std::array<T, 3> g{};
    T inv = 1.0 / z.value();
    g[0] = inv;
    if (n >= 2) g[1] = -(inv * inv);
    if (n >= 3) g[2] = 2.0 * (inv * inv * inv);
    return g;
  });
}

}  // namespace pinnebm::ad
