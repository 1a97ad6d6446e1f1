#include "pinnebm/bessel.hpp"

#include <cmath>

namespace pinnebm {

namespace {

constexpr double kSeriesLimit = 8.0;

// sum_k (-1)^k (z/2)^(2k+n) / (k! (k+n)!)
double series(int n, double z) {
  const double half = 0.5 * z;
  const double q = -half * half;
  double term = n == 0 ? 1.0 : half;
  double sum = term;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * static_cast<double>(k + n));
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

struct J01 {
  double j0;
  double j1;
};

// Backward recurrence J_{k-1} = (2k/z) J_k - J_{k+1} from a high even start,
// normalized with J_0 + 2 sum_k J_{2k} = 1.
J01 miller(double z) {
  const int start = 2 * static_cast<int>(std::ceil(0.5 * (z + 20.0 + 10.0 * std::cbrt(z))));
  double next = 0.0;   // J_{k+1}
  double cur = 1e-300; // J_k
  double norm = 0.0;
  double j1 = 0.0;
  for (int k = start; k >= 1; --k) {
    const double prev = (2.0 * k / z) * cur - next;
    next = cur;
    cur = prev;  // now J_{k-1}
    if (k - 1 == 1) j1 = cur;
    if ((k - 1) % 2 == 0 && k - 1 > 0) norm += 2.0 * cur;
    if (std::abs(cur) > 1e250) {
      cur *= 1e-250;
      next *= 1e-250;
      norm *= 1e-250;
      j1 *= 1e-250;
    }
  }
  norm += cur;  // J_0
  return {cur / norm, j1 / norm};
}

}  // namespace

double bessel_j0(double z) {
  z = std::abs(z);
  if (z <= kSeriesLimit) return series(0, z);
  return miller(z).j0;
}

double bessel_j1(double z) {
  const double sign = z < 0.0 ? -1.0 : 1.0;
  z = std::abs(z);
  if (z <= kSeriesLimit) return sign * series(1, z);
  return sign * miller(z).j1;
}

}  // namespace pinnebm
