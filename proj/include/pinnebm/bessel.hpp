#pragma once

namespace pinnebm {

/// Bessel functions of the first kind, orders 0 and 1, absolute error
/// below 1e-10 on the real line. Power series for |z| <= 8, normalized
/// Miller backward recurrence beyond.
double bessel_j0(double z);
double bessel_j1(double z);

}  // namespace pinnebm
