#pragma once

#include <complex>

namespace spinhole {

/// Faddeeva function w(z) = exp(-z^2) erfc(-iz) for Im z >= 0.
///
/// Weideman's rational expansion with 64 terms; relative accuracy is close
/// to machine precision in the closed upper half plane. Arguments with
/// Im z < 0 are handled through w(z) = 2 exp(-z^2) - w(-z).
std::complex<double> faddeeva(std::complex<double> z);

/// Dawson's integral F(x) = exp(-x^2) * integral_0^x exp(t^2) dt.
double dawson(double x);

}  // namespace spinhole
