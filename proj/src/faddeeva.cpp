#include "spinhole/faddeeva.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace spinhole {

namespace {

constexpr int kTerms = 64;

struct WeidemanCoefficients {
    double length;
    std::array<double, kTerms> a{};  // a[n - 1] multiplies Z^(n - 1)

    WeidemanCoefficients() {
        const int m = 2 * kTerms;
        length = std::sqrt(kTerms / std::sqrt(2.0));
        std::array<double, 2 * m> f{};
        for (int k = -m + 1; k <= m - 1; ++k) {
            const double t = length * std::tan(k * std::numbers::pi / (2.0 * m));
            f[k + m] = std::exp(-t * t) * (length * length + t * t);
        }
        // f[0] holds k = -m, which is zero.
        for (int n = 1; n <= kTerms; ++n) {
            double sum = 0.0;
            for (int k = -m; k <= m - 1; ++k) {
                sum += f[k + m] * std::cos(std::numbers::pi * k * n / m);
            }
            a[n - 1] = sum / (2.0 * m);
        }
    }
};

const WeidemanCoefficients& coefficients() {
    static const WeidemanCoefficients c;
    return c;
}

}  // namespace

std::complex<double> faddeeva(std::complex<double> z) {
    using namespace std::complex_literals;
    if (z.imag() < 0.0) {
        return 2.0 * std::exp(-z * z) - faddeeva(-z);
    }
    const auto& c = coefficients();
    const std::complex<double> denom = c.length - 1i * z;
    const std::complex<double> zz = (c.length + 1i * z) / denom;
    std::complex<double> poly = 0.0;
    for (int n = kTerms - 1; n >= 0; --n) poly = poly * zz + c.a[n];
    return 2.0 * poly / (denom * denom) + std::numbers::inv_sqrtpi / denom;
}

double dawson(double x) {
    return 0.5 * std::sqrt(std::numbers::pi) * faddeeva({x, 0.0}).imag();
}

}  // namespace spinhole
