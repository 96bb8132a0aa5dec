#include "spinhole/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "spinhole/error.hpp"

namespace spinhole {

namespace {

// Dormand-Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - b* (difference between fifth- and fourth-order weights)
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

OdeSolution integrate_dopri(const OdeRhs& rhs, double t0, std::vector<double> y0,
                            std::span<const double> output_times, const OdeOptions& options) {
    const std::size_t n = y0.size();
    OdeSolution sol;
    if (!(options.rtol > 0.0) || !(options.atol >= 0.0)) {
        fail(ErrorCategory::invalid_config, "integrator tolerances must be positive");
    }
    for (std::size_t i = 0; i < output_times.size(); ++i) {
        if (output_times[i] < t0 || (i > 0 && output_times[i] < output_times[i - 1])) {
            fail(ErrorCategory::invalid_config, "output times must be non-decreasing and >= t0");
        }
    }

    std::vector<double> y = std::move(y0);
    std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), y5(n);
    double t = t0;
    rhs(t, y, k1);

    auto error_norm = [&](double h) {
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double err = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double scale = options.atol + options.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
            worst = std::max(worst, std::abs(err) / scale);
        }
        return worst;
    };
    auto abs_error = [&](double h) {
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            worst = std::max(worst, std::abs(h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                                  e6 * k6[i] + e7 * k7[i])));
        }
        return worst;
    };

    double h = options.initial_step;
    if (!(h > 0.0)) {
        double dmax = 0.0, ymax = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            dmax = std::max(dmax, std::abs(k1[i]));
            ymax = std::max(ymax, std::abs(y[i]));
        }
        h = dmax > 0.0 ? 0.01 * std::max(ymax, options.atol) / dmax : 1.0;
        h *= std::pow(options.rtol, 0.2);
    }

    for (double target : output_times) {
        while (t < target) {
            if (sol.accepted_steps + sol.rejected_steps >= options.max_steps) {
                fail(ErrorCategory::numerical,
                     fmt::format("integrator step budget ({}) exhausted at t = {:.6g} (target {:.6g}, h = {:.3g})",
                                 options.max_steps, t, target, h));
            }
            const bool last = t + h >= target;
            const double step = last ? target - t : h;
            if (step <= std::abs(t) * 4.0 * std::numeric_limits<double>::epsilon()) {
                fail(ErrorCategory::numerical,
                     fmt::format("integrator step size collapsed at t = {:.6g} (h = {:.3g}, rtol = {:.3g})", t,
                                 step, options.rtol));
            }

            for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + step * a21 * k1[i];
            rhs(t + c2 * step, tmp, k2);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + step * (a31 * k1[i] + a32 * k2[i]);
            rhs(t + c3 * step, tmp, k3);
            for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + step * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
            rhs(t + c4 * step, tmp, k4);
            for (std::size_t i = 0; i < n; ++i)
                tmp[i] = y[i] + step * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
            rhs(t + c5 * step, tmp, k5);
            for (std::size_t i = 0; i < n; ++i)
                tmp[i] = y[i] + step * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
            rhs(t + step, tmp, k6);
            for (std::size_t i = 0; i < n; ++i)
                y5[i] = y[i] + step * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
            rhs(t + step, y5, k7);

            const double err = error_norm(step);
            if (err <= 1.0) {
                sol.error_estimate += abs_error(step);
                t = last ? target : t + step;
                y.swap(y5);
                k1.swap(k7);  // first-same-as-last
                ++sol.accepted_steps;
            } else {
                ++sol.rejected_steps;
            }
            const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            // Keep the unclipped step when the last step was shortened to hit an output time.
            if (!(last && err <= 1.0)) h = step * factor;
            else h = std::max(h, step * factor);
        }
        sol.times.push_back(target);
        sol.states.push_back(y);
    }
    return sol;
}

}  // namespace spinhole
