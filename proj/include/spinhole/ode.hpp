#pragma once

#include <functional>
#include <span>
#include <vector>

namespace spinhole {

struct OdeOptions {
    double rtol = 1e-9;
    double atol = 1e-14;
    double initial_step = 0.0;  // 0 picks a step from the derivative scale
    long max_steps = 2'000'000;
};

struct OdeSolution {
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    /// Sum of the accepted local error estimates (max-norm), a conservative
    /// bound on the accumulated integration error.
    double error_estimate = 0.0;
    long accepted_steps = 0;
    long rejected_steps = 0;
};

using OdeRhs = std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

/// Dormand-Prince 5(4) with adaptive step control. The solver lands exactly
/// on every requested output time (which must be non-decreasing and start at
/// or after t0). Throws a numerical error if the step size collapses or the
/// step budget runs out.
OdeSolution integrate_dopri(const OdeRhs& rhs, double t0, std::vector<double> y0,
                            std::span<const double> output_times, const OdeOptions& options = {});

}  // namespace spinhole
