#pragma once

// Bounded Levenberg-Marquardt and RMSD-doubling profile intervals.

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace spinhole {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

struct Parameter {
    std::string name;
    double value = 0.0;
    double lower = -kUnbounded;
    double upper = kUnbounded;
    bool fixed = false;
    /// Typical magnitude; 0 means max(|value|, 1).
    double scale = 0.0;
};

/// Residual vector for a full parameter vector (fixed entries included).
using ResidualFunction = std::function<std::vector<double>(std::span<const double>)>;

struct LeastSquaresOptions {
    int max_iterations = 500;
    double gradient_tolerance = 1e-10;  // relative to the initial gradient norm
    double step_tolerance = 1e-12;      // scaled step norm
    bool compute_intervals = true;
    double interval_tolerance = 1e-3;   // relative bisection width
};

struct Interval {
    double low;
    double high;
    bool low_open = false;   // RMSD never doubled before the lower bound
    bool high_open = false;

    bool contains(double x) const { return x >= low && x <= high; }
};

enum class Termination { gradient, step, zero_residual, iteration_cap };

const char* termination_name(Termination t);

struct FitResult {
    std::vector<Parameter> params;  // at the optimum
    std::vector<Interval> intervals;  // one per parameter; fixed ones are degenerate
    double rmsd = 0.0;
    int residual_count = 0;
    int iterations = 0;
    bool converged = false;
    Termination termination = Termination::iteration_cap;
    std::vector<double> cost_history;  // sum of squares after each accepted step
    std::vector<std::string> warnings;

    double value(std::string_view name) const;
    const Interval& interval(std::string_view name) const;
    std::vector<double> values() const;
};

FitResult least_squares(const ResidualFunction& residual, std::vector<Parameter> initial,
                        const LeastSquaresOptions& options = {});

/// Profile intervals: each free parameter is scanned, with the others
/// re-optimized, out to where the RMSD is twice the optimum.
std::vector<Interval> rmsd_doubling_intervals(const FitResult& result, const ResidualFunction& residual,
                                              const LeastSquaresOptions& options = {});

double rmsd(std::span<const double> residuals);

/// Plain-text parameter table with intervals and convergence summary.
std::string format_report(const FitResult& result);

}  // namespace spinhole
