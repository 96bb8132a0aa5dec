#include "spinhole/population.hpp"

#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "spinhole/error.hpp"

namespace spinhole {

PopulationState PopulationState::uniform() {
    PopulationState s;
    s.p.fill(1.0 / kHyperfineStates);
    return s;
}

PopulationState PopulationState::polarized(int target, double fraction) {
    if (target < 0 || target >= kHyperfineStates) {
        fail(ErrorCategory::domain, fmt::format("hyperfine index {} out of range", target));
    }
    if (!(fraction >= 0.0 && fraction <= 1.0)) {
        fail(ErrorCategory::invalid_state, "polarized fraction must lie in [0, 1]");
    }
    PopulationState s;
    s.p.fill((1.0 - fraction) / (kHyperfineStates - 1));
    s.p[target] = fraction;
    return s;
}

double PopulationState::sum() const { return std::accumulate(p.begin(), p.end(), 0.0); }

bool PopulationState::is_valid(double tolerance) const {
    for (double x : p) {
        if (!(x >= -tolerance && x <= 1.0 + tolerance)) return false;
    }
    return std::abs(sum() - 1.0) <= tolerance;
}

void PopulationState::validate(double tolerance) const {
    if (!is_valid(tolerance)) {
        fail(ErrorCategory::invalid_state,
             fmt::format("population state [{:.6g}] is not normalized (sum {:.12g})",
                         fmt::join(p, ", "), sum()));
    }
}

}  // namespace spinhole
