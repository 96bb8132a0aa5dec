#pragma once

#include <array>

#include "spinhole/levels.hpp"

namespace spinhole {

/// Fractional populations of the eight ground hyperfine states.
struct PopulationState {
    std::array<double, kHyperfineStates> p{};

    static PopulationState uniform();
    /// `fraction` in `target`, the rest shared evenly among the other states.
    static PopulationState polarized(int target, double fraction);
    static PopulationState single(int target) { return polarized(target, 1.0); }

    double sum() const;
    double operator[](int i) const { return p[i]; }

    /// Entries in [0, 1] and sum within `tolerance` of 1.
    bool is_valid(double tolerance = 1e-9) const;
    void validate(double tolerance = 1e-9) const;
};

}  // namespace spinhole
