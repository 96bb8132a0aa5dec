#include "spinhole/levels.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <string>

#include <fmt/format.h>

#include "spinhole/error.hpp"

namespace spinhole {

std::string m_label(int index) {
    if (index < 0 || index >= kHyperfineStates) {
        fail(ErrorCategory::domain, fmt::format("hyperfine index {} out of range", index));
    }
    const int twice = 2 * index - 7;
    return fmt::format("{}{}/2", twice < 0 ? "-" : "+", std::abs(twice));
}

int m_index_from_label(std::string_view label) {
    auto bad = [&] {
        fail(ErrorCategory::invalid_config, fmt::format("cannot parse m_I label '{}'", label));
    };
    while (!label.empty() && label.front() == ' ') label.remove_prefix(1);
    while (!label.empty() && label.back() == ' ') label.remove_suffix(1);
    if (label.empty()) bad();

    double m = 0.0;
    if (const auto slash = label.find('/'); slash != std::string_view::npos) {
        std::string_view num = label.substr(0, slash);
        if (!num.empty() && num.front() == '+') num.remove_prefix(1);
        int numerator = 0;
        const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), numerator);
        if (ec != std::errc{} || ptr != num.data() + num.size() || label.substr(slash + 1) != "2") bad();
        m = numerator / 2.0;
    } else {
        std::string text(label);
        char* end = nullptr;
        m = std::strtod(text.c_str(), &end);
        if (end != text.c_str() + text.size()) bad();
    }
    const double index = m + 3.5;
    if (index < 0 || index > 7 || index != std::floor(index)) bad();
    return static_cast<int>(index);
}

double oscillator_strength(int delta_m, int ground, const StrengthModel& model,
                           bool include_branching) {
    if (ground < 0 || ground >= kHyperfineStates) {
        fail(ErrorCategory::domain, fmt::format("ground index {} out of range", ground));
    }
    const int excited = ground + delta_m;
    if (excited < 0 || excited >= kHyperfineStates) {
        fail(ErrorCategory::domain,
             fmt::format("transition from {} with delta_m {} leaves the ladder", m_label(ground), delta_m));
    }
    const int order = std::abs(delta_m);
    if (order > 3) {
        fail(ErrorCategory::unsupported, fmt::format("|delta_m| = {} is not modelled", order));
    }
    if (order >= 2 && !include_branching) {
        fail(ErrorCategory::unsupported,
             fmt::format("delta_m = {} needs the branching extension", delta_m));
    }
    if (order == 0) return 1.0;

    // Position along the band: the Delta m = +1 band starts at ground -7/2,
    // the Delta m = -1 band at excited -7/2 (ground -5/2).
    const double factor = delta_m > 0 ? model.plus_one.at_position(ground)
                                      : model.minus_one.at_position(ground - 1);
    return std::pow(factor, order);
}

void IsotopeComposition::validate() const {
    if (!(target_fraction >= 0.0 && target_fraction <= 1.0)) {
        fail(ErrorCategory::invalid_config, "isotope target fraction must lie in [0, 1]");
    }
    if (!(impurity_strength >= 0.0) || !std::isfinite(impurity_offset)) {
        fail(ErrorCategory::invalid_config, "impurity line parameters must be finite and non-negative");
    }
}

namespace {

void check_ladder(const LevelScheme::Ladder& ladder, const char* which) {
    if (ladder[0] != 0.0) {
        fail(ErrorCategory::invalid_config, fmt::format("{} ladder must start at zero energy", which));
    }
    for (int i = 1; i < kHyperfineStates; ++i) {
        if (!(ladder[i] > ladder[i - 1]) || !std::isfinite(ladder[i])) {
            fail(ErrorCategory::invalid_config,
                 fmt::format("{} ladder is not strictly increasing at index {}", which, i));
        }
    }
}

void check_law(const StrengthLaw& law, const char* which) {
    if (!(law.at_low > 0.0 && law.at_low <= 1.0 && law.at_high > 0.0 && law.at_high <= 1.0)) {
        fail(ErrorCategory::invalid_config,
             fmt::format("{} strengths must lie in (0, 1]", which));
    }
}

}  // namespace

LevelScheme::LevelScheme(Ladder ground, Ladder excited, double optical_origin, double zeeman_slope,
                         double field, StrengthModel strengths)
    : ground_(ground),
      excited_(excited),
      optical_origin_(optical_origin),
      zeeman_slope_(zeeman_slope),
      field_(field),
      strengths_(strengths) {
    check_ladder(ground_, "ground");
    check_ladder(excited_, "excited");
    if (!(field_ >= 0.0) || !std::isfinite(field_)) {
        fail(ErrorCategory::invalid_config, "magnetic field must be finite and >= 0");
    }
    if (!(zeeman_slope_ > 0.0) || !std::isfinite(zeeman_slope_)) {
        fail(ErrorCategory::invalid_config, "Zeeman slope must be positive");
    }
    if (!std::isfinite(optical_origin_)) {
        fail(ErrorCategory::invalid_config, "optical origin must be finite");
    }
    check_law(strengths_.minus_one, "delta_m = -1");
    check_law(strengths_.plus_one, "delta_m = +1");
}

LevelScheme build_level_scheme(const LevelConfig& config) {
    auto ladder = [](const std::vector<double>& spacings, const char* which) {
        if (spacings.size() != kHyperfineStates - 1) {
            fail(ErrorCategory::invalid_config,
                 fmt::format("{} ladder needs 7 spacings, got {}", which, spacings.size()));
        }
        LevelScheme::Ladder out{};
        for (int i = 0; i < kHyperfineStates - 1; ++i) {
            if (!(spacings[i] > 0.0) || !std::isfinite(spacings[i])) {
                fail(ErrorCategory::invalid_config,
                     fmt::format("{} spacing {} must be positive", which, i));
            }
            out[i + 1] = out[i] + spacings[i];
        }
        return out;
    };
    return LevelScheme(ladder(config.ground_spacings, "ground"),
                       ladder(config.excited_spacings, "excited"), config.optical_origin,
                       config.zeeman_slope, config.field, config.strengths);
}

int TransitionTable::count(int delta_m) const {
    int n = 0;
    for (const auto& t : transitions) n += t.delta_m == delta_m;
    return n;
}

double TransitionTable::centroid(int delta_m) const {
    double sum = 0.0;
    int n = 0;
    for (const auto& t : transitions) {
        if (t.delta_m == delta_m) {
            sum += t.frequency;
            ++n;
        }
    }
    if (n == 0) fail(ErrorCategory::domain, fmt::format("no transitions with delta_m = {}", delta_m));
    return sum / n;
}

const OpticalTransition* TransitionTable::find(int ground, int excited) const {
    for (const auto& t : transitions) {
        if (t.ground == ground && t.excited == excited) return &t;
    }
    return nullptr;
}

TransitionTable transition_table(const LevelScheme& scheme, bool include_branching) {
    const int max_order = include_branching ? 3 : 1;
    TransitionTable table;
    // Grouped by band, in band order 0, -1, +1, -2, +2, -3, +3.
    for (int order = 0; order <= max_order; ++order) {
        for (int sign : {-1, 1}) {
            if (order == 0 && sign > 0) continue;
            const int delta_m = order * sign;
            for (int g = 0; g < kHyperfineStates; ++g) {
                const int e = g + delta_m;
                if (e < 0 || e >= kHyperfineStates) continue;
                table.transitions.push_back(OpticalTransition{
                    g, e, delta_m, scheme.transition_detuning(g, e),
                    oscillator_strength(delta_m, g, scheme.strengths(), include_branching)});
            }
        }
    }
    return table;
}

}  // namespace spinhole
