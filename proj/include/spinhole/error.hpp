#pragma once

#include <stdexcept>
#include <string>

namespace spinhole {

enum class ErrorCategory {
    invalid_config,
    invalid_state,
    domain,
    unsupported,
    numerical,
    fit,
    io,
};

/// Base of every exception thrown by the toolkit. The category is what the
/// command-line front end maps onto exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& what) {
    throw Error(category, what);
}

inline const char* category_name(ErrorCategory category) noexcept {
    switch (category) {
    case ErrorCategory::invalid_config: return "invalid-config";
    case ErrorCategory::invalid_state: return "invalid-state";
    case ErrorCategory::domain: return "domain";
    case ErrorCategory::unsupported: return "unsupported";
    case ErrorCategory::numerical: return "numerical";
    case ErrorCategory::fit: return "fit";
    case ErrorCategory::io: return "io";
    }
    return "unknown";
}

}  // namespace spinhole
