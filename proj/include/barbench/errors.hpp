#pragma once

#include <stdexcept>
#include <string>

namespace barbench {

// Bad user input: malformed configs, out-of-range parameters, wrong shapes.
// The CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A numeric procedure failed (singular system, non-convergence, PD failure).
// The CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

struct NotPositiveDefiniteError : NumericError {
    int leading_minor;  // 1-based order of the first non-positive leading minor
    NotPositiveDefiniteError(const std::string& what, int minor)
        : NumericError(what), leading_minor(minor) {}
};

struct SingularSystemError : NumericError {
    explicit SingularSystemError(const std::string& what) : NumericError(what) {}
};

struct NonConvergenceError : NumericError {
    explicit NonConvergenceError(const std::string& what) : NumericError(what) {}
};

}  // namespace barbench
