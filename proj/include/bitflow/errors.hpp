#pragma once

#include <stdexcept>
#include <string>

namespace bitflow {

/// Invalid scalar/vector inputs (non-finite values, parameters out of range).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Dimension mismatches between matrices, vectors, and architectures.
struct ShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A problem instance exceeds a solver's documented size limit.
struct CapacityError : std::length_error {
    using std::length_error::length_error;
};

/// Non-finite values produced mid-computation; maps to CLI exit code 3.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Config file syntax or validation failures; maps to CLI exit code 2.
struct ConfigError : std::runtime_error {
    int line = 0;
    int column = 0;

    explicit ConfigError(const std::string& msg, int line_ = 0, int column_ = 0)
        : std::runtime_error(msg), line(line_), column(column_) {}
};

} // namespace bitflow
