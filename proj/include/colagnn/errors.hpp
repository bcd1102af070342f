#pragma once

#include <stdexcept>
#include <string>

namespace colagnn {

// Shape/contract violations inside the numeric core.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input files (CSV parse, validation).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad run configuration (unknown keys, invalid values, usage errors).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical failure (non-finite loss, singular systems).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace colagnn
