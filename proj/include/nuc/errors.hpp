#pragma once

#include <stdexcept>
#include <string>

namespace nuc {

/// Input maps or images have missing/zero/mismatched dimensions.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A pixel or field value is outside its documented range.
struct ValueRangeError : std::runtime_error {
    explicit ValueRangeError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Too few optical-density pixels survive the tissue threshold.
struct InsufficientTissueError : std::runtime_error {
    explicit InsufficientTissueError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Stain statistics are rank-deficient or the stain vectors collapse.
struct DegenerateStainError : std::runtime_error {
    explicit DegenerateStainError(const std::string& msg) : std::runtime_error(msg) {}
};

/// An operation was invoked with an undefined input (e.g. IoU of two empty sets).
struct UndefinedInputError : std::runtime_error {
    explicit UndefinedInputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid combination of options or configuration values.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// File read/write or format failure.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace nuc
