#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lyam {

/// Raised when an argument violates a documented precondition
/// (dimension mismatch, out-of-range hyperparameter, empty input).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a NaN or infinity shows up where finite values are required.
class NonFiniteValue : public std::domain_error {
public:
    NonFiniteValue(const std::string& what, std::size_t index)
        : std::domain_error(what + " (index " + std::to_string(index) + ")"), index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// Raised for malformed configuration files or override strings.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace lyam
