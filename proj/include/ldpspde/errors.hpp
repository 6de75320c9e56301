#pragma once

#include <stdexcept>
#include <string>

namespace ldp {

/// Violated precondition or malformed input. Maps to CLI exit code 2.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Nonfinite state, divergence, or a solver that could not produce a value.
/// Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ValidationError(what);
}

}  // namespace ldp
