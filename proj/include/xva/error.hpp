#pragma once

#include <stdexcept>
#include <string>

namespace xva {

/// Bad input: a violated precondition, an unsupported configuration, a malformed file.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A solver could not produce a trustworthy result (non-finite state, divergence,
/// a violated ordering property).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw InvalidArgument(message);
}

} // namespace xva
