#pragma once

#include <stdexcept>
#include <string>

namespace conelab {

// Input violates an operation's precondition (bad parameter, degenerate grid).
class PreconditionError : public std::invalid_argument {
public:
    explicit PreconditionError(const std::string& what) : std::invalid_argument(what) {}
};

// A numerical procedure could not deliver its guarantee.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool ok, const std::string& message) {
    if (!ok) throw PreconditionError(message);
}

}  // namespace conelab
