#pragma once

#include <stdexcept>
#include <string>

namespace spectral_transfer {

// Contract violations on inputs (bad dimensions, invalid parameters, malformed files).
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Failures of the numerics themselves (non-convergence, ill-conditioning).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Resolvent / solve requested at (or numerically too close to) a spectral point.
class SingularityError : public NumericalError {
public:
    explicit SingularityError(const std::string& msg) : NumericalError(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ConfigError(msg);
}

}  // namespace spectral_transfer
