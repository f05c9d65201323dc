#pragma once

#include <stdexcept>
#include <string>

namespace dbose {

// bad argument (x <= 0 for K0, z == 0 for the drift, ...)
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// adaptive rule ran out of subdivisions before meeting the tolerance
struct QuadratureError : std::runtime_error {
    double estimate = 0.0;
    double error = 0.0;
    QuadratureError(const std::string& what, double est, double err)
        : std::runtime_error(what), estimate(est), error(err) {}
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace dbose
