#pragma once

#include <stdexcept>
#include <string>

namespace tipi {

/// Input rejected at an API boundary (dimension mismatch, non-finite values, out-of-range commands).
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The loop window has not yet accumulated the two readings it conditions on.
class NotWarmedUp : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A covariance matrix is not positive definite, a log-determinant is undefined, etc.
class NumericDomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Malformed configuration, schedule or parameter file.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace tipi
