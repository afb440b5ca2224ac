#pragma once

#include <stdexcept>
#include <string>

namespace palmexp {

// Invalid argument outside the mathematical domain of an operation.
using DomainError = std::domain_error;

// A noise model that cannot be built or evaluated (e.g. indefinite covariance).
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The operation has no implementation for the given model variant.
class UnsupportedOperation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Quadrature or optimisation failed to reach its tolerance.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ScenarioError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Two independent evaluations of the same quantity disagree.
class ConsistencyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace palmexp
