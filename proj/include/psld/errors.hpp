#pragma once

#include <stdexcept>
#include <string>

namespace psld {

/// Invalid parameters, configuration, or arguments. Maps to CLI exit code 1.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Runtime numerical failure (NaN/Inf, non-PSD covariance, singular marginal).
/// Maps to CLI exit code 2.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shape or precondition violation across an API boundary.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// External score provider failed: timeout, malformed reply, or exit.
class ProviderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace psld
