#pragma once

#include <stdexcept>
#include <string>

namespace tenevo {

/// Raised for malformed arguments: length mismatches, empty masks, bad intervals.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A requested derivative order is outside what the evaluator supports.
class UnsupportedOrder : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Non-finite values appeared in a solve; the current step must be abandoned.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Experiment configuration could not be parsed or validated.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem failure, always carrying the offending path in the message.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace tenevo
