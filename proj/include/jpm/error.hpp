#pragma once

#include <stdexcept>
#include <string>

namespace jpm {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid arguments, malformed configs, violated preconditions.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

/// A referenced file or input set does not exist.
class MissingInputError : public Error {
public:
    explicit MissingInputError(const std::string& what) : Error(what) {}
};

/// Optimizer non-convergence, degenerate statistics, underflow.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(what) {}
};

/// A file could not be written or parsed; carries the offending path.
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace jpm
