// errors.hpp — exception hierarchy shared by all nhsense components
#pragma once

#include <stdexcept>
#include <string>

namespace nhsense {

// Base class so callers can catch everything from this library at once.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Parameter or template validation failed (bad N, w <= delta, ...).
class InvalidParams : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// The requested quantity presumes a steady state that does not exist.
class UnstableDynamics : public Error {
public:
    using Error::Error;
};

// Conditioning guard tripped, or a mandatory residual check failed.
class IllConditioned : public Error {
public:
    using Error::Error;
};

// Iterative procedure (series, ODE relaxation, Monte Carlo self-check) failed.
class ConvergenceFailure : public Error {
public:
    using Error::Error;
};

class EigenSolverFailure : public Error {
public:
    using Error::Error;
};

// Config-file problem; carries the offending line and key for diagnostics.
class ConfigError : public Error {
public:
    ConfigError(const std::string& msg, int line, std::string key)
        : Error(msg + " (line " + std::to_string(line) + ", key '" + key + "')"),
          line_(line),
          key_(std::move(key)) {}

    int line() const noexcept { return line_; }
    const std::string& key() const noexcept { return key_; }

private:
    int line_;
    std::string key_;
};

} // namespace nhsense
