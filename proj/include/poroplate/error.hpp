/**
 * @file error.hpp
 * @brief Exception hierarchy shared by every poroplate module.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace poroplate {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter or invariant check failed; `key()` names the offending quantity.
class InvalidParameter : public Error {
public:
    InvalidParameter(std::string key, const std::string& what)
        : Error(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Field or matrix shapes do not match the requested operation.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Factorization, iteration or post-solve check failure.
class SolverError : public Error {
public:
    using Error::Error;
};

/// Configuration file could not be parsed or resolved.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace poroplate
