#pragma once

#include <stdexcept>
#include <string>

namespace ffeq {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// Energy was found outside the declared circular stripe.
class OutOfStripeError : public Error {
public:
    OutOfStripeError(const std::string& what, double dropped)
        : Error(what), dropped_(dropped) {}

    /// Magnitude (or energy fraction) of what would have been discarded.
    double dropped() const noexcept { return dropped_; }

private:
    double dropped_;
};

class SingularError : public Error {
public:
    using Error::Error;
};

class NotHermitianError : public Error {
public:
    using Error::Error;
};

class CyclicPrefixError : public Error {
public:
    using Error::Error;
};

/// Configuration problems. `line` is 1-based, 0 when unknown.
class ConfigError : public Error {
public:
    ConfigError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), message_(what), line_(line) {}

    int line() const noexcept { return line_; }
    /// The text without the line prefix.
    const std::string& message() const noexcept { return message_; }

private:
    std::string message_;
    int line_;
};

}  // namespace ffeq
