#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rare {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed numeric input (non-finite state, bad draw, empty sample).
class InputError : public Error {
public:
    using Error::Error;
};

/// Invalid or inconsistent configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    NotFoundError(const std::string& what, double best)
        : Error(what), best_(best) {}
    /// Closest value reached before giving up.
    double best() const noexcept { return best_; }

private:
    double best_;
};

/// exp() of a tilt exponent would overflow; reduce C.
class OverflowError : public Error {
public:
    OverflowError(const std::string& what, double max_exponent)
        : Error(what), max_exponent_(max_exponent) {}
    double max_exponent() const noexcept { return max_exponent_; }

private:
    double max_exponent_;
};

/// Every particle was killed in one resampling step.
class ExtinctionError : public Error {
public:
    ExtinctionError(const std::string& what, int epoch)
        : Error(what), epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

/// Ancestry log does not describe a complete genealogy.
class IntegrityError : public Error {
public:
    IntegrityError(const std::string& what, int epoch, std::size_t id)
        : Error(what), epoch_(epoch), id_(id) {}
    int epoch() const noexcept { return epoch_; }
    std::size_t id() const noexcept { return id_; }

private:
    int epoch_;
    std::size_t id_;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace rare
