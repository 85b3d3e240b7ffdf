#pragma once

#include <stdexcept>
#include <string>

namespace ptspec {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class NumericError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class ScheduleError : public Error {
public:
    using Error::Error;
};

class LoadError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ResourceError : public Error {
public:
    ResourceError(const std::string& what, std::size_t peak_bond_dim)
        : Error(what), peak_bond_dim_(peak_bond_dim) {}
    std::size_t peak_bond_dim() const noexcept { return peak_bond_dim_; }

private:
    std::size_t peak_bond_dim_;
};

/// Quadrature that did not reach its requested tolerance.
class IntegrationError : public NumericError {
public:
    IntegrationError(const std::string& what, double achieved, double requested)
        : NumericError(what + " (achieved error " + std::to_string(achieved) + ", requested " +
                       std::to_string(requested) + ")"),
          achieved_(achieved), requested_(requested) {}
    double achieved() const noexcept { return achieved_; }
    double requested() const noexcept { return requested_; }

private:
    double achieved_;
    double requested_;
};

}  // namespace ptspec
