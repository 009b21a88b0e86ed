#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace raman {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Envelope, mask or grid sizes/domains do not line up.
class GridMismatchError : public Error {
public:
    using Error::Error;
};

/// A time-domain operation received a frequency-domain envelope or vice versa.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Out-of-range numeric parameter.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Field amplitude blew up during propagation; `slice()` is the x index.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, std::size_t slice)
        : Error(what), slice_(slice) {}
    std::size_t slice() const noexcept { return slice_; }

private:
    std::size_t slice_;
};

/// NaN/inf encountered during propagation.
class NumericError : public Error {
public:
    NumericError(const std::string& what, std::size_t slice)
        : Error(what), slice_(slice) {}
    std::size_t slice() const noexcept { return slice_; }

private:
    std::size_t slice_;
};

/// E1 + E2 == 0, asymmetry not defined.
class UndefinedAsymmetryError : public Error {
public:
    using Error::Error;
};

/// Solver error re-raised with the Monte Carlo trial it happened in.
class TrialError : public Error {
public:
    TrialError(const std::string& what, std::size_t trial_index)
        : Error(what), trial_index_(trial_index) {}
    std::size_t trial_index() const noexcept { return trial_index_; }

private:
    std::size_t trial_index_;
};

/// Bad configuration key or value; `key()` names the offending entry.
class ConfigError : public Error {
public:
    ConfigError(const std::string& key, const std::string& what)
        : Error(key + ": " + what), key_(key) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

}  // namespace raman
