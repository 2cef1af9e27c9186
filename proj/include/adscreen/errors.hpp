#pragma once

#include <stdexcept>
#include <string>

namespace adscreen {

/// Invalid argument relative to the model: point outside the type space,
/// price outside a mechanism's admissible range, unsupported density, ...
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// Quadrature non-convergence, simplex stall, or a failed numeric assertion.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// A bracketing solver found no sign change. Carries the endpoint values.
class NoRootError : public NumericError {
public:
    NoRootError(const std::string& what, double lo, double hi, double f_lo, double f_hi)
        : NumericError(what), lo_(lo), hi_(hi), f_lo_(f_lo), f_hi_(f_hi) {}

    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double f_lo() const { return f_lo_; }
    double f_hi() const { return f_hi_; }

private:
    double lo_, hi_, f_lo_, f_hi_;
};

/// Configuration could not be mapped onto domain types. `path` names the
/// offending field, e.g. "density.kind".
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(std::move(path)) {}

    const std::string& path() const { return path_; }

private:
    std::string path_;
};

}  // namespace adscreen
