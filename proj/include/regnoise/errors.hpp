#pragma once

#include <stdexcept>
#include <string>

namespace regnoise {

/// Parameter outside the legal range of a model, noise, or configuration invariant.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Shape mismatch, non-finite input, or a singular linear system.
class StructuralError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An iterative estimate that did not settle. Carries the best value found.
class DiagnosticError : public std::runtime_error {
public:
    DiagnosticError(const std::string& what, double best, double other = 0.0)
        : std::runtime_error(what), best_(best), other_(other) {}

    double best() const noexcept { return best_; }
    double other() const noexcept { return other_; }

private:
    double best_;
    double other_;
};

/// Configuration document rejected. `key_path()` is a dotted path like "sim.dt".
class ParseError : public std::runtime_error {
public:
    ParseError(std::string key_path, const std::string& what)
        : std::runtime_error(key_path.empty() ? what : key_path + ": " + what),
          key_path_(std::move(key_path)) {}

    const std::string& key_path() const noexcept { return key_path_; }

private:
    std::string key_path_;
};

} // namespace regnoise
