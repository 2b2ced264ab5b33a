#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace soie {

/// Bad or inconsistent configuration input (CLI maps this to exit code 2).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A required earlier result is missing (CLI maps this to exit code 3).
class MissingPrerequisiteError : public std::runtime_error {
public:
    explicit MissingPrerequisiteError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical failure such as instability or loss of positive definiteness
/// (CLI maps this to exit code 4).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// A simulated trial blew up; carries the offending step index.
class DivergedTrialError : public NumericalError {
public:
    DivergedTrialError(const std::string& what, std::size_t step)
        : NumericalError(what + " at step " + std::to_string(step)), step_(step) {}

    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

} // namespace soie
