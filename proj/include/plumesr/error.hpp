#pragma once

#include <stdexcept>
#include <string>

namespace plumesr {

/// Base class for every error raised by the library. `kind()` is the stable
/// machine-readable category used by the CLI's structured error output.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& w) : Error("invalid-argument", w) {}
};
struct InvalidConfig : Error {
    explicit InvalidConfig(const std::string& w) : Error("invalid-config", w) {}
};
struct InvalidSpec : Error {
    explicit InvalidSpec(const std::string& w) : Error("invalid-spec", w) {}
};
struct InvalidPlan : Error {
    explicit InvalidPlan(const std::string& w) : Error("invalid-plan", w) {}
};
struct UndefinedMetric : Error {
    explicit UndefinedMetric(const std::string& w) : Error("undefined-metric", w) {}
};
struct ConstructionFailure : Error {
    explicit ConstructionFailure(const std::string& w) : Error("construction-failure", w) {}
};
struct IoError : Error {
    explicit IoError(const std::string& w) : Error("io-error", w) {}
};

/// Raised when a numerical procedure diverges or fails to converge. `step`
/// carries the solver step / training step at which it happened (or -1).
class NumericalFailure : public Error {
public:
    NumericalFailure(const std::string& w, long step = -1)
        : Error("numerical-failure", w), step_(step) {}
    long step() const noexcept { return step_; }

private:
    long step_;
};

}  // namespace plumesr
