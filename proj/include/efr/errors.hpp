#pragma once

#include <stdexcept>
#include <string>

namespace efr {

/// Invalid geometry or run configuration.
class InvalidSpec : public std::runtime_error {
public:
    explicit InvalidSpec(const std::string& what) : std::runtime_error(what) {}
};

/// Operation asked to combine grids that do not match (extent, kind, ratio).
class IncompatibleGrids : public std::runtime_error {
public:
    explicit IncompatibleGrids(const std::string& what) : std::runtime_error(what) {}
};

/// Iterative linear solve did not reach tolerance within its iteration cap.
class SolverFailure : public std::runtime_error {
public:
    SolverFailure(const std::string& what, double residual, int iterations)
        : std::runtime_error(what), residual(residual), iterations(iterations) {}
    double residual;
    int iterations;
};

/// A field left the admissible range (NaN or magnitude beyond the blow-up
/// threshold) during time stepping.
class BlowUp : public std::runtime_error {
public:
    BlowUp(const std::string& what, double time) : std::runtime_error(what), time(time) {}
    double time;
};

/// Reference norm is zero where a relative quantity needs it.
class DegenerateReference : public std::runtime_error {
public:
    explicit DegenerateReference(const std::string& what) : std::runtime_error(what) {}
};

/// Configuration file cannot be parsed or fails validation.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Snapshot or run-directory content is missing or malformed.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace efr
