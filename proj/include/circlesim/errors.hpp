#pragma once

#include <stdexcept>
#include <string>

namespace circlesim {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Adaptive quadrature failed to reach the requested absolute tolerance.
class QuadratureError : public Error {
public:
    QuadratureError(const std::string& msg, double achieved)
        : Error(msg + " (achieved tolerance " + std::to_string(achieved) + ")"),
          achieved_tolerance(achieved) {}
    double achieved_tolerance;
};

/// Model file or coefficient validation failure.
class ModelError : public Error {
public:
    using Error::Error;
};

/// Simulation produced a non-finite state.
class SimulationError : public Error {
public:
    SimulationError(const std::string& msg, std::uint64_t step)
        : Error(msg + " at step " + std::to_string(step)), step_index(step) {}
    std::uint64_t step_index;
};

/// A path never reached the level required by a first-passage functional.
class NotHitError : public Error {
public:
    using Error::Error;
};

/// Stationary density fell below the usable floor.
class DensityFloorError : public Error {
public:
    using Error::Error;
};

/// Linear algebra failure in the discrete oracle (singular system,
/// eigensolver non-convergence, truncation overflow).
class OracleError : public Error {
public:
    using Error::Error;
};

/// Malformed scenario or configuration input.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace circlesim
