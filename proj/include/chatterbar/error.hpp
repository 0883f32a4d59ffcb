#pragma once

#include <stdexcept>
#include <string>

namespace chatterbar {

enum class ErrorCode {
    coefficient_positivity,
    convergence,
    integration,
    degenerate_force,
    dimension,
    spectral_positivity,
    control_bound,
    domain,
    stiffness,
    seed_construction,
    resolution,
    config,
};

const char* to_string(ErrorCode code) noexcept;

/// Base exception for every failure raised by the library.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Eigenvalue bracketing or refinement failed for a specific mode (1-based).
class ConvergenceError : public Error {
public:
    ConvergenceError(int mode_index, const std::string& what)
        : Error(ErrorCode::convergence, what), mode_index_(mode_index) {}

    int mode_index() const noexcept { return mode_index_; }

private:
    int mode_index_;
};

}  // namespace chatterbar
