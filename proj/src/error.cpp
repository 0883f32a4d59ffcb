#include "chatterbar/error.hpp"

namespace chatterbar {

const char* to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::coefficient_positivity: return "coefficient_positivity";
    case ErrorCode::convergence: return "convergence";
    case ErrorCode::integration: return "integration";
    case ErrorCode::degenerate_force: return "degenerate_force";
    case ErrorCode::dimension: return "dimension";
    case ErrorCode::spectral_positivity: return "spectral_positivity";
    case ErrorCode::control_bound: return "control_bound";
    case ErrorCode::domain: return "domain";
    case ErrorCode::stiffness: return "stiffness";
    case ErrorCode::seed_construction: return "seed_construction";
    case ErrorCode::resolution: return "resolution";
    case ErrorCode::config: return "config";
    }
    return "unknown";
}

}  // namespace chatterbar
