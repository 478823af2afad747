#include "decaylab/error.hpp"

namespace decaylab {

std::string_view error_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::NotSymmetric: return "NotSymmetric";
        case ErrorCode::NegativeSpectrum: return "NegativeSpectrum";
        case ErrorCode::RateCollision: return "RateCollision";
        case ErrorCode::RateNotInSet: return "RateNotInSet";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::QuadratureFailure: return "QuadratureFailure";
        case ErrorCode::StepSizeUnderflow: return "StepSizeUnderflow";
        case ErrorCode::NonFiniteState: return "NonFiniteState";
        case ErrorCode::UndefinedQuotient: return "UndefinedQuotient";
        case ErrorCode::WindowTooShort: return "WindowTooShort";
        case ErrorCode::NotFast: return "NotFast";
        case ErrorCode::SmallnessViolated: return "SmallnessViolated";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::DegenerateGap: return "DegenerateGap";
        case ErrorCode::NotCoercive: return "NotCoercive";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace decaylab
