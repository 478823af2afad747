#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace decaylab {

enum class ErrorCode {
    InvalidArgument,
    NotSymmetric,
    NegativeSpectrum,
    RateCollision,
    RateNotInSet,
    DimensionMismatch,
    QuadratureFailure,
    StepSizeUnderflow,
    NonFiniteState,
    UndefinedQuotient,
    WindowTooShort,
    NotFast,
    SmallnessViolated,
    NoConvergence,
    DegenerateGap,
    NotCoercive,
    ConfigError,
    IoError,
};

std::string_view error_name(ErrorCode code) noexcept;

/// Every failure raised by the library. `code()` names the failure the way
/// the CLI reports it; `what()` carries the human-readable detail.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace decaylab
