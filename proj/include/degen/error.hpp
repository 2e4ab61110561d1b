#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace degen {

enum class ErrorCode {
    PointOutsideChart,
    ChartRangeError,
    InvalidEpsilon,
    DegenerateInput,
    SpanViolation,
    TangencyViolation,
    ExtrapolationUnstable,
    FlavorRangeError,
    SingularSystem,
    IncompatibleRHS,
    InvalidArgument,
    WrongRegime,
    NoConvergence,
    HTransformSingular,
    NotIntegrable,
    LevelSetUnresolved,
    ExtensionUndefined,
    ConfigError,
};

inline constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::PointOutsideChart: return "PointOutsideChart";
        case ErrorCode::ChartRangeError: return "ChartRangeError";
        case ErrorCode::InvalidEpsilon: return "InvalidEpsilon";
        case ErrorCode::DegenerateInput: return "DegenerateInput";
        case ErrorCode::SpanViolation: return "SpanViolation";
        case ErrorCode::TangencyViolation: return "TangencyViolation";
        case ErrorCode::ExtrapolationUnstable: return "ExtrapolationUnstable";
        case ErrorCode::FlavorRangeError: return "FlavorRangeError";
        case ErrorCode::SingularSystem: return "SingularSystem";
        case ErrorCode::IncompatibleRHS: return "IncompatibleRHS";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::WrongRegime: return "WrongRegime";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::HTransformSingular: return "HTransformSingular";
        case ErrorCode::NotIntegrable: return "NotIntegrable";
        case ErrorCode::LevelSetUnresolved: return "LevelSetUnresolved";
        case ErrorCode::ExtensionUndefined: return "ExtensionUndefined";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Exception carrying a machine-readable error kind.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace degen
