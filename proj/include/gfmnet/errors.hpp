#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gfmnet {

enum class ErrorCode {
    // lti_core
    PoleHit,
    ImproperTF,
    AlgebraicLoop,
    SingularAtFrequency,
    NoDcGain,
    TooShort,
    // units
    OutOfRange,
    NotCurtailed,
    // network
    EdgePole,
    SingularLL,
    DegenerateDeterminant,
    // system
    ImproperController,
    NoDroop,
    Assumption1Fails,
    // analysis
    NoInteriorPeak,
    ChannelNotFound,
    // cli
    ParseError,
    ValidationError,
    // precondition or invariant violation on arguments
    InvalidArgument,
};

inline constexpr std::string_view code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::PoleHit: return "PoleHit";
        case ErrorCode::ImproperTF: return "ImproperTF";
        case ErrorCode::AlgebraicLoop: return "AlgebraicLoop";
        case ErrorCode::SingularAtFrequency: return "SingularAtFrequency";
        case ErrorCode::NoDcGain: return "NoDcGain";
        case ErrorCode::TooShort: return "TooShort";
        case ErrorCode::OutOfRange: return "OutOfRange";
        case ErrorCode::NotCurtailed: return "NotCurtailed";
        case ErrorCode::EdgePole: return "EdgePole";
        case ErrorCode::SingularLL: return "SingularLL";
        case ErrorCode::DegenerateDeterminant: return "DegenerateDeterminant";
        case ErrorCode::ImproperController: return "ImproperController";
        case ErrorCode::NoDroop: return "NoDroop";
        case ErrorCode::Assumption1Fails: return "Assumption1Fails";
        case ErrorCode::NoInteriorPeak: return "NoInteriorPeak";
        case ErrorCode::ChannelNotFound: return "ChannelNotFound";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::ValidationError: return "ValidationError";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

/// True for errors caused by bad input rather than numerical failure.
inline constexpr bool is_validation_error(ErrorCode c) {
    switch (c) {
        case ErrorCode::ImproperTF:
        case ErrorCode::ImproperController:
        case ErrorCode::ChannelNotFound:
        case ErrorCode::ParseError:
        case ErrorCode::ValidationError:
        case ErrorCode::InvalidArgument:
        case ErrorCode::OutOfRange:
        case ErrorCode::NotCurtailed:
        case ErrorCode::DegenerateDeterminant:
        case ErrorCode::Assumption1Fails:
            return true;
        default:
            return false;
    }
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(code_name(code)) + ": " + message),
          code_(code),
          detail_(message) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }
    [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool cond, ErrorCode code, const std::string& message) {
    if (!cond) fail(code, message);
}

}  // namespace gfmnet
