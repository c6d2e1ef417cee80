#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace traction {

enum class ErrorKind {
    DegenerateSlip,
    NonPositiveRadius,
    DivisionDegenerate,
    DecompositionFailure,
    SingularInnovationCov,
    InsufficientSamples,
    OutOfBounds,
    OutOfField,
    ScenarioInfeasible,
    DegenerateVariance,
    InvalidArgument,
    Config,
    Io,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above so that
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), message_(what) {}

    ErrorKind kind() const noexcept { return kind_; }
    /// The message without the kind prefix.
    const std::string& message() const noexcept { return message_; }

private:
    ErrorKind kind_;
    std::string message_;
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::DegenerateSlip: return "DegenerateSlip";
    case ErrorKind::NonPositiveRadius: return "NonPositiveRadius";
    case ErrorKind::DivisionDegenerate: return "DivisionDegenerate";
    case ErrorKind::DecompositionFailure: return "DecompositionFailure";
    case ErrorKind::SingularInnovationCov: return "SingularInnovationCov";
    case ErrorKind::InsufficientSamples: return "InsufficientSamples";
    case ErrorKind::OutOfBounds: return "OutOfBounds";
    case ErrorKind::OutOfField: return "OutOfField";
    case ErrorKind::ScenarioInfeasible: return "ScenarioInfeasible";
    case ErrorKind::DegenerateVariance: return "DegenerateVariance";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Config: return "ConfigError";
    case ErrorKind::Io: return "IoError";
    }
    return "Error";
}

} // namespace traction
