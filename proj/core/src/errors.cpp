#include "fpeproj/errors.hpp"

namespace fpeproj {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InfeasibleTheta: return "InfeasibleTheta";
        case ErrorKind::QuadratureFailure: return "QuadratureFailure";
        case ErrorKind::NoDecay: return "NoDecay";
        case ErrorKind::SingularFisher: return "SingularFisher";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::StepUnderflow: return "StepUnderflow";
        case ErrorKind::RhsFailure: return "RhsFailure";
        case ErrorKind::MassLoss: return "MassLoss";
        case ErrorKind::Instability: return "Instability";
        case ErrorKind::SupportMismatch: return "SupportMismatch";
        case ErrorKind::NotEigen: return "NotEigen";
        case ErrorKind::Overflow: return "Overflow";
        case ErrorKind::EscapedGrid: return "EscapedGrid";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace fpeproj
