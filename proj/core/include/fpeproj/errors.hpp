#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fpeproj {

/// Failure categories raised by the numerical core.
enum class ErrorKind {
    InfeasibleTheta,
    QuadratureFailure,
    NoDecay,
    SingularFisher,
    NoConvergence,
    StepUnderflow,
    RhsFailure,
    MassLoss,
    Instability,
    SupportMismatch,
    NotEigen,
    Overflow,
    EscapedGrid,
    EmptyInput,
    InvalidArgument,
    IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

}  // namespace fpeproj
