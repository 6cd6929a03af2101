#pragma once

#include <stdexcept>
#include <string>

namespace repspace {

enum class ErrorKind {
    InvalidArgument,
    NonFiniteInput,
    PoleAtFrequency,
    UnknownKind,
    MissingParameter,
    InvalidParameter,
    RegenerativePole,
    CriticalPoint,
    DegenerateBackSolve,
    SingularSystem,
    NoSolution,
    MismatchedGrids,
    EmptyRegion,
    UnsupportedFormat,
    ImproperTransferFunction,
    UnstableSimulation,
    TraceTooShort,
    ParseError,
    ValidationError,
    IoError,
};

[[nodiscard]] const char* to_string(ErrorKind kind) noexcept;

// All library failures are reported through this type; kind() is the
// machine-readable category, what() carries the context.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

} // namespace repspace
