#include "repspace/error.hpp"

namespace repspace {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::NonFiniteInput: return "NonFiniteInput";
    case ErrorKind::PoleAtFrequency: return "PoleAtFrequency";
    case ErrorKind::UnknownKind: return "UnknownKind";
    case ErrorKind::MissingParameter: return "MissingParameter";
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::RegenerativePole: return "RegenerativePole";
    case ErrorKind::CriticalPoint: return "CriticalPoint";
    case ErrorKind::DegenerateBackSolve: return "DegenerateBackSolve";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::NoSolution: return "NoSolution";
    case ErrorKind::MismatchedGrids: return "MismatchedGrids";
    case ErrorKind::EmptyRegion: return "EmptyRegion";
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::ImproperTransferFunction: return "ImproperTransferFunction";
    case ErrorKind::UnstableSimulation: return "UnstableSimulation";
    case ErrorKind::TraceTooShort: return "TraceTooShort";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

} // namespace repspace
