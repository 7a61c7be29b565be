#include "harbench/error.hpp"

namespace harbench {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::MalformedLine: return "MalformedLine";
        case ErrorKind::EmptyFile: return "EmptyFile";
        case ErrorKind::BadCache: return "BadCache";
        case ErrorKind::InsufficientSubjects: return "InsufficientSubjects";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::ChannelMismatch: return "ChannelMismatch";
        case ErrorKind::Leakage: return "Leakage";
        case ErrorKind::Io: return "IoError";
        case ErrorKind::UnknownKey: return "UnknownKey";
        case ErrorKind::InvalidValue: return "InvalidValue";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::UnsupportedModality: return "UnsupportedModality";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::NonFiniteInput: return "NonFiniteInput";
        case ErrorKind::NonFiniteGradient: return "NonFiniteGradient";
        case ErrorKind::DivergedLoss: return "DivergedLoss";
    }
    return "Unknown";
}

int exit_code_for(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::UnknownKey:
        case ErrorKind::InvalidValue:
        case ErrorKind::InvalidArgument:
            return 1;
        case ErrorKind::UnsupportedModality:
        case ErrorKind::ShapeMismatch:
        case ErrorKind::NonFiniteInput:
        case ErrorKind::NonFiniteGradient:
        case ErrorKind::DivergedLoss:
            return 3;
        default:
            return 2;
    }
}

}  // namespace harbench
