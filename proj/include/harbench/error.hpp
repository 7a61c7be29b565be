#pragma once

#include <stdexcept>
#include <string>

namespace harbench {

enum class ErrorKind {
    // data
    MalformedLine,
    EmptyFile,
    BadCache,
    InsufficientSubjects,
    EmptyInput,
    ChannelMismatch,
    Leakage,
    Io,
    // usage
    UnknownKey,
    InvalidValue,
    InvalidArgument,
    // numerical
    UnsupportedModality,
    ShapeMismatch,
    NonFiniteInput,
    NonFiniteGradient,
    DivergedLoss,
};

/// Single exception type for the library; `kind()` drives CLI exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

const char* to_string(ErrorKind kind) noexcept;

// 1 usage, 2 data, 3 numerical
int exit_code_for(ErrorKind kind) noexcept;

}  // namespace harbench
