// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The poolsim Authors

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace poolsim {

enum class ErrorKind {
    InvalidArgument,
    LengthNotPowerOfFour,
    DimensionMismatch,
    NotPositiveDefinite,
    SingularDiagonal,
    PilotZero,
    OutOfRange,
    OutOfMemory,
    TooFewCores,
    TooLarge,
    DimensionTooSmall,
    SizeMismatch,
    MismatchedParticipants,
    Deadlock,
    GoldenMismatch,
    ConfigError,
};

constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::LengthNotPowerOfFour: return "LengthNotPowerOfFour";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::SingularDiagonal: return "SingularDiagonal";
    case ErrorKind::PilotZero: return "PilotZero";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::OutOfMemory: return "OutOfMemory";
    case ErrorKind::TooFewCores: return "TooFewCores";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorKind::SizeMismatch: return "SizeMismatch";
    case ErrorKind::MismatchedParticipants: return "MismatchedParticipants";
    case ErrorKind::Deadlock: return "Deadlock";
    case ErrorKind::GoldenMismatch: return "GoldenMismatch";
    case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Single exception type for the library; `kind()` identifies the failure class.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) fail(kind, what);
}

} // namespace poolsim
