#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wdan {

/// Failure categories raised across the library. Callers (notably the CLI)
/// dispatch on the kind rather than on exception subtypes.
enum class ErrorKind {
    UnsupportedWavelet,
    SignalTooShort,
    LengthMismatch,
    TooManyLevels,
    InvalidLevels,
    WindowTooShort,
    DimMismatch,
    TapeMismatch,
    NoData,
    ContractViolation,
    InvalidStrategy,
    InvalidConfig,
    ParseError,
    SchemaError,
    SeriesTooShort,
    SingularRegression,
    NumericFailure,
    IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

    ErrorKind kind() const noexcept { return kind_; }
    /// The message without the kind prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string detail_;
};

}  // namespace wdan
