#include "wdan/error.hpp"

namespace wdan {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::UnsupportedWavelet: return "UnsupportedWavelet";
        case ErrorKind::SignalTooShort: return "SignalTooShort";
        case ErrorKind::LengthMismatch: return "LengthMismatch";
        case ErrorKind::TooManyLevels: return "TooManyLevels";
        case ErrorKind::InvalidLevels: return "InvalidLevels";
        case ErrorKind::WindowTooShort: return "WindowTooShort";
        case ErrorKind::DimMismatch: return "DimMismatch";
        case ErrorKind::TapeMismatch: return "TapeMismatch";
        case ErrorKind::NoData: return "NoData";
        case ErrorKind::ContractViolation: return "ContractViolation";
        case ErrorKind::InvalidStrategy: return "InvalidStrategy";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::SchemaError: return "SchemaError";
        case ErrorKind::SeriesTooShort: return "SeriesTooShort";
        case ErrorKind::SingularRegression: return "SingularRegression";
        case ErrorKind::NumericFailure: return "NumericFailure";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace wdan
