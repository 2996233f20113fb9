#include "apbtriage/error.hpp"

namespace apbtriage {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownIdCode: return "UnknownIdCode";
    case ErrorCode::WidthMismatch: return "WidthMismatch";
    case ErrorCode::MalformedDirective: return "MalformedDirective";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::XInPayload: return "XInPayload";
    case ErrorCode::ProtocolViolation: return "ProtocolViolation";
    case ErrorCode::MissingSignal: return "MissingSignal";
    case ErrorCode::MapCoversFullSpace: return "MapCoversFullSpace";
    case ErrorCode::SingleClassInput: return "SingleClassInput";
    case ErrorCode::EmptyPartition: return "EmptyPartition";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptModel: return "CorruptModel";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "Error";
}

}  // namespace apbtriage
