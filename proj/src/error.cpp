#include "reenact/error.hpp"

namespace reenact {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownTrack: return "UnknownTrack";
    case ErrorCode::UnknownSlot: return "UnknownSlot";
    case ErrorCode::UnknownEffect: return "UnknownEffect";
    case ErrorCode::LockedTrack: return "LockedTrack";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidInterval: return "InvalidInterval";
    case ErrorCode::OverlapRejected: return "OverlapRejected";
    case ErrorCode::DuplicateEffectTarget: return "DuplicateEffectTarget";
    case ErrorCode::IncompatibleTarget: return "IncompatibleTarget";
    case ErrorCode::InvalidParam: return "InvalidParam";
    case ErrorCode::UnknownTarget: return "UnknownTarget";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::InvalidDescriptor: return "InvalidDescriptor";
    case ErrorCode::CycleRejected: return "CycleRejected";
    case ErrorCode::UnknownAnchor: return "UnknownAnchor";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::EmptyPath: return "EmptyPath";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::FrameOutOfSlot: return "FrameOutOfSlot";
    case ErrorCode::NotStarted: return "NotStarted";
    case ErrorCode::InvalidChannel: return "InvalidChannel";
    case ErrorCode::InvalidTransportTransition: return "InvalidTransportTransition";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::UnknownProp: return "UnknownProp";
    case ErrorCode::NotRecordable: return "NotRecordable";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    case ErrorCode::MalformedFile: return "MalformedFile";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::SemanticError: return "SemanticError";
    case ErrorCode::MalformedTelemetry: return "MalformedTelemetry";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NoSamplesInRadius: return "NoSamplesInRadius";
    case ErrorCode::ProtocolViolation: return "ProtocolViolation";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::PortInUse: return "PortInUse";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace reenact
