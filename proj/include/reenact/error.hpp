#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace reenact {

enum class ErrorCode {
  // timeline
  UnknownTrack,
  UnknownSlot,
  UnknownEffect,
  LockedTrack,
  IndexOutOfRange,
  InvalidInterval,
  OverlapRejected,
  DuplicateEffectTarget,
  IncompatibleTarget,
  InvalidParam,
  // scene
  UnknownTarget,
  DuplicateId,
  InvalidDescriptor,
  CycleRejected,
  UnknownAnchor,
  InvalidState,
  EmptyPath,
  GridMismatch,
  InvalidArgument,
  // effects / playback
  FrameOutOfSlot,
  NotStarted,
  InvalidChannel,
  InvalidTransportTransition,
  InvalidRange,
  UnknownProp,
  NotRecordable,
  // persistence
  ValidationFailed,
  MalformedFile,
  UnsupportedVersion,
  SyntaxError,
  SemanticError,
  MalformedTelemetry,
  // analytics
  TooFewSamples,
  EmptyInput,
  NoSamplesInRadius,
  // service
  ProtocolViolation,
  UnknownSession,
  PortInUse,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Engine error. `constraint()` names the structural rule a rejection
/// enforces (e.g. "slots-disjoint"), empty for plain lookup failures.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string constraint = {})
      : std::runtime_error(message), code_(code), constraint_(std::move(constraint)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& constraint() const noexcept { return constraint_; }

 private:
  ErrorCode code_;
  std::string constraint_;
};

namespace constraint {
inline constexpr const char* kSlotsDisjoint = "slots-disjoint";
inline constexpr const char* kUniqueEffectTarget = "unique-effect-target";
inline constexpr const char* kTrackLocked = "track-locked";
inline constexpr const char* kIntervalOrdered = "interval-ordered";
inline constexpr const char* kIndexInRange = "index-in-range";
inline constexpr const char* kTargetClass = "target-class";
inline constexpr const char* kTargetExists = "target-exists";
inline constexpr const char* kAcyclicAttachment = "acyclic-attachment";
inline constexpr const char* kUniqueId = "unique-id";
inline constexpr const char* kDeclaredState = "declared-state";
inline constexpr const char* kParamSchema = "param-schema";
inline constexpr const char* kChannelSchema = "channel-schema";
inline constexpr const char* kIdExists = "id-exists";
}  // namespace constraint

}  // namespace reenact
