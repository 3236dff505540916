#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "reenact/project.hpp"

namespace reenact {

inline constexpr int kProjectVersion = 1;
inline constexpr std::string_view kProjectFormat = "reenact-project";

/// Canonical manifest bytes (sorted keys, two-space indent, trailing newline).
/// Throws ValidationFailed when the project does not validate.
std::string save_project(const Project& project);
/// Throws MalformedFile (byte offset or JSON pointer), UnsupportedVersion or
/// ValidationFailed.
Project load_project(std::string_view bytes);

/// Structurally decoded manifest whose invariants have not been checked.
struct DecodedProject {
  Project project;
  std::int64_t declared_duration = 0;
};

/// Throws MalformedFile or UnsupportedVersion only; run validate() on the result.
DecodedProject decode_project(std::string_view bytes);
DecodedProject decode_project_json(const nlohmann::json& doc);

nlohmann::json project_to_json(const Project& project);
Project project_from_json(const nlohmann::json& doc);

void save_project_file(const Project& project, const std::filesystem::path& path);
Project load_project_file(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);  // throws IoError
void write_file(const std::filesystem::path& path, std::string_view bytes);

/// Base64 of the little-endian channel layout.
std::string encode_channel(const Channel& channel, ValueKind kind);
Channel decode_channel(std::string_view base64, ValueKind kind, Encoding encoding);

nlohmann::json transform_to_json(const Transform& t);
Transform transform_from_json(const nlohmann::json& j);
nlohmann::json object_to_json(const SceneObject& object);
SceneObject object_from_json(const nlohmann::json& j);
nlohmann::json effect_to_json(const EffectInstance& effect);
Params params_from_json(const nlohmann::json& j);
/// One frame of the structured trace (reals rounded to 9 digits).
nlohmann::json state_to_json(const SceneState& state);

// ---------------------------------------------------------------------------
// Traces

enum class TraceFormat { rows, structured };

/// rows: `frame,object,x,y,z,qw,qx,qy,qz,state,decorations`, one line per
/// (frame, object). structured: one JSON document of per-frame objects.
/// Reals carry 9 significant digits.
std::string write_trace(const std::vector<SceneState>& states, TraceFormat format);

/// %.9g with negative zero printed as 0.
std::string format_real(double value);

/// Ground-plane paths per object from a rows trace.
std::map<std::string, TimedPath> read_trace_paths(std::string_view csv);

// ---------------------------------------------------------------------------
// Telemetry

struct TelemetrySample {
  double t = 0.0;
  Vec2 position = Vec2::Zero();  // ground plane
  double height = 0.0;
  double yaw_deg = 0.0;    // [0, 360), counter-clockwise from +x
  double pitch_deg = 0.0;  // negative looks down
};

struct TelemetryStream {
  std::string participant;
  std::string task;
  std::vector<TelemetrySample> samples;
};

/// CSV `participant,task,t,x,y,height,yaw_deg[,pitch_deg]`. Streams are keyed
/// by (participant, task) in order of first appearance. Throws
/// MalformedTelemetry whose message starts with "line N".
std::vector<TelemetryStream> read_telemetry(std::string_view csv);

}  // namespace reenact
