#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "reenact/geometry.hpp"
#include "reenact/ids.hpp"
#include "reenact/scene.hpp"

namespace reenact {

enum class EffectType { rigid_transform, pose_track, interactive_state, floating_arrows, fire };

std::string_view to_string(EffectType type);
std::optional<EffectType> parse_effect_type(std::string_view text);

// ---------------------------------------------------------------------------
// Channels

/// Animatable attribute. `fire` and `arrow` are decoration writes only and
/// never carry stored channel data.
enum class Attribute {
  position_x,
  position_y,
  position_z,
  rotation,
  scale,
  joint,
  state,
  attachment,
  fire,
  arrow,
};

struct ChannelKey {
  Attribute attribute = Attribute::position_x;
  int joint = 0;  // Attribute::joint only

  auto operator<=>(const ChannelKey&) const = default;
};

std::string to_string(const ChannelKey& key);
std::optional<ChannelKey> parse_channel_key(std::string_view text);

enum class Encoding { absolute, delta };

std::string_view to_string(Encoding encoding);
std::optional<Encoding> parse_encoding(std::string_view text);

enum class ValueKind { scalar, vec3, quat, state, attachment };

ValueKind value_kind(Attribute attribute);

using SampleValue = std::variant<double, Vec3, Quat, std::string, std::optional<AttachmentRef>>;

bool bit_equal(const SampleValue& a, const SampleValue& b);

struct Sample {
  Frame frame = 0;
  SampleValue value;
};

/// Samples are strictly increasing in frame. Delta channels store per-frame
/// changes; their implicit base is the effect's captured initial value.
struct Channel {
  Encoding encoding = Encoding::absolute;
  std::vector<Sample> samples;
};

using ChannelData = std::map<ChannelKey, Channel>;

/// Inserts or replaces the sample at `frame`, keeping order.
void upsert_sample(Channel& channel, Frame frame, SampleValue value);
/// Removes samples with frame in [first, last].
void erase_samples(Channel& channel, Frame first, Frame last);

// ---------------------------------------------------------------------------
// Parameters

using ParamValue = std::variant<bool, std::int64_t, double, std::string>;
using Params = std::map<std::string, ParamValue>;

enum class ParamKind { boolean, integer, real, choice, object_ref };

struct ParamSpec {
  std::string_view name;
  ParamKind kind;
  ParamValue fallback;
  std::vector<std::string_view> choices;
  bool required = false;
};

std::span<const ParamSpec> param_schema(EffectType type);

/// Strict check against the type's schema; returns params with defaults filled.
/// Throws InvalidParam for unknown names, wrong kinds, or missing required values.
Params normalized_params(EffectType type, const Params& params);

bool param_bool(const Params& params, std::string_view name);
std::int64_t param_int(const Params& params, std::string_view name);
const std::string& param_string(const Params& params, std::string_view name);

/// Whether effects of `type` may store (or write) `attribute`.
bool writes_attribute(EffectType type, Attribute attribute);

/// Throws IncompatibleTarget when `type` cannot drive `target`'s class.
void check_target(EffectType type, const SceneObject& target);

// ---------------------------------------------------------------------------
// Effect instances

struct CapturedInitial {
  Transform transform;
  std::optional<std::string> state;
  std::optional<PoseFrame> pose;
};

CapturedInitial capture(const SceneObject& object);
CapturedInitial capture(const ObjectState& state);

/// Value of `key` in a captured snapshot; nullopt for attributes it does not hold.
std::optional<SampleValue> initial_value(const CapturedInitial& initial, const ChannelKey& key);

struct EffectInstance {
  EffectId id;
  EffectType type = EffectType::rigid_transform;
  std::string target;
  Params params;
  ChannelData channels;
  CapturedInitial captured_initial;
};

struct SlotWindow {
  Frame start = 0;
  Frame end = 0;
  bool contains(Frame f) const { return f >= start && f <= end; }
};

/// Replay value of a channel at `frame`, considering only samples inside
/// `window`. Before the first sample the captured initial value applies; after
/// the last sample the last value holds. nullopt when no sample is in range.
std::optional<SampleValue> evaluate_channel(const Channel& channel, SlotWindow window, Frame frame,
                                            const std::optional<SampleValue>& initial);

/// Delta channel → keyframed-absolute channel producing the same replay.
Channel to_absolute(const Channel& delta, const SampleValue& base);
/// Keyframed-absolute channel → per-frame delta channel producing the same replay.
Channel to_delta(const Channel& absolute, const SampleValue& base, SlotWindow window);

/// Records a discrete-state change (InteractiveState). Throws InvalidState.
void record_state_event(EffectInstance& effect, const SceneObject& target, Frame frame, const std::string& state);

// ---------------------------------------------------------------------------
// Lifecycle

enum class SignalKind { start, update, pause };

std::string_view to_string(SignalKind kind);

struct EffectSignal {
  SignalKind kind = SignalKind::start;
  Frame frame = 0;
  bool scan = false;
  bool operator==(const EffectSignal&) const = default;
};

using WriteValue = std::variant<double, Vec3, Quat, std::string, std::optional<AttachmentRef>, FireDecoration,
                                ArrowDecoration>;

/// A proposed channel write. Priority resolution happens in playback.
struct Write {
  std::string target;
  ChannelKey key;
  WriteValue value;
};

struct EvalContext {
  const SceneState& accumulator;  // resolved state of the previous frame
  const FloorPlan& floor_plan;
  int frame_rate = 30;
};

/// Per-pass playback state of one effect instance (channel cursors, delta
/// sums, physics). Copyable so evaluators can checkpoint.
class EffectRuntime {
 public:
  void start(const EffectInstance& effect, SlotWindow window, Frame frame);
  void update(const EffectInstance& effect, SlotWindow window, Frame frame, const EvalContext& ctx,
              std::vector<Write>& out);
  void pause(Frame frame);

  bool started() const { return started_; }

 private:
  struct DeltaCursor {
    std::size_t next = 0;
    SampleValue sum;
  };

  struct Ballistic {
    Frame handoff = 0;
    bool from_detach = false;
    Frame at = 0;
    Vec3 position = Vec3::Zero();
    Vec3 velocity = Vec3::Zero();
    bool resting = false;
  };

  std::optional<SampleValue> channel_value(const EffectInstance& effect, const ChannelKey& key, const Channel& channel,
                                           SlotWindow window, Frame frame);
  void fold_deltas(const EffectInstance& effect, const ChannelKey& key, const Channel& channel, SlotWindow window,
                   Frame through);
  void update_rigid(const EffectInstance& effect, SlotWindow window, Frame frame, const EvalContext& ctx,
                    std::vector<Write>& out);
  bool simulate(const EffectInstance& effect, SlotWindow window, Frame frame, const EvalContext& ctx,
                std::vector<Write>& out);

  bool started_ = false;
  std::map<ChannelKey, DeltaCursor> deltas_;
  std::optional<Ballistic> ballistic_;
  // Target world positions observed at the two most recent frames.
  std::optional<std::pair<Frame, Vec3>> seen_last_;
  std::optional<std::pair<Frame, Vec3>> seen_prev_;
};

/// One constant-gravity step of `dt` seconds from (position, velocity), stopping
/// at ground contact (y = 0) or the first wall. Returns true when at rest.
bool ballistic_step(Vec3& position, Vec3& velocity, double dt, const FloorPlan& plan);

}  // namespace reenact
