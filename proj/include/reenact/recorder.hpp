#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "reenact/playback.hpp"
#include "reenact/project.hpp"

namespace reenact {

struct GrabEvent {
  std::string prop;
  std::string hand = "right_hand";
};

struct ReleaseEvent {
  std::string prop;
  bool physics = false;
};

struct TriggerEvent {
  std::string prop;
  std::string state;
};

using InputPayload = std::variant<Transform, PoseFrame, GrabEvent, ReleaseEvent, TriggerEvent>;

/// Device-agnostic input. `time` is seconds since the recording started.
struct InputSample {
  double time = 0.0;
  InputPayload payload;
};

struct RecordOptions {
  Encoding encoding = Encoding::delta;  // scalar and vector channels only
};

struct IngestResult {
  Frame committed = -1;  // last frame written and evaluated, -1 if none yet
  bool finished = false;  // reached the slot end
};

/// Selected-effect recording. Samples advance frames: frame f takes the latest
/// sample whose time is at or before (f - start) / frame_rate. Grab, release
/// and trigger events append companion effects to the recorded slot.
class Recorder {
 public:
  Recorder(Project& project, Player& player);

  void start(const SlotId& slot, const EffectId& effect, RecordOptions options = {});
  IngestResult ingest(const InputSample& sample);
  /// Commits the pending frame and returns the transport to paused.
  IngestResult stop();

  bool active() const { return active_; }
  const std::vector<EffectId>& companions() const { return companions_; }
  std::optional<EffectId> selected() const;
  std::optional<SlotId> slot() const;

 private:
  struct PendingEvent {
    Frame frame;
    InputPayload event;
  };

  Frame frame_of(double time) const;
  void validate_event(const InputPayload& event) const;
  void commit(Frame frame);
  void apply_event(const InputPayload& event, Frame frame);
  void write(EffectInstance& effect, const ChannelKey& key, SampleValue value, Frame frame);
  EffectInstance& companion(EffectType type, const std::string& prop);
  void finish();

  Project& project_;
  Player& player_;
  bool active_ = false;
  SlotId slot_;
  EffectId effect_;
  SlotWindow window_;
  RecordOptions options_;
  double last_time_ = 0.0;
  Frame next_frame_ = 0;
  bool pending_at_next_ = false;
  std::optional<Transform> root_;
  std::optional<PoseFrame> pose_;
  std::vector<PendingEvent> events_;
  std::vector<EffectId> companions_;
  std::set<std::pair<std::string, ChannelKey>> written_;
  std::map<ChannelKey, Channel> original_;  // selected effect channels before the take
  std::map<ChannelKey, Frame> last_written_;
};

}  // namespace reenact
