#pragma once

#include <functional>
#include <map>
#include <unordered_map>
#include <vector>

#include "reenact/effects.hpp"
#include "reenact/project.hpp"

namespace reenact {

using SignalSink = std::function<void(const EffectId&, const EffectSignal&)>;

/// Reset scene: every object at its registered initial values (frame -1).
SceneState initial_state(const Project& project);

/// Frame-by-frame resolver. Each step delivers lifecycle signals to the
/// effects whose slot contains the new frame, collects their proposals against
/// the previous frame's accumulator and applies them lowest priority first.
/// Copying an evaluator yields an independent checkpoint of the same pass.
class Evaluator {
 public:
  explicit Evaluator(const Project& project);

  /// Evaluates frame() + 1.
  const SceneState& step(const SignalSink& sink = {}, bool scan = true);
  /// Sends PAUSE(frame()) to every started effect.
  void pause_active(const SignalSink& sink = {}, bool scan = true);

  Frame frame() const { return state_.frame; }
  const SceneState& state() const { return state_; }

 private:
  void apply(const Write& write);
  void resolve_world();

  const Project* project_;
  SceneState state_;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<EffectId, EffectRuntime> runtimes_;
  std::vector<std::optional<AttachmentRef>> released_;
};

/// Naive full scan 0..frame. Frames beyond the duration clamp to it.
SceneState state_at(const Project& project, Frame frame);

/// Checkpointed state_at. Stores an evaluator every `interval` frames; must be
/// cleared whenever the project changes.
class StateCache {
 public:
  explicit StateCache(const Project& project, Frame interval = 300);

  SceneState state_at(Frame frame);
  void clear() { checkpoints_.clear(); }

 private:
  const Project* project_;
  Frame interval_;
  std::map<Frame, Evaluator> checkpoints_;
};

/// One state per `stride`-th frame of [from, to], from a single pass.
std::vector<SceneState> export_trace(const Project& project, Frame from, Frame to, Frame stride = 1);

enum class TransportMode { stopped, playing, paused, recording };

std::string_view to_string(TransportMode mode);

/// Transport state machine driving live signals.
class Player {
 public:
  explicit Player(const Project& project, SignalSink sink = {});

  TransportMode mode() const { return mode_; }
  Frame cursor() const { return cursor_; }
  const SceneState& state() const { return shown_; }

  /// Scans 0..cursor-1, then delivers START/UPDATE for the cursor frame live.
  void play();
  void pause();
  void stop();
  /// Advances one live frame while playing. Returns false once the end is
  /// reached (mode becomes stopped).
  bool tick();
  void seek(Frame frame);
  /// Single-frame advance: a tick while playing, otherwise seek(cursor + 1).
  void step();

  /// Recording hooks. The recorder mutates channel data between frames.
  void begin_recording(Frame start);
  void record_frame();
  void end_recording();

  /// The project changed underneath; drop cached state and re-derive the view.
  void invalidate();

 private:
  void rescan(Frame cursor);
  void finish_if_at_end();

  const Project* project_;
  SignalSink sink_;
  TransportMode mode_ = TransportMode::stopped;
  Frame cursor_ = 0;
  Evaluator live_;
  StateCache cache_;
  SceneState shown_;
};

}  // namespace reenact
