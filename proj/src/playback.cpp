#include "reenact/playback.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "reenact/error.hpp"

namespace reenact {

namespace {

const Slot* slot_containing(const Track& track, Frame frame) {
  auto it = std::upper_bound(track.slots.begin(), track.slots.end(), frame,
                             [](Frame f, const Slot& s) { return f < s.start; });
  if (it == track.slots.begin()) return nullptr;
  --it;
  return it->end >= frame ? &*it : nullptr;
}

void emit(const SignalSink& sink, const EffectId& id, SignalKind kind, Frame frame, bool scan) {
  if (sink) sink(id, EffectSignal{kind, frame, scan});
}

}  // namespace

SceneState initial_state(const Project& project) {
  SceneState s;
  s.frame = -1;
  for (const auto& o : project.scene.objects()) {
    ObjectState st;
    st.id = o.id;
    st.local = o.initial;
    st.world = o.initial;
    if (o.triggerable) st.state = o.initial_state;
    if (o.cls == ObjectClass::character) st.pose = o.initial_pose.value_or(rest_pose());
    st.attachment = o.attachment;
    s.objects.push_back(std::move(st));
  }
  return s;
}

Evaluator::Evaluator(const Project& project) : project_(&project), state_(initial_state(project)) {
  for (std::size_t i = 0; i < state_.objects.size(); ++i) index_[state_.objects[i].id] = i;
  released_.resize(state_.objects.size());
  resolve_world();
}

const SceneState& Evaluator::step(const SignalSink& sink, bool scan) {
  const Frame t = state_.frame + 1;
  for (auto& o : state_.objects) {
    o.fire.reset();
    o.arrows.clear();
  }
  const EvalContext ctx{state_, project_->scene.floor_plan(), project_->timeline.frame_rate()};
  std::vector<Write> writes;
  const auto& tracks = project_->timeline.tracks();
  for (std::size_t i = tracks.size(); i-- > 0;) {
    const Track& track = tracks[i];
    if (track.muted) continue;
    const Slot* slot = slot_containing(track, t);
    if (!slot) continue;
    for (const auto& effect : slot->effects) {
      EffectRuntime& rt = runtimes_[effect.id];
      if (!rt.started()) {
        rt.start(effect, slot->window(), t);
        emit(sink, effect.id, SignalKind::start, t, scan);
      }
      rt.update(effect, slot->window(), t, ctx, writes);
      emit(sink, effect.id, SignalKind::update, t, scan);
      if (t == slot->end) {
        rt.pause(t);
        emit(sink, effect.id, SignalKind::pause, t, scan);
      }
    }
  }
  for (const auto& w : writes) apply(w);
  resolve_world();
  for (auto& o : state_.objects)
    for (auto& arrow : o.arrows) {
      arrow.from = state_.objects[index_.at(arrow.source)].world.position;
      arrow.to = state_.objects[index_.at(arrow.destination)].world.position;
    }
  state_.frame = t;
  return state_;
}

void Evaluator::pause_active(const SignalSink& sink, bool scan) {
  // deterministic order: priority order as delivered by step
  const auto& tracks = project_->timeline.tracks();
  for (std::size_t i = tracks.size(); i-- > 0;)
    for (const auto& slot : tracks[i].slots)
      for (const auto& effect : slot.effects) {
        auto it = runtimes_.find(effect.id);
        if (it == runtimes_.end() || !it->second.started()) continue;
        it->second.pause(state_.frame);
        emit(sink, effect.id, SignalKind::pause, state_.frame, scan);
      }
}

void Evaluator::apply(const Write& w) {
  auto found = index_.find(w.target);
  if (found == index_.end()) throw Error(ErrorCode::UnknownTarget, fmt::format("unknown object '{}'", w.target));
  const std::size_t idx = found->second;
  ObjectState& o = state_.objects[idx];
  switch (w.key.attribute) {
    case Attribute::position_x: o.local.position.x() = std::get<double>(w.value); break;
    case Attribute::position_y: o.local.position.y() = std::get<double>(w.value); break;
    case Attribute::position_z: o.local.position.z() = std::get<double>(w.value); break;
    case Attribute::rotation: o.local.rotation = std::get<Quat>(w.value); break;
    case Attribute::scale: o.local.scale = std::get<Vec3>(w.value); break;
    case Attribute::joint:
      if (o.pose) (*o.pose)[static_cast<std::size_t>(w.key.joint)] = std::get<Vec3>(w.value);
      break;
    case Attribute::state: o.state = std::get<std::string>(w.value); break;
    case Attribute::attachment: {
      const auto& ref = std::get<std::optional<AttachmentRef>>(w.value);
      if (!ref && o.attachment) {
        released_[idx] = o.attachment;
      } else if (ref) {
        released_[idx].reset();
      }
      o.attachment = ref;
      break;
    }
    case Attribute::fire: o.fire = std::get<FireDecoration>(w.value); break;
    case Attribute::arrow:
      o.arrows.clear();
      o.arrows.push_back(std::get<ArrowDecoration>(w.value));
      break;
  }
}

void Evaluator::resolve_world() {
  const std::size_t n = state_.objects.size();
  std::vector<char> done(n, 0);
  std::function<void(std::size_t, std::size_t)> resolve = [&](std::size_t i, std::size_t depth) {
    if (done[i]) return;
    if (depth > n)
      throw Error(ErrorCode::CycleRejected, "attachment cycle during resolution", constraint::kAcyclicAttachment);
    ObjectState& o = state_.objects[i];
    const std::optional<AttachmentRef>& ref = o.attachment ? o.attachment : released_[i];
    if (ref) {
      auto parent = index_.find(ref->parent);
      if (parent == index_.end())
        throw Error(ErrorCode::UnknownTarget, fmt::format("'{}' attached to missing '{}'", o.id, ref->parent));
      resolve(parent->second, depth + 1);
      o.world = anchor_transform(state_.objects[parent->second], ref->anchor).compose(ref->offset);
      if (!o.attachment) {
        // released this frame: keep the world transform it has now
        o.local = o.world;
        released_[i].reset();
      }
    } else {
      o.world = o.local;
    }
    done[i] = 1;
  };
  for (std::size_t i = 0; i < n; ++i) resolve(i, 0);
}

SceneState state_at(const Project& project, Frame frame) {
  if (frame < 0) throw Error(ErrorCode::InvalidRange, fmt::format("frame {} is negative", frame));
  const Frame target = std::min(frame, project.timeline.duration());
  Evaluator ev(project);
  while (ev.frame() < target) ev.step();
  return ev.state();
}

StateCache::StateCache(const Project& project, Frame interval) : project_(&project), interval_(interval) {
  if (interval_ < 1) throw Error(ErrorCode::InvalidArgument, "checkpoint interval must be positive");
}

SceneState StateCache::state_at(Frame frame) {
  if (frame < 0) throw Error(ErrorCode::InvalidRange, fmt::format("frame {} is negative", frame));
  const Frame target = std::min(frame, project_->timeline.duration());
  auto it = checkpoints_.upper_bound(target);
  Evaluator ev = it == checkpoints_.begin() ? Evaluator(*project_) : std::prev(it)->second;
  while (ev.frame() < target) {
    ev.step();
    if (ev.frame() % interval_ == 0 && !checkpoints_.contains(ev.frame())) checkpoints_.emplace(ev.frame(), ev);
  }
  return ev.state();
}

std::vector<SceneState> export_trace(const Project& project, Frame from, Frame to, Frame stride) {
  const Frame duration = project.timeline.duration();
  if (from < 0 || from > to || to > duration || stride < 1)
    throw Error(ErrorCode::InvalidRange,
                fmt::format("range [{},{}] stride {} invalid for duration {}", from, to, stride, duration));
  std::vector<SceneState> out;
  out.reserve(static_cast<std::size_t>((to - from) / stride + 1));
  Evaluator ev(project);
  while (ev.frame() < to) {
    ev.step();
    if (ev.frame() >= from && (ev.frame() - from) % stride == 0) out.push_back(ev.state());
  }
  return out;
}

std::string_view to_string(TransportMode mode) {
  switch (mode) {
    case TransportMode::stopped: return "stopped";
    case TransportMode::playing: return "playing";
    case TransportMode::paused: return "paused";
    case TransportMode::recording: return "recording";
  }
  return "stopped";
}

namespace {

Error bad_transition(TransportMode from, std::string_view what) {
  return Error(ErrorCode::InvalidTransportTransition, fmt::format("cannot {} while {}", what, to_string(from)));
}

}  // namespace

Player::Player(const Project& project, SignalSink sink)
    : project_(&project), sink_(std::move(sink)), live_(project), cache_(project) {
  shown_ = cache_.state_at(0);
}

void Player::rescan(Frame cursor) {
  live_ = Evaluator(*project_);
  while (live_.frame() < cursor - 1) live_.step(sink_, true);
  live_.pause_active(sink_, true);
}

void Player::play() {
  if (mode_ != TransportMode::stopped && mode_ != TransportMode::paused) throw bad_transition(mode_, "play");
  cursor_ = std::min(cursor_, project_->timeline.duration());
  rescan(cursor_);
  shown_ = live_.step(sink_, false);
  mode_ = TransportMode::playing;
  finish_if_at_end();
}

void Player::finish_if_at_end() {
  if (cursor_ < project_->timeline.duration()) return;
  live_.pause_active(sink_, false);
  mode_ = TransportMode::stopped;
}

bool Player::tick() {
  if (mode_ != TransportMode::playing) throw bad_transition(mode_, "tick");
  shown_ = live_.step(sink_, false);
  cursor_ = live_.frame();
  finish_if_at_end();
  return mode_ == TransportMode::playing;
}

void Player::pause() {
  if (mode_ != TransportMode::playing) throw bad_transition(mode_, "pause");
  live_.pause_active(sink_, false);
  mode_ = TransportMode::paused;
}

void Player::stop() {
  if (mode_ != TransportMode::playing) throw bad_transition(mode_, "stop");
  live_.pause_active(sink_, false);
  mode_ = TransportMode::stopped;
}

void Player::seek(Frame frame) {
  if (mode_ == TransportMode::recording) throw bad_transition(mode_, "seek");
  if (frame < 0) throw Error(ErrorCode::InvalidRange, fmt::format("seek to negative frame {}", frame));
  const Frame target = std::min(frame, project_->timeline.duration());
  if (mode_ == TransportMode::playing) {
    live_.pause_active(sink_, false);
    cursor_ = target;
    rescan(cursor_);
    shown_ = live_.step(sink_, false);
    finish_if_at_end();
    return;
  }
  cursor_ = target;
  shown_ = cache_.state_at(cursor_);
}

void Player::step() {
  if (mode_ == TransportMode::playing) {
    tick();
    return;
  }
  seek(cursor_ + 1);
}

void Player::begin_recording(Frame start) {
  if (mode_ != TransportMode::stopped && mode_ != TransportMode::paused) throw bad_transition(mode_, "record");
  cursor_ = start;
  rescan(start);
  shown_ = live_.state();
  mode_ = TransportMode::recording;
}

void Player::record_frame() {
  if (mode_ != TransportMode::recording) throw bad_transition(mode_, "record a frame");
  shown_ = live_.step(sink_, false);
  cursor_ = live_.frame();
}

void Player::end_recording() {
  if (mode_ != TransportMode::recording) throw bad_transition(mode_, "stop recording");
  live_.pause_active(sink_, false);
  cache_.clear();
  mode_ = TransportMode::paused;
}

void Player::invalidate() {
  cache_.clear();
  switch (mode_) {
    case TransportMode::playing:
      live_.pause_active(sink_, false);
      cursor_ = std::min(cursor_, project_->timeline.duration());
      rescan(cursor_);
      shown_ = live_.step(sink_, false);
      finish_if_at_end();
      break;
    case TransportMode::recording: break;
    default:
      cursor_ = std::min(cursor_, project_->timeline.duration());
      shown_ = cache_.state_at(cursor_);
      break;
  }
}

}  // namespace reenact
