#include "reenact/recorder.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "reenact/error.hpp"

namespace reenact {

namespace {

bool recordable(EffectType type) {
  return type == EffectType::rigid_transform || type == EffectType::pose_track ||
         type == EffectType::interactive_state;
}

bool has_samples(const EffectInstance& e) {
  for (const auto& [key, channel] : e.channels)
    if (!channel.samples.empty()) return true;
  return false;
}

}  // namespace

Recorder::Recorder(Project& project, Player& player) : project_(project), player_(player) {}

std::optional<EffectId> Recorder::selected() const {
  if (!active_) return std::nullopt;
  return effect_;
}

std::optional<SlotId> Recorder::slot() const {
  if (!active_) return std::nullopt;
  return slot_;
}

void Recorder::start(const SlotId& slot_id, const EffectId& effect_id, RecordOptions options) {
  if (active_) throw Error(ErrorCode::InvalidTransportTransition, "already recording");
  const Slot& slot = project_.timeline.slot(slot_id);
  if (!slot.find_effect(effect_id))
    throw Error(ErrorCode::UnknownEffect, fmt::format("slot {} has no effect {}", slot_id.value, effect_id.value),
                constraint::kIdExists);
  const auto loc = project_.timeline.locate(slot_id);
  const Track& track = project_.timeline.tracks()[loc.track];
  if (track.locked)
    throw Error(ErrorCode::LockedTrack, fmt::format("track {} is locked", track.id.value), constraint::kTrackLocked);
  const EffectInstance& effect = *slot.find_effect(effect_id);
  if (!recordable(effect.type))
    throw Error(ErrorCode::NotRecordable, fmt::format("{} effects carry no recorded channels", to_string(effect.type)));

  const SlotWindow window = slot.window();
  player_.begin_recording(window.start);

  EffectInstance& e = project_.timeline.mutable_effect(effect_id);
  if (!has_samples(e)) {
    if (const ObjectState* now = player_.state().find(e.target))
      e.captured_initial = capture(*now);
  }
  slot_ = slot_id;
  effect_ = effect_id;
  window_ = window;
  options_ = options;
  last_time_ = 0.0;
  next_frame_ = window.start;
  pending_at_next_ = false;
  root_.reset();
  pose_.reset();
  events_.clear();
  companions_.clear();
  written_.clear();
  last_written_.clear();
  original_.clear();
  for (const auto& [key, channel] : e.channels) original_[key] = channel;
  active_ = true;
}

Frame Recorder::frame_of(double time) const {
  const double fps = static_cast<double>(project_.timeline.frame_rate());
  return window_.start + static_cast<Frame>(std::ceil(time * fps - 1e-9));
}

void Recorder::validate_event(const InputPayload& event) const {
  auto prop_of = [&](const std::string& id) -> const SceneObject& {
    const SceneObject* o = project_.scene.find(id);
    if (!o || o->cls == ObjectClass::character || o->cls == ObjectClass::environment)
      throw Error(ErrorCode::UnknownProp, fmt::format("'{}' is not a registered prop", id), constraint::kTargetExists);
    return *o;
  };
  const EffectInstance& selected = project_.timeline.effect(effect_);
  if (const auto* grab = std::get_if<GrabEvent>(&event)) {
    prop_of(grab->prop);
    check_anchor(project_.scene.at(selected.target), grab->hand);
    if (grab->prop == selected.target)
      throw Error(ErrorCode::CycleRejected, "an object cannot grab itself", constraint::kAcyclicAttachment);
  } else if (const auto* release = std::get_if<ReleaseEvent>(&event)) {
    prop_of(release->prop);
  } else if (const auto* trigger = std::get_if<TriggerEvent>(&event)) {
    const SceneObject& prop = prop_of(trigger->prop);
    check_target(EffectType::interactive_state, prop);
    if (!prop.has_state(trigger->state))
      throw Error(ErrorCode::InvalidState, fmt::format("'{}' is not a state of '{}'", trigger->state, prop.id),
                  constraint::kDeclaredState);
  }
}

IngestResult Recorder::ingest(const InputSample& sample) {
  if (!active_) throw Error(ErrorCode::InvalidTransportTransition, "not recording");
  if (!std::isfinite(sample.time) || sample.time < last_time_ || sample.time < 0.0)
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("sample time {} precedes {} or is invalid", sample.time, last_time_));
  const bool continuous =
      std::holds_alternative<Transform>(sample.payload) || std::holds_alternative<PoseFrame>(sample.payload);
  if (!continuous) validate_event(sample.payload);
  last_time_ = sample.time;

  const Frame f = frame_of(sample.time);
  while (next_frame_ < f && next_frame_ <= window_.end) commit(next_frame_);
  if (!active_) return {window_.end, true};

  if (const auto* t = std::get_if<Transform>(&sample.payload))
    root_ = *t;
  else if (const auto* p = std::get_if<PoseFrame>(&sample.payload))
    pose_ = *p;
  else if (f <= window_.end)
    events_.push_back({f, sample.payload});
  if (f <= window_.end) pending_at_next_ = true;

  if (next_frame_ > window_.end || f > window_.end) {
    if (next_frame_ <= window_.end) commit(window_.end);
    finish();
    return {window_.end, true};
  }
  return {next_frame_ - 1 >= window_.start ? next_frame_ - 1 : -1, false};
}

IngestResult Recorder::stop() {
  if (!active_) throw Error(ErrorCode::InvalidTransportTransition, "not recording");
  if (pending_at_next_ && next_frame_ <= window_.end) commit(next_frame_);
  const Frame last = next_frame_ - 1;
  finish();
  return {last >= window_.start ? last : -1, true};
}

void Recorder::commit(Frame frame) {
  std::vector<PendingEvent> due;
  std::erase_if(events_, [&](const PendingEvent& ev) {
    if (ev.frame > frame) return false;
    due.push_back(ev);
    return true;
  });
  for (const auto& ev : due) apply_event(ev.event, frame);

  EffectInstance& e = project_.timeline.mutable_effect(effect_);
  if (root_ && e.type != EffectType::interactive_state) {
    write(e, {Attribute::position_x, 0}, root_->position.x(), frame);
    write(e, {Attribute::position_y, 0}, root_->position.y(), frame);
    write(e, {Attribute::position_z, 0}, root_->position.z(), frame);
    write(e, {Attribute::rotation, 0}, root_->rotation, frame);
    if (e.type == EffectType::rigid_transform) write(e, {Attribute::scale, 0}, root_->scale, frame);
  }
  if (pose_ && e.type == EffectType::pose_track) {
    for (std::size_t j = 0; j < kJointCount; ++j)
      write(e, {Attribute::joint, static_cast<int>(j)}, (*pose_)[j], frame);
  }
  player_.record_frame();
  next_frame_ = frame + 1;
  pending_at_next_ = false;
  if (next_frame_ > window_.end) finish();
}

void Recorder::apply_event(const InputPayload& event, Frame frame) {
  const EffectInstance& selected = project_.timeline.effect(effect_);
  const std::string character = selected.target;
  if (const auto* grab = std::get_if<GrabEvent>(&event)) {
    EffectInstance& c = companion(EffectType::rigid_transform, grab->prop);
    write(c, {Attribute::attachment, 0}, std::optional<AttachmentRef>(AttachmentRef{character, grab->hand, {}}),
          frame);
  } else if (const auto* release = std::get_if<ReleaseEvent>(&event)) {
    EffectInstance& c = companion(EffectType::rigid_transform, release->prop);
    write(c, {Attribute::attachment, 0}, std::optional<AttachmentRef>{}, frame);
    if (release->physics) c.params["physics"] = true;
  } else if (const auto* trigger = std::get_if<TriggerEvent>(&event)) {
    EffectInstance& c = companion(EffectType::interactive_state, trigger->prop);
    record_state_event(c, project_.scene.at(trigger->prop), frame, trigger->state);
    written_.insert({c.id.value, ChannelKey{Attribute::state, 0}});
  }
}

EffectInstance& Recorder::companion(EffectType type, const std::string& prop) {
  const Slot& slot = project_.timeline.slot(slot_);
  for (const auto& e : slot.effects)
    if (e.type == type && e.target == prop) {
      if (e.id != effect_ && std::find(companions_.begin(), companions_.end(), e.id) == companions_.end())
        companions_.push_back(e.id);
      return project_.timeline.mutable_effect(e.id);
    }
  EffectInstance e;
  e.id = project_.timeline.allocate_effect_id();
  e.type = type;
  e.target = prop;
  e.params = normalized_params(type, {});
  if (const ObjectState* now = player_.state().find(prop))
    e.captured_initial = capture(*now);
  else
    e.captured_initial = capture(project_.scene.at(prop));
  companions_.push_back(e.id);
  return project_.timeline.append_effect(slot_, std::move(e));
}

void Recorder::write(EffectInstance& effect, const ChannelKey& key, SampleValue value, Frame frame) {
  const bool fresh = !effect.channels.contains(key) || effect.channels.at(key).samples.empty();
  Channel& channel = effect.channels[key];
  const ValueKind kind = value_kind(key.attribute);
  const bool numeric = kind == ValueKind::scalar || kind == ValueKind::vec3;
  if (fresh) channel.encoding = numeric ? options_.encoding : Encoding::absolute;
  const bool first_in_take = written_.insert({effect.id.value, key}).second;
  if (channel.encoding == Encoding::absolute) {
    upsert_sample(channel, frame, std::move(value));
  } else {
    const auto base = initial_value(effect.captured_initial, key);
    auto previous = evaluate_channel(channel, window_, frame - 1, base);
    if (!previous) previous = base;
    SampleValue delta;
    bool zero = false;
    if (const auto* x = std::get_if<double>(&value)) {
      delta = *x - std::get<double>(*previous);
      zero = std::get<double>(delta) == 0.0;
    } else {
      delta = Vec3(std::get<Vec3>(value) - std::get<Vec3>(*previous));
      zero = std::get<Vec3>(delta).isZero(0.0);
    }
    erase_samples(channel, frame, frame);
    if (!zero || first_in_take) upsert_sample(channel, frame, std::move(delta));
  }
  if (effect.id == effect_) last_written_[key] = frame;
}

void Recorder::finish() {
  if (!active_) return;
  // keep delta channels continuous after the punched-in range
  EffectInstance& e = project_.timeline.mutable_effect(effect_);
  for (const auto& [key, last] : last_written_) {
    auto orig = original_.find(key);
    if (orig == original_.end() || orig->second.encoding != Encoding::delta) continue;
    Channel& channel = e.channels[key];
    if (channel.encoding != Encoding::delta) continue;
    auto next = std::find_if(channel.samples.begin(), channel.samples.end(),
                             [&](const Sample& s) { return s.frame > last; });
    if (next == channel.samples.end()) continue;
    const Frame g = next->frame;
    const auto base = initial_value(e.captured_initial, key);
    const auto wanted = evaluate_channel(orig->second, window_, g, base);
    const auto before = evaluate_channel(channel, window_, g - 1, base);
    if (!wanted || !before) continue;
    if (const auto* x = std::get_if<double>(&*wanted))
      next->value = *x - std::get<double>(*before);
    else
      next->value = Vec3(std::get<Vec3>(*wanted) - std::get<Vec3>(*before));
  }
  active_ = false;
  player_.end_recording();
}

}  // namespace reenact
