#include "reenact/timeline.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "reenact/error.hpp"

namespace reenact {

namespace {

void check_interval(Frame start, Frame end) {
  if (start < 0)
    throw Error(ErrorCode::InvalidInterval, fmt::format("start frame {} is negative", start),
                constraint::kIntervalOrdered);
  if (start > end)
    throw Error(ErrorCode::InvalidInterval, fmt::format("start {} is after end {}", start, end),
                constraint::kIntervalOrdered);
}

Error overlap_error(const Slot& other, Frame start, Frame end) {
  return Error(ErrorCode::OverlapRejected,
               fmt::format("[{},{}] overlaps slot {} [{},{}]", start, end, other.id.value, other.start, other.end),
               constraint::kSlotsDisjoint);
}

void sort_slots(std::vector<Slot>& slots) {
  std::sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) { return a.start < b.start; });
}

}  // namespace

const EffectInstance* Slot::find_effect(const EffectId& id) const {
  for (const auto& e : effects)
    if (e.id == id) return &e;
  return nullptr;
}

std::optional<std::size_t> find_overlap(const std::vector<Slot>& slots, Frame start, Frame end, const Slot* skip) {
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (&slots[i] == skip) continue;
    if (slots[i].start <= end && start <= slots[i].end) return i;
  }
  return std::nullopt;
}

Timeline::Timeline(int frame_rate) { set_frame_rate(frame_rate); }

void Timeline::set_frame_rate(int frame_rate) {
  if (frame_rate <= 0) throw Error(ErrorCode::InvalidArgument, fmt::format("frame rate {} must be positive", frame_rate));
  frame_rate_ = frame_rate;
}

std::uint64_t Timeline::take_id() { return next_id_++; }

const Track& Timeline::create_track(std::string name, std::optional<std::size_t> position) {
  const std::size_t at = position.value_or(tracks_.size());
  if (at > tracks_.size())
    throw Error(ErrorCode::IndexOutOfRange, fmt::format("track position {} beyond {}", at, tracks_.size()),
                constraint::kIndexInRange);
  Track t;
  t.id = TrackId(fmt::format("track-{}", take_id()));
  t.name = name.empty() ? fmt::format("Track {}", tracks_.size() + 1) : std::move(name);
  return *tracks_.insert(tracks_.begin() + static_cast<std::ptrdiff_t>(at), std::move(t));
}

void Timeline::reorder_track(const TrackId& id, std::size_t new_index) {
  const std::size_t from = track_index(id);
  unlocked(tracks_[from]);
  if (new_index >= tracks_.size())
    throw Error(ErrorCode::IndexOutOfRange, fmt::format("track index {} beyond {}", new_index, tracks_.size() - 1),
                constraint::kIndexInRange);
  Track moved = std::move(tracks_[from]);
  tracks_.erase(tracks_.begin() + static_cast<std::ptrdiff_t>(from));
  tracks_.insert(tracks_.begin() + static_cast<std::ptrdiff_t>(new_index), std::move(moved));
}

const Track& Timeline::set_track_flags(const TrackId& id, std::optional<bool> muted, std::optional<bool> locked) {
  Track& t = mutable_track(id);
  if (muted) t.muted = *muted;
  if (locked) t.locked = *locked;
  return t;
}

void Timeline::delete_track(const TrackId& id) {
  const std::size_t at = track_index(id);
  unlocked(tracks_[at]);
  tracks_.erase(tracks_.begin() + static_cast<std::ptrdiff_t>(at));
  refresh_duration();
}

const Slot& Timeline::create_slot(const TrackId& track_id, Frame start, Frame end) {
  Track& t = mutable_track(track_id);
  unlocked(t);
  check_interval(start, end);
  if (auto hit = find_overlap(t.slots, start, end)) throw overlap_error(t.slots[*hit], start, end);
  Slot s;
  s.id = SlotId(fmt::format("slot-{}", take_id()));
  s.start = start;
  s.end = end;
  const SlotId sid = s.id;
  t.slots.push_back(std::move(s));
  sort_slots(t.slots);
  refresh_duration();
  return slot(sid);
}

void Timeline::delete_slot(const SlotId& id) {
  const auto loc = locate(id);
  Track& t = tracks_[loc.track];
  unlocked(t);
  t.slots.erase(t.slots.begin() + static_cast<std::ptrdiff_t>(loc.slot));
  refresh_duration();
}

const Slot& Timeline::move_slot(const SlotId& id, const TrackId& dest, Frame new_start) {
  const auto loc = locate(id);
  const std::size_t dest_index = track_index(dest);
  unlocked(tracks_[loc.track]);
  unlocked(tracks_[dest_index]);
  const Slot& current = tracks_[loc.track].slots[loc.slot];
  const Frame length = current.end - current.start;
  check_interval(new_start, new_start + length);
  const Slot* skip = dest_index == loc.track ? &current : nullptr;
  if (auto hit = find_overlap(tracks_[dest_index].slots, new_start, new_start + length, skip))
    throw overlap_error(tracks_[dest_index].slots[*hit], new_start, new_start + length);

  Slot moved = std::move(tracks_[loc.track].slots[loc.slot]);
  tracks_[loc.track].slots.erase(tracks_[loc.track].slots.begin() + static_cast<std::ptrdiff_t>(loc.slot));
  const Frame shift = new_start - moved.start;
  moved.start += shift;
  moved.end += shift;
  for (auto& effect : moved.effects)
    for (auto& [key, channel] : effect.channels)
      for (auto& sample : channel.samples) sample.frame += shift;
  tracks_[dest_index].slots.push_back(std::move(moved));
  sort_slots(tracks_[dest_index].slots);
  refresh_duration();
  return slot(id);
}

const Slot& Timeline::trim_slot(const SlotId& id, std::optional<Frame> new_start, std::optional<Frame> new_end) {
  const auto loc = locate(id);
  Track& t = tracks_[loc.track];
  unlocked(t);
  Slot& s = t.slots[loc.slot];
  const Frame start = new_start.value_or(s.start);
  const Frame end = new_end.value_or(s.end);
  check_interval(start, end);
  if (auto hit = find_overlap(t.slots, start, end, &s)) throw overlap_error(t.slots[*hit], start, end);
  s.start = start;
  s.end = end;
  sort_slots(t.slots);
  refresh_duration();
  return slot(id);
}

const EffectInstance& Timeline::attach_effect(const SlotId& slot_id, EffectType type, const std::string& target,
                                              const Params& params, const Scene& scene) {
  const auto loc = locate(slot_id);
  Track& t = tracks_[loc.track];
  unlocked(t);
  Slot& s = t.slots[loc.slot];
  const SceneObject& object = scene.at(target);
  check_target(type, object);
  for (const auto& e : s.effects)
    if (e.type == type && e.target == target)
      throw Error(ErrorCode::DuplicateEffectTarget,
                  fmt::format("slot {} already has {} on '{}' ({})", s.id.value, to_string(type), target, e.id.value),
                  constraint::kUniqueEffectTarget);
  Params normalized = normalized_params(type, params);
  if (type == EffectType::floating_arrows) scene.at(param_string(normalized, "destination"));
  EffectInstance e;
  e.id = EffectId(fmt::format("fx-{}", take_id()));
  e.type = type;
  e.target = target;
  e.params = std::move(normalized);
  e.captured_initial = capture(object);
  s.effects.push_back(std::move(e));
  return s.effects.back();
}

void Timeline::detach_effect(const SlotId& slot_id, const EffectId& effect_id) {
  const auto loc = locate(slot_id);
  Track& t = tracks_[loc.track];
  unlocked(t);
  auto& effects = t.slots[loc.slot].effects;
  auto it = std::find_if(effects.begin(), effects.end(), [&](const EffectInstance& e) { return e.id == effect_id; });
  if (it == effects.end())
    throw Error(ErrorCode::UnknownEffect, fmt::format("slot {} has no effect {}", slot_id.value, effect_id.value),
                constraint::kIdExists);
  effects.erase(it);
}

const EffectInstance& Timeline::set_effect_params(const EffectId& id, const Params& params, const Scene& scene) {
  const auto loc = locate(id);
  unlocked(tracks_[loc.track]);
  EffectInstance& e = tracks_[loc.track].slots[loc.slot].effects[loc.effect];
  Params normalized = normalized_params(e.type, params);
  if (e.type == EffectType::floating_arrows) scene.at(param_string(normalized, "destination"));
  e.params = std::move(normalized);
  return e;
}

const Track& Timeline::track(const TrackId& id) const { return tracks_[track_index(id)]; }

Track& Timeline::mutable_track(const TrackId& id) { return tracks_[track_index(id)]; }

std::size_t Timeline::track_index(const TrackId& id) const {
  for (std::size_t i = 0; i < tracks_.size(); ++i)
    if (tracks_[i].id == id) return i;
  throw Error(ErrorCode::UnknownTrack, fmt::format("unknown track {}", id.value), constraint::kIdExists);
}

SlotLocation Timeline::locate(const SlotId& id) const {
  for (std::size_t t = 0; t < tracks_.size(); ++t)
    for (std::size_t s = 0; s < tracks_[t].slots.size(); ++s)
      if (tracks_[t].slots[s].id == id) return {t, s};
  throw Error(ErrorCode::UnknownSlot, fmt::format("unknown slot {}", id.value), constraint::kIdExists);
}

EffectLocation Timeline::locate(const EffectId& id) const {
  for (std::size_t t = 0; t < tracks_.size(); ++t)
    for (std::size_t s = 0; s < tracks_[t].slots.size(); ++s) {
      const auto& effects = tracks_[t].slots[s].effects;
      for (std::size_t e = 0; e < effects.size(); ++e)
        if (effects[e].id == id) return {t, s, e};
    }
  throw Error(ErrorCode::UnknownEffect, fmt::format("unknown effect {}", id.value), constraint::kIdExists);
}

const Slot& Timeline::slot(const SlotId& id) const {
  const auto loc = locate(id);
  return tracks_[loc.track].slots[loc.slot];
}

const EffectInstance& Timeline::effect(const EffectId& id) const {
  const auto loc = locate(id);
  return tracks_[loc.track].slots[loc.slot].effects[loc.effect];
}

const Slot& Timeline::slot_of(const EffectId& id) const {
  const auto loc = locate(id);
  return tracks_[loc.track].slots[loc.slot];
}

EffectInstance& Timeline::mutable_effect(const EffectId& id) {
  const auto loc = locate(id);
  return tracks_[loc.track].slots[loc.slot].effects[loc.effect];
}

EffectInstance& Timeline::append_effect(const SlotId& slot_id, EffectInstance effect) {
  const auto loc = locate(slot_id);
  Track& t = tracks_[loc.track];
  unlocked(t);
  auto& effects = t.slots[loc.slot].effects;
  for (const auto& e : effects)
    if (e.type == effect.type && e.target == effect.target)
      throw Error(ErrorCode::DuplicateEffectTarget,
                  fmt::format("slot {} already has {} on '{}'", slot_id.value, to_string(effect.type), effect.target),
                  constraint::kUniqueEffectTarget);
  effects.push_back(std::move(effect));
  return effects.back();
}

EffectId Timeline::allocate_effect_id() { return EffectId(fmt::format("fx-{}", take_id())); }

void Timeline::assemble(std::vector<Track> tracks, std::uint64_t next_id) {
  tracks_ = std::move(tracks);
  next_id_ = next_id;
  refresh_duration();
}

const Track& Timeline::unlocked(const Track& track) const {
  if (track.locked)
    throw Error(ErrorCode::LockedTrack, fmt::format("track {} is locked", track.id.value), constraint::kTrackLocked);
  return track;
}

void Timeline::refresh_duration() {
  duration_ = 0;
  for (const auto& t : tracks_)
    for (const auto& s : t.slots) duration_ = std::max(duration_, s.end);
}

}  // namespace reenact
