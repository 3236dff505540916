#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "reenact/effects.hpp"
#include "reenact/ids.hpp"
#include "reenact/scene.hpp"

namespace reenact {

/// Inclusive frame interval carrying effects.
struct Slot {
  SlotId id;
  Frame start = 0;
  Frame end = 0;
  std::vector<EffectInstance> effects;

  SlotWindow window() const { return {start, end}; }
  const EffectInstance* find_effect(const EffectId& id) const;
};

struct Track {
  TrackId id;
  std::string name;
  std::vector<Slot> slots;  // sorted by start, pairwise disjoint
  bool muted = false;
  bool locked = false;
};

struct SlotLocation {
  std::size_t track = 0;
  std::size_t slot = 0;
};

struct EffectLocation {
  std::size_t track = 0;
  std::size_t slot = 0;
  std::size_t effect = 0;
};

/// The track container. Index 0 is the highest priority track.
class Timeline {
 public:
  explicit Timeline(int frame_rate = 30);

  int frame_rate() const { return frame_rate_; }
  void set_frame_rate(int frame_rate);
  Frame duration() const { return duration_; }
  const std::vector<Track>& tracks() const { return tracks_; }

  const Track& create_track(std::string name = {}, std::optional<std::size_t> position = {});
  void reorder_track(const TrackId& id, std::size_t new_index);
  const Track& set_track_flags(const TrackId& id, std::optional<bool> muted, std::optional<bool> locked);
  void delete_track(const TrackId& id);

  const Slot& create_slot(const TrackId& track, Frame start, Frame end);
  void delete_slot(const SlotId& id);
  /// Relocates a slot keeping its length; channel samples shift with it.
  const Slot& move_slot(const SlotId& id, const TrackId& dest, Frame new_start);
  /// Samples that fall outside the new interval are kept but not replayed.
  const Slot& trim_slot(const SlotId& id, std::optional<Frame> new_start, std::optional<Frame> new_end);

  const EffectInstance& attach_effect(const SlotId& slot, EffectType type, const std::string& target,
                                      const Params& params, const Scene& scene);
  void detach_effect(const SlotId& slot, const EffectId& effect);
  const EffectInstance& set_effect_params(const EffectId& id, const Params& params, const Scene& scene);

  const Track& track(const TrackId& id) const;
  std::size_t track_index(const TrackId& id) const;
  SlotLocation locate(const SlotId& id) const;
  EffectLocation locate(const EffectId& id) const;
  const Slot& slot(const SlotId& id) const;
  const EffectInstance& effect(const EffectId& id) const;
  const Slot& slot_of(const EffectId& id) const;

  /// Unchecked access for the recorder; callers keep channel invariants.
  EffectInstance& mutable_effect(const EffectId& id);
  /// Appends an effect without class checks beyond the slot's own invariants.
  EffectInstance& append_effect(const SlotId& slot, EffectInstance effect);
  EffectId allocate_effect_id();

  std::uint64_t next_id() const { return next_id_; }
  /// Replaces all tracks (file loading). The result is not validated here.
  void assemble(std::vector<Track> tracks, std::uint64_t next_id);

 private:
  Track& mutable_track(const TrackId& id);
  const Track& unlocked(const Track& track) const;
  void refresh_duration();
  std::uint64_t take_id();

  std::vector<Track> tracks_;
  int frame_rate_ = 30;
  Frame duration_ = 0;
  std::uint64_t next_id_ = 1;
};

/// Index of the slot in `slots` whose interval intersects [start, end], ignoring `skip`.
std::optional<std::size_t> find_overlap(const std::vector<Slot>& slots, Frame start, Frame end,
                                        const Slot* skip = nullptr);

}  // namespace reenact
