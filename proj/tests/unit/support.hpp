#pragma once

#include <string>
#include <vector>

#include "reenact/playback.hpp"
#include "reenact/project.hpp"

namespace reenact::test {

inline SceneObject prop(const std::string& id, Vec3 position = Vec3::Zero()) {
  SceneObject o;
  o.id = id;
  o.name = id;
  o.cls = ObjectClass::prop;
  o.initial.position = position;
  return o;
}

inline SceneObject character(const std::string& id, Vec3 position = Vec3::Zero()) {
  SceneObject o = prop(id, position);
  o.cls = ObjectClass::character;
  return o;
}

inline SceneObject switchable(const std::string& id, std::vector<std::string> states) {
  SceneObject o = prop(id);
  o.triggerable = true;
  o.initial_state = states.front();
  o.states = std::move(states);
  return o;
}

inline void key(Project& p, const EffectId& id, Attribute attribute, Frame frame, SampleValue value,
                Encoding encoding = Encoding::absolute) {
  Channel& c = p.timeline.mutable_effect(id).channels[ChannelKey{attribute, 0}];
  c.encoding = encoding;
  upsert_sample(c, frame, std::move(value));
}

// Track + slot + effect in one call.
inline EffectId rigid(Project& p, const TrackId& track, Frame start, Frame end, const std::string& target,
                      Params params = {}) {
  const SlotId slot = p.timeline.create_slot(track, start, end).id;
  return p.timeline.attach_effect(slot, EffectType::rigid_transform, target, params, p.scene).id;
}

struct SignalLog {
  std::vector<std::pair<std::string, EffectSignal>> entries;
  SignalSink sink() {
    return [this](const EffectId& id, const EffectSignal& s) { entries.emplace_back(id.value, s); };
  }
  std::vector<EffectSignal> of(const EffectId& id, bool include_scan = true) const {
    std::vector<EffectSignal> out;
    for (const auto& [who, s] : entries)
      if (who == id.value && (include_scan || !s.scan)) out.push_back(s);
    return out;
  }
};

}  // namespace reenact::test
