#pragma once

// Random valid projects for property tests.

#include <random>
#include <string>
#include <vector>

#include "reenact/error.hpp"
#include "reenact/project.hpp"

namespace reenact::test {

struct RandomSpec {
  int max_tracks = 5;
  int max_slots = 10;
  Frame horizon = 240;
  bool integer_values = false;  // keyframe values on a unit grid
  bool physics = true;
  bool attachments = true;
};

class ProjectGenerator {
 public:
  explicit ProjectGenerator(std::uint64_t seed, RandomSpec spec = {}) : rng_(seed), spec_(spec) {}

  Project make() {
    Project p;
    objects(p);
    const int tracks = range(1, spec_.max_tracks);
    std::vector<TrackId> ids;
    for (int i = 0; i < tracks; ++i) ids.push_back(p.timeline.create_track(fmt_name("T", i)).id);
    const int slots = range(1, spec_.max_slots);
    for (int i = 0; i < slots; ++i) {
      const TrackId& t = ids[static_cast<std::size_t>(range(0, tracks - 1))];
      const Frame start = range(0, static_cast<int>(spec_.horizon) - 10);
      const Frame end = start + range(0, 80);
      try {
        const SlotId s = p.timeline.create_slot(t, start, end).id;
        effects(p, s);
      } catch (const Error&) {
      }
    }
    for (const auto& t : ids) {
      if (chance(0.15)) p.timeline.set_track_flags(t, true, std::nullopt);
      if (chance(0.1)) p.timeline.set_track_flags(t, std::nullopt, true);
    }
    return p;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  static std::string fmt_name(const char* prefix, int i) { return prefix + std::to_string(i); }

  int range(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool chance(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }

  double real(double lo, double hi) {
    if (spec_.integer_values) return static_cast<double>(range(static_cast<int>(lo), static_cast<int>(hi)));
    return std::uniform_real_distribution<double>(lo, hi)(rng_);
  }

  Vec3 vec(double lo, double hi) { return {real(lo, hi), real(lo, hi), real(lo, hi)}; }

  Quat quat() {
    Quat q(real(-1, 1) + 1e-3, real(-1, 1), real(-1, 1), real(-1, 1));
    if (spec_.integer_values) {
      const int angle = range(0, 7) * 45;
      return rotation_from_heading(angle);
    }
    return q.normalized();
  }

  void objects(Project& p) {
    const int props = range(2, 4);
    for (int i = 0; i < props; ++i) {
      SceneObject o;
      o.id = fmt_name("prop", i);
      o.name = o.id;
      o.cls = ObjectClass::prop;
      o.initial.position = vec(-5, 5);
      o.initial.rotation = quat();
      if (chance(0.4)) {
        o.triggerable = true;
        o.states = {"idle", "fired", "broken"};
        o.initial_state = "idle";
      }
      p.scene.register_object(o);
      props_.push_back(o.id);
    }
    const int characters = range(1, 2);
    for (int i = 0; i < characters; ++i) {
      SceneObject o;
      o.id = fmt_name("char", i);
      o.name = o.id;
      o.cls = ObjectClass::character;
      o.initial.position = vec(-5, 5);
      p.scene.register_object(o);
      characters_.push_back(o.id);
    }
    if (spec_.attachments && chance(0.3))
      p.scene.attach_object(props_.back(), characters_.front(), "left_hand");
  }

  Frame in_slot(SlotWindow w) {
    // mostly inside, occasionally a trimmed-away sample
    if (chance(0.05)) return w.end + range(1, 5);
    return range(static_cast<int>(w.start), static_cast<int>(w.end));
  }

  template <typename Gen>
  void fill(EffectInstance& e, SlotWindow w, ChannelKey key, Encoding enc, Gen gen) {
    Channel& c = e.channels[key];
    c.encoding = enc;
    const int n = range(1, 5);
    for (int i = 0; i < n; ++i) upsert_sample(c, in_slot(w), gen());
  }

  void effects(Project& p, const SlotId& s) {
    const SlotWindow w = p.timeline.slot(s).window();
    const int n = range(1, 3);
    for (int i = 0; i < n; ++i) {
      const int kind = range(0, 9);
      try {
        if (kind <= 4)
          rigid(p, s, w);
        else if (kind <= 6)
          pose(p, s, w);
        else if (kind == 7)
          state(p, s, w);
        else if (kind == 8)
          p.timeline.attach_effect(s, EffectType::fire, pick_any(), {{"explosion_type", std::string("large")}},
                                   p.scene);
        else
          p.timeline.attach_effect(s, EffectType::floating_arrows, pick_any(), {{"destination", pick_any()}},
                                   p.scene);
      } catch (const Error&) {
      }
    }
  }

  std::string pick_any() {
    if (chance(0.3)) return characters_[static_cast<std::size_t>(range(0, static_cast<int>(characters_.size()) - 1))];
    return props_[static_cast<std::size_t>(range(0, static_cast<int>(props_.size()) - 1))];
  }

  Encoding encoding() { return chance(0.5) ? Encoding::delta : Encoding::absolute; }

  void rigid(Project& p, const SlotId& s, SlotWindow w) {
    const std::string target = pick_any();
    Params params;
    const bool physics = spec_.physics && chance(0.2);
    if (physics) params["physics"] = true;
    const EffectId id = p.timeline.attach_effect(s, EffectType::rigid_transform, target, params, p.scene).id;
    EffectInstance& e = p.timeline.mutable_effect(id);
    for (Attribute axis : {Attribute::position_x, Attribute::position_y, Attribute::position_z})
      if (chance(0.7)) fill(e, w, {axis, 0}, encoding(), [&] { return SampleValue(real(-5, 5)); });
    if (chance(0.5)) fill(e, w, {Attribute::rotation, 0}, Encoding::absolute, [&] { return SampleValue(quat()); });
    if (chance(0.3))
      fill(e, w, {Attribute::scale, 0}, encoding(), [&] { return SampleValue(Vec3(vec(1, 3))); });
    const bool is_prop = std::find(props_.begin(), props_.end(), target) != props_.end();
    if (spec_.attachments && is_prop && chance(0.3)) {
      Channel& c = e.channels[{Attribute::attachment, 0}];
      const Frame a = range(static_cast<int>(w.start), static_cast<int>(w.end));
      const std::string hand = chance(0.5) ? "left_hand" : "right_hand";
      const std::string who = characters_[static_cast<std::size_t>(range(0, static_cast<int>(characters_.size()) - 1))];
      upsert_sample(c, a, std::optional<AttachmentRef>(AttachmentRef{who, hand, {}}));
      if (a < w.end && chance(0.7))
        upsert_sample(c, range(static_cast<int>(a) + 1, static_cast<int>(w.end)), std::optional<AttachmentRef>{});
    }
  }

  void pose(Project& p, const SlotId& s, SlotWindow w) {
    const std::string target =
        characters_[static_cast<std::size_t>(range(0, static_cast<int>(characters_.size()) - 1))];
    const EffectId id = p.timeline.attach_effect(s, EffectType::pose_track, target, {}, p.scene).id;
    EffectInstance& e = p.timeline.mutable_effect(id);
    const int joints = range(1, 4);
    for (int j = 0; j < joints; ++j)
      fill(e, w, {Attribute::joint, range(0, static_cast<int>(kJointCount) - 1)}, encoding(),
           [&] { return SampleValue(Vec3(vec(-1, 1))); });
    if (chance(0.5)) fill(e, w, {Attribute::position_x, 0}, encoding(), [&] { return SampleValue(real(-5, 5)); });
  }

  void state(Project& p, const SlotId& s, SlotWindow w) {
    std::vector<std::string> triggerable;
    for (const auto& o : p.scene.objects())
      if (o.triggerable) triggerable.push_back(o.id);
    if (triggerable.empty()) return;
    const std::string target = triggerable[static_cast<std::size_t>(range(0, static_cast<int>(triggerable.size()) - 1))];
    const EffectId id = p.timeline.attach_effect(s, EffectType::interactive_state, target, {}, p.scene).id;
    EffectInstance& e = p.timeline.mutable_effect(id);
    static const std::vector<std::string> states = {"idle", "fired", "broken"};
    if (chance(0.8))
      fill(e, w, {Attribute::state, 0}, Encoding::absolute,
           [&] { return SampleValue(states[static_cast<std::size_t>(range(0, 2))]); });
  }

  std::mt19937_64 rng_;
  RandomSpec spec_;
  std::vector<std::string> props_;
  std::vector<std::string> characters_;
};

}  // namespace reenact::test
