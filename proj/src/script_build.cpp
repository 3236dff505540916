#include <algorithm>
#include <map>

#include <fmt/format.h>

#include "reenact/script.hpp"

namespace reenact::script {

namespace {

[[noreturn]] void semantic(const Error& e, Loc at, std::optional<Loc> related = std::nullopt) {
  throw ScriptError(ErrorCode::SemanticError, e.code(), at, related, e.what(), e.constraint());
}

[[noreturn]] void semantic(ErrorCode cause, Loc at, std::optional<Loc> related, const std::string& message,
                           std::string constraint = {}) {
  throw ScriptError(ErrorCode::SemanticError, cause, at, related, message, std::move(constraint));
}

template <typename F>
auto guarded(Loc at, F&& f, std::optional<Loc> related = std::nullopt) {
  try {
    return f();
  } catch (const ScriptError&) {
    throw;
  } catch (const Error& e) {
    semantic(e, at, related);
  }
}

Vec3 vec3(const std::vector<double>& v, std::size_t offset = 0) { return {v[offset], v[offset + 1], v[offset + 2]}; }

class Builder {
 public:
  Project run(const Script& script) {
    std::vector<const ObjectDecl*> objects;
    std::vector<const AttachDecl*> attaches;
    std::vector<const FloorplanBlock*> plans;
    std::vector<const MarkerDecl*> markers;
    std::vector<const TrackDecl*> tracks;
    std::optional<Loc> project_at;
    for (const auto& item : script.items) {
      if (const auto* p = std::get_if<ProjectBlock>(&item)) {
        if (project_at)
          semantic(ErrorCode::DuplicateId, p->loc, project_at, "project settings declared twice", constraint::kUniqueId);
        project_at = p->loc;
        settings(*p);
      } else if (const auto* s = std::get_if<SceneBlock>(&item)) {
        for (const auto& si : s->items) {
          if (const auto* o = std::get_if<ObjectDecl>(&si))
            objects.push_back(o);
          else if (const auto* a = std::get_if<AttachDecl>(&si))
            attaches.push_back(a);
          else
            plans.push_back(&std::get<FloorplanBlock>(si));
        }
      } else if (const auto* m = std::get_if<MarkerDecl>(&item)) {
        markers.push_back(m);
      } else {
        tracks.push_back(&std::get<TrackDecl>(item));
      }
    }
    for (const auto* o : objects) object(*o);
    for (const auto* a : attaches) attach(*a);
    for (const auto* f : plans) floorplan(*f);
    for (const auto* m : markers) marker(*m);
    for (const auto* t : tracks) track(*t);

    const auto violations = validate(project_);
    if (!violations.empty()) {
      const Violation& v = violations.front();
      semantic(v.code, {1, 1}, std::nullopt, v.message, v.constraint);
    }
    return std::move(project_);
  }

 private:
  void settings(const ProjectBlock& b) {
    std::map<std::string, Loc> seen;
    for (const auto& p : b.settings) {
      if (auto it = seen.find(p.key); it != seen.end())
        semantic(ErrorCode::InvalidArgument, p.loc, it->second, fmt::format("setting '{}' given twice", p.key));
      seen.emplace(p.key, p.loc);
      guarded(p.loc, [&] { project_.timeline.set_frame_rate(static_cast<int>(std::get<std::int64_t>(p.value))); });
    }
  }

  void object(const ObjectDecl& d) {
    SceneObject o;
    o.id = d.id;
    o.cls = *parse_object_class(d.cls);
    o.triggerable = d.triggerable;
    std::map<std::string, Loc> seen;
    for (const auto& p : d.props) {
      if (auto it = seen.find(p.key); it != seen.end())
        semantic(ErrorCode::InvalidDescriptor, p.loc, it->second,
                 fmt::format("property '{}' of '{}' given twice", p.key, d.id));
      seen.emplace(p.key, p.loc);
    }
    if (seen.contains("rotation") && seen.contains("heading"))
      semantic(ErrorCode::InvalidDescriptor, seen.at("heading"), seen.at("rotation"),
               fmt::format("'{}' sets both rotation and heading", d.id));
    for (const auto& p : d.props) {
      if (p.key == "name") {
        o.name = std::get<std::string>(p.value);
      } else if (p.key == "payload") {
        o.payload = std::get<std::string>(p.value);
      } else if (p.key == "position") {
        o.initial.position = vec3(std::get<Tuple>(p.value).values);
      } else if (p.key == "scale") {
        o.initial.scale = vec3(std::get<Tuple>(p.value).values);
      } else if (p.key == "rotation") {
        const auto& v = std::get<Tuple>(p.value).values;
        o.initial.rotation = Quat(v[0], v[1], v[2], v[3]);
      } else if (p.key == "heading") {
        o.initial.rotation = rotation_from_heading(std::get<double>(p.value));
      } else if (p.key == "states") {
        o.states = std::get<List>(p.value).items;
      } else if (p.key == "initial") {
        o.initial_state = std::get<std::string>(p.value);
      }
    }
    if (o.triggerable && o.initial_state.empty() && !o.states.empty()) o.initial_state = o.states.front();
    guarded(d.loc, [&] { project_.scene.register_object(std::move(o)); }, located(d.id));
    objects_.emplace(d.id, d.loc);
  }

  std::optional<Loc> located(const std::string& id) const {
    if (auto it = objects_.find(id); it != objects_.end()) return it->second;
    return std::nullopt;
  }

  void attach(const AttachDecl& a) {
    guarded(a.loc, [&] { project_.scene.attach_object(a.child, a.parent, a.anchor); });
  }

  void floorplan(const FloorplanBlock& f) {
    FloorPlan& plan = project_.scene.floor_plan();
    for (const auto& item : f.items) {
      if (const auto* w = std::get_if<WallDecl>(&item)) {
        const Wall wall{{w->a[0], w->a[1]}, {w->b[0], w->b[1]}};
        if (wall.a == wall.b) semantic(ErrorCode::InvalidDescriptor, w->loc, std::nullopt, "wall has zero length");
        plan.walls.push_back(wall);
      } else if (const auto* r = std::get_if<RegionDecl>(&item)) {
        if (auto it = regions_.find(r->name); it != regions_.end())
          semantic(ErrorCode::DuplicateId, r->loc, it->second, fmt::format("region '{}' declared twice", r->name),
                   constraint::kUniqueId);
        Region region{r->name, {}};
        for (const auto& p : r->points) region.polygon.emplace_back(p[0], p[1]);
        if (region.polygon.size() < 3 || !is_simple_polygon(region.polygon))
          semantic(ErrorCode::InvalidDescriptor, r->loc, std::nullopt,
                   fmt::format("region '{}' is not a simple polygon", r->name));
        regions_.emplace(r->name, r->loc);
        plan.regions.push_back(std::move(region));
      } else {
        const auto& s = std::get<SpawnDecl>(item);
        if (auto it = spawns_.find(s.name); it != spawns_.end())
          semantic(ErrorCode::DuplicateId, s.loc, it->second, fmt::format("spawn '{}' declared twice", s.name),
                   constraint::kUniqueId);
        spawns_.emplace(s.name, s.loc);
        plan.spawns.push_back({s.name, {s.at[0], s.at[1]}});
      }
    }
  }

  void marker(const MarkerDecl& m) {
    if (auto it = markers_.find(m.name); it != markers_.end())
      semantic(ErrorCode::DuplicateId, m.loc, it->second, fmt::format("marker '{}' declared twice", m.name),
               constraint::kUniqueId);
    if (m.start < 0 || m.end < m.start)
      semantic(ErrorCode::InvalidInterval, m.loc, std::nullopt,
               fmt::format("marker '{}' has invalid range [{}, {}]", m.name, m.start, m.end),
               constraint::kIntervalOrdered);
    markers_.emplace(m.name, m.loc);
    project_.markers.push_back({m.name, m.start, m.end});
  }

  void track(const TrackDecl& t) {
    const TrackId id = guarded(t.loc, [&] { return project_.timeline.create_track(t.name).id; });
    std::vector<std::pair<const SlotDecl*, SlotId>> made;
    for (const auto& s : t.slots) {
      std::optional<Loc> other;
      for (const auto& [decl, sid] : made)
        if (decl->start <= s.end && s.start <= decl->end) {
          other = decl->loc;
          break;
        }
      const SlotId sid = guarded(s.loc, [&] { return project_.timeline.create_slot(id, s.start, s.end).id; }, other);
      made.emplace_back(&s, sid);
      slot(s, sid);
    }
    if (t.muted || t.locked) project_.timeline.set_track_flags(id, t.muted, t.locked);
  }

  void slot(const SlotDecl& s, const SlotId& sid) {
    std::map<std::string, Loc> targets;
    for (const auto& e : s.effects) {
      std::optional<Loc> other;
      if (auto it = targets.find(e.target); it != targets.end()) other = it->second;
      effect(e, sid, other);
      targets.emplace(e.target, e.loc);
    }
  }

  struct Entry {
    Loc loc;
    bool delta = false;
  };
  using Seen = std::map<ChannelKey, std::map<Frame, Entry>>;

  void effect(const EffectDecl& d, const SlotId& sid, std::optional<Loc> duplicate) {
    const EffectType type = *parse_effect_type(d.type);
    Params params;
    std::map<std::string, Loc> seen_params;
    for (const auto& item : d.items) {
      const auto* p = std::get_if<Property>(&item);
      if (!p) continue;
      if (auto it = seen_params.find(p->key); it != seen_params.end())
        semantic(ErrorCode::InvalidParam, p->loc, it->second, fmt::format("parameter '{}' given twice", p->key),
                 constraint::kParamSchema);
      seen_params.emplace(p->key, p->loc);
      params[p->key] = param(*p);
    }
    const EffectId id = guarded(
        d.loc, [&] { return project_.timeline.attach_effect(sid, type, d.target, params, project_.scene).id; },
        duplicate);
    const SlotWindow window = project_.timeline.slot(sid).window();

    Seen seen;
    for (const auto& item : d.items) {
      if (std::holds_alternative<Property>(item)) continue;
      EffectInstance& e = project_.timeline.mutable_effect(id);
      if (const auto* k = std::get_if<KeyframeEntry>(&item)) {
        keyframe(e, window, *k, seen);
      } else if (const auto* ev = std::get_if<EventEntry>(&item)) {
        in_window(window, ev->frame, ev->loc);
        claim(seen, e, {Attribute::state, 0}, ev->frame, {ev->loc, false});
        guarded(ev->loc, [&] { record_state_event(e, project_.scene.at(e.target), ev->frame, ev->state); });
      } else if (const auto* a = std::get_if<AttachEntry>(&item)) {
        in_window(window, a->frame, a->loc);
        guarded(a->loc, [&] {
          const SceneObject& parent = project_.scene.at(a->parent);
          check_anchor(parent, a->anchor);
          if (a->parent == e.target)
            throw Error(ErrorCode::CycleRejected, fmt::format("'{}' cannot attach to itself", e.target),
                        constraint::kAcyclicAttachment);
        });
        const ChannelKey key{Attribute::attachment, 0};
        claim(seen, e, key, a->frame, {a->loc, false});
        upsert_sample(e.channels[key], a->frame, std::optional<AttachmentRef>(AttachmentRef{a->parent, a->anchor, {}}));
      } else {
        const auto& det = std::get<DetachEntry>(item);
        in_window(window, det.frame, det.loc);
        const ChannelKey key{Attribute::attachment, 0};
        claim(seen, e, key, det.frame, {det.loc, false});
        upsert_sample(e.channels[key], det.frame, std::optional<AttachmentRef>{});
      }
    }
  }

  static ParamValue param(const Property& p) {
    struct V {
      const Property& p;
      ParamValue operator()(bool b) const { return b; }
      ParamValue operator()(std::int64_t i) const { return i; }
      ParamValue operator()(double d) const { return d; }
      ParamValue operator()(const std::string& s) const { return s; }
      ParamValue operator()(const Ident& i) const { return i.name; }
      ParamValue operator()(const Tuple&) const { return fail(); }
      ParamValue operator()(const List&) const { return fail(); }
      ParamValue fail() const {
        semantic(ErrorCode::InvalidParam, p.loc, std::nullopt,
                 fmt::format("parameter '{}' takes a scalar value", p.key), constraint::kParamSchema);
      }
    };
    return std::visit(V{p}, p.value);
  }

  static void in_window(SlotWindow window, Frame frame, Loc at) {
    if (!window.contains(frame))
      semantic(ErrorCode::FrameOutOfSlot, at, std::nullopt,
               fmt::format("frame {} lies outside the slot [{}, {}]", frame, window.start, window.end));
  }

  // Registers one sample of `key` at `frame`, rejecting duplicates, mixed
  // encodings and attributes the effect type does not drive.
  void claim(Seen& seen, EffectInstance& e, const ChannelKey& key, Frame frame, Entry entry) {
    if (!writes_attribute(e.type, key.attribute))
      semantic(ErrorCode::InvalidChannel, entry.loc, std::nullopt,
               fmt::format("{} effects do not drive {}", to_string(e.type), to_string(key)),
               constraint::kChannelSchema);
    auto& frames = seen[key];
    if (!frames.empty() && frames.begin()->second.delta != entry.delta)
      semantic(ErrorCode::InvalidChannel, entry.loc, frames.begin()->second.loc,
               fmt::format("channel {} mixes keyframe and delta samples", to_string(key)), constraint::kChannelSchema);
    if (auto it = frames.find(frame); it != frames.end())
      semantic(ErrorCode::InvalidChannel, entry.loc, it->second.loc,
               fmt::format("channel {} has two samples at frame {}", to_string(key), frame),
               constraint::kChannelSchema);
    frames.emplace(frame, entry);
    Channel& channel = e.channels[key];
    channel.encoding = entry.delta ? Encoding::delta : Encoding::absolute;
  }

  void keyframe(EffectInstance& e, SlotWindow window, const KeyframeEntry& k, Seen& seen) {
    in_window(window, k.frame, k.loc);
    const Entry entry{k.loc, k.delta};
    auto put = [&](const ChannelKey& key, SampleValue value) {
      claim(seen, e, key, k.frame, entry);
      upsert_sample(e.channels[key], k.frame, std::move(value));
    };
    auto no_delta = [&](std::string_view what) {
      if (k.delta)
        semantic(ErrorCode::InvalidChannel, k.loc, std::nullopt, fmt::format("{} channels cannot be delta encoded", what),
                 constraint::kChannelSchema);
    };
    switch (k.channel) {
      case ChannelSpec::position:
        put({Attribute::position_x, 0}, k.values[0]);
        put({Attribute::position_y, 0}, k.values[1]);
        put({Attribute::position_z, 0}, k.values[2]);
        break;
      case ChannelSpec::position_x: put({Attribute::position_x, 0}, k.values[0]); break;
      case ChannelSpec::position_y: put({Attribute::position_y, 0}, k.values[0]); break;
      case ChannelSpec::position_z: put({Attribute::position_z, 0}, k.values[0]); break;
      case ChannelSpec::rotation: {
        no_delta("rotation");
        const Quat q(k.values[0], k.values[1], k.values[2], k.values[3]);
        if (std::abs(q.norm() - 1.0) > 1e-9)
          semantic(ErrorCode::InvalidChannel, k.loc, std::nullopt, "rotation keyframe is not a unit quaternion",
                   constraint::kChannelSchema);
        put({Attribute::rotation, 0}, q);
        break;
      }
      case ChannelSpec::heading:
        no_delta("rotation");
        put({Attribute::rotation, 0}, rotation_from_heading(k.values[0]));
        break;
      case ChannelSpec::scale: put({Attribute::scale, 0}, vec3(k.values)); break;
      case ChannelSpec::joint:
        put({Attribute::joint, static_cast<int>(*joint_index(k.joint))}, vec3(k.values));
        break;
      case ChannelSpec::pose:
        for (std::size_t j = 0; j < kJointCount; ++j)
          put({Attribute::joint, static_cast<int>(j)}, vec3(k.values, 3 * j));
        break;
    }
  }

  Project project_;
  std::map<std::string, Loc> objects_;
  std::map<std::string, Loc> regions_;
  std::map<std::string, Loc> spawns_;
  std::map<std::string, Loc> markers_;
};

}  // namespace

Project build(const Script& script) { return Builder().run(script); }

}  // namespace reenact::script

namespace reenact {

Project parse_scenario(std::string_view text) { return script::build(script::parse(text)); }

}  // namespace reenact
