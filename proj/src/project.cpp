#include "reenact/project.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <map>
#include <set>

#include <fmt/format.h>

namespace reenact {

const Marker* Project::find_marker(const std::string& name) const {
  for (const auto& m : markers)
    if (m.name == name) return &m;
  return nullptr;
}

namespace {

class Checker {
 public:
  explicit Checker(const Project& p) : p_(p) {}

  std::vector<Violation> run() {
    if (p_.timeline.frame_rate() <= 0)
      add(ErrorCode::InvalidArgument, "frame-rate-positive", fmt::format("frame rate {}", p_.timeline.frame_rate()));
    objects();
    floor_plan();
    timeline();
    cycles();
    markers();
    return std::move(out_);
  }

 private:
  void add(ErrorCode code, std::string constraint, std::string message) {
    out_.push_back({code, std::move(constraint), std::move(message)});
  }

  void add(const Error& e) { out_.push_back({e.code(), e.constraint(), e.what()}); }

  void objects() {
    std::set<std::string> seen;
    for (const auto& o : p_.scene.objects()) {
      try {
        check_descriptor(o);
      } catch (const Error& e) {
        add(e);
      }
      if (!seen.insert(o.id).second)
        add(ErrorCode::DuplicateId, constraint::kUniqueId, fmt::format("object id '{}' repeated", o.id));
      if (o.attachment) {
        edges_.emplace_back(o.id, o.attachment->parent);
        attachment_ref(o.id, *o.attachment, "scene");
      }
    }
  }

  void attachment_ref(const std::string& child, const AttachmentRef& ref, std::string_view where) {
    const SceneObject* parent = p_.scene.find(ref.parent);
    if (!parent) {
      add(ErrorCode::UnknownTarget, constraint::kTargetExists,
          fmt::format("{}: '{}' attaches to missing object '{}'", where, child, ref.parent));
      return;
    }
    try {
      check_anchor(*parent, ref.anchor);
    } catch (const Error& e) {
      add(e.code(), "anchor-declared", fmt::format("{}: {}", where, e.what()));
    }
    if (std::abs(ref.offset.rotation.norm() - 1.0) > 1e-9 || (ref.offset.scale.array() <= 0.0).any())
      add(ErrorCode::InvalidDescriptor, "transform-valid", fmt::format("{}: attachment offset of '{}'", where, child));
  }

  void floor_plan() {
    const auto& plan = p_.scene.floor_plan();
    for (std::size_t i = 0; i < plan.walls.size(); ++i)
      if ((plan.walls[i].b - plan.walls[i].a).squaredNorm() == 0.0 || !plan.walls[i].a.allFinite() ||
          !plan.walls[i].b.allFinite())
        add(ErrorCode::InvalidDescriptor, "wall-nonzero", fmt::format("wall {} has zero length", i));
    for (const auto& r : plan.regions)
      if (r.polygon.size() < 3 || !is_simple_polygon(r.polygon))
        add(ErrorCode::InvalidDescriptor, "region-simple", fmt::format("region '{}' is not a simple polygon", r.name));
  }

  void note_id(const std::string& id) {
    if (!ids_.insert(id).second)
      add(ErrorCode::DuplicateId, constraint::kUniqueId, fmt::format("timeline id '{}' repeated", id));
    const auto dash = id.rfind('-');
    if (dash == std::string::npos) return;
    std::uint64_t n = 0;
    const char* first = id.data() + dash + 1;
    const char* last = id.data() + id.size();
    auto [ptr, ec] = std::from_chars(first, last, n);
    if (ec == std::errc{} && ptr == last && first != last && n >= p_.timeline.next_id())
      add(ErrorCode::InvalidArgument, "id-counter",
          fmt::format("id '{}' is not below next_id {}", id, p_.timeline.next_id()));
  }

  void timeline() {
    for (const auto& track : p_.timeline.tracks()) {
      note_id(track.id.value);
      const Slot* previous = nullptr;
      for (const auto& slot : track.slots) {
        note_id(slot.id.value);
        if (slot.start < 0 || slot.start > slot.end)
          add(ErrorCode::InvalidInterval, constraint::kIntervalOrdered,
              fmt::format("slot {} has interval [{},{}]", slot.id.value, slot.start, slot.end));
        if (previous) {
          if (slot.start < previous->start)
            add(ErrorCode::InvalidInterval, "slots-sorted",
                fmt::format("slot {} starts before {} in track {}", slot.id.value, previous->id.value, track.id.value));
          if (slot.start <= previous->end && previous->start <= slot.end)
            add(ErrorCode::OverlapRejected, constraint::kSlotsDisjoint,
                fmt::format("slot {} [{},{}] overlaps slot {} [{},{}] in track {}", slot.id.value, slot.start,
                            slot.end, previous->id.value, previous->start, previous->end, track.id.value));
        }
        previous = &slot;
        effects(slot);
      }
    }
  }

  void effects(const Slot& slot) {
    std::set<std::pair<EffectType, std::string>> pairs;
    for (const auto& e : slot.effects) {
      note_id(e.id.value);
      const SceneObject* target = p_.scene.find(e.target);
      if (!target) {
        add(ErrorCode::UnknownTarget, constraint::kTargetExists,
            fmt::format("effect {} targets missing object '{}'", e.id.value, e.target));
      } else {
        try {
          check_target(e.type, *target);
        } catch (const Error& err) {
          add(err);
        }
      }
      if (!pairs.insert({e.type, e.target}).second)
        add(ErrorCode::DuplicateEffectTarget, constraint::kUniqueEffectTarget,
            fmt::format("slot {} has two {} effects on '{}'", slot.id.value, to_string(e.type), e.target));
      try {
        if (normalized_params(e.type, e.params) != e.params)
          add(ErrorCode::InvalidParam, constraint::kParamSchema,
              fmt::format("effect {} parameters are not in canonical form", e.id.value));
        if (e.type == EffectType::floating_arrows && !p_.scene.find(param_string(e.params, "destination")))
          add(ErrorCode::UnknownTarget, constraint::kTargetExists,
              fmt::format("effect {} points at missing object '{}'", e.id.value,
                          param_string(e.params, "destination")));
      } catch (const Error& err) {
        add(err);
      }
      if (e.captured_initial.state && target && !target->has_state(*e.captured_initial.state))
        add(ErrorCode::InvalidState, constraint::kDeclaredState,
            fmt::format("effect {} captured undeclared state '{}'", e.id.value, *e.captured_initial.state));
      for (const auto& [key, channel] : e.channels) channel_data(e, target, key, channel);
    }
  }

  void channel_data(const EffectInstance& e, const SceneObject* target, const ChannelKey& key,
                    const Channel& channel) {
    const std::string where = fmt::format("effect {} channel {}", e.id.value, to_string(key));
    if (!writes_attribute(e.type, key.attribute) || key.attribute == Attribute::fire ||
        key.attribute == Attribute::arrow || (key.attribute == Attribute::joint && (key.joint < 0 ||
                                                                                     key.joint >= static_cast<int>(kJointCount)))) {
      add(ErrorCode::InvalidChannel, constraint::kChannelSchema, fmt::format("{} is not written by {}", where,
                                                                            to_string(e.type)));
      return;
    }
    const ValueKind kind = value_kind(key.attribute);
    if (channel.encoding == Encoding::delta && kind != ValueKind::scalar && kind != ValueKind::vec3)
      add(ErrorCode::InvalidChannel, constraint::kChannelSchema, fmt::format("{} cannot be delta encoded", where));
    for (std::size_t i = 0; i < channel.samples.size(); ++i) {
      const Sample& s = channel.samples[i];
      if (i > 0 && s.frame <= channel.samples[i - 1].frame) {
        add(ErrorCode::InvalidChannel, constraint::kChannelSchema,
            fmt::format("{} sample frames not strictly increasing at {}", where, s.frame));
        return;
      }
      bool ok = true;
      switch (kind) {
        case ValueKind::scalar:
          ok = std::holds_alternative<double>(s.value) && std::isfinite(std::get<double>(s.value));
          break;
        case ValueKind::vec3: ok = std::holds_alternative<Vec3>(s.value) && std::get<Vec3>(s.value).allFinite(); break;
        case ValueKind::quat:
          ok = std::holds_alternative<Quat>(s.value) && std::abs(std::get<Quat>(s.value).norm() - 1.0) <= 1e-9;
          break;
        case ValueKind::state:
          ok = std::holds_alternative<std::string>(s.value);
          if (ok && target && !target->has_state(std::get<std::string>(s.value)))
            add(ErrorCode::InvalidState, constraint::kDeclaredState,
                fmt::format("{} uses undeclared state '{}'", where, std::get<std::string>(s.value)));
          break;
        case ValueKind::attachment:
          ok = std::holds_alternative<std::optional<AttachmentRef>>(s.value);
          if (ok) {
            if (const auto& ref = std::get<std::optional<AttachmentRef>>(s.value)) {
              edges_.emplace_back(e.target, ref->parent);
              attachment_ref(e.target, *ref, where);
            }
          }
          break;
      }
      if (!ok) {
        add(ErrorCode::InvalidChannel, constraint::kChannelSchema,
            fmt::format("{} has an invalid value at frame {}", where, s.frame));
        return;
      }
    }
  }

  void cycles() {
    std::map<std::string, std::set<std::string>> graph;
    for (const auto& [child, parent] : edges_) graph[child].insert(parent);
    std::map<std::string, int> color;  // 0 new, 1 on stack, 2 done
    std::function<bool(const std::string&)> visit = [&](const std::string& node) {
      color[node] = 1;
      for (const auto& next : graph[node]) {
        if (color[next] == 1) return true;
        if (color[next] == 0 && visit(next)) return true;
      }
      color[node] = 2;
      return false;
    };
    for (const auto& [node, parents] : graph) {
      if (color[node] == 0 && visit(node)) {
        add(ErrorCode::CycleRejected, constraint::kAcyclicAttachment,
            fmt::format("attachments through '{}' form a cycle", node));
        return;
      }
    }
  }

  void markers() {
    std::set<std::string> names;
    for (const auto& m : p_.markers) {
      if (m.start < 0 || m.start > m.end)
        add(ErrorCode::InvalidInterval, constraint::kIntervalOrdered,
            fmt::format("marker '{}' has interval [{},{}]", m.name, m.start, m.end));
      if (!names.insert(m.name).second)
        add(ErrorCode::DuplicateId, constraint::kUniqueId, fmt::format("marker '{}' repeated", m.name));
    }
  }

  const Project& p_;
  std::vector<Violation> out_;
  std::set<std::string> ids_;
  std::vector<std::pair<std::string, std::string>> edges_;
};

}  // namespace

std::vector<Violation> validate(const Project& project) { return Checker(project).run(); }

std::string format_violation(const Violation& v) {
  return fmt::format("{} [{}]: {}", to_string(v.code), v.constraint, v.message);
}

void require_valid(const Project& project) {
  const auto violations = validate(project);
  if (violations.empty()) return;
  const Violation& first = violations.front();
  throw Error(ErrorCode::ValidationFailed, format_violation(first), first.constraint);
}

}  // namespace reenact
