#include "reenact/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "reenact/error.hpp"

namespace reenact {

namespace {

constexpr std::array<std::string_view, kJointCount> kJointNames = {
    "head",          "neck",           "spine",       "pelvis",          "left_shoulder", "left_elbow",
    "left_wrist",    "right_shoulder", "right_elbow", "right_wrist",     "left_hip",      "left_knee",
    "left_ankle",    "right_hip",      "right_knee",  "right_ankle",
};

constexpr std::array<std::pair<ObjectClass, std::string_view>, 7> kClassNames = {{
    {ObjectClass::character, "character"},
    {ObjectClass::prop, "prop"},
    {ObjectClass::marker, "marker"},
    {ObjectClass::note, "note"},
    {ObjectClass::photo, "photo"},
    {ObjectClass::camera_preset, "camera_preset"},
    {ObjectClass::environment, "environment"},
}};

}  // namespace

std::string_view to_string(ObjectClass cls) {
  for (const auto& [c, name] : kClassNames)
    if (c == cls) return name;
  return "prop";
}

std::optional<ObjectClass> parse_object_class(std::string_view text) {
  for (const auto& [c, name] : kClassNames)
    if (name == text) return c;
  return std::nullopt;
}

std::string_view joint_name(std::size_t index) { return kJointNames.at(index); }

std::optional<std::size_t> joint_index(std::string_view name) {
  for (std::size_t i = 0; i < kJointCount; ++i)
    if (kJointNames[i] == name) return i;
  return std::nullopt;
}

const PoseFrame& rest_pose() {
  static const PoseFrame pose = {
      Vec3(0.0, 1.65, 0.0),  Vec3(0.0, 1.50, 0.0),  Vec3(0.0, 1.20, 0.0),  Vec3(0.0, 0.95, 0.0),
      Vec3(0.0, 1.45, -0.20), Vec3(0.0, 1.18, -0.25), Vec3(0.0, 0.92, -0.27), Vec3(0.0, 1.45, 0.20),
      Vec3(0.0, 1.18, 0.25), Vec3(0.0, 0.92, 0.27),  Vec3(0.0, 0.92, -0.10), Vec3(0.0, 0.50, -0.10),
      Vec3(0.0, 0.08, -0.10), Vec3(0.0, 0.92, 0.10),  Vec3(0.0, 0.50, 0.10),  Vec3(0.0, 0.08, 0.10),
  };
  return pose;
}

bool bit_equal(const PoseFrame& a, const PoseFrame& b) {
  for (std::size_t i = 0; i < kJointCount; ++i)
    if (!bit_equal(a[i], b[i])) return false;
  return true;
}

bool SceneObject::has_state(std::string_view state) const {
  return std::find(states.begin(), states.end(), state) != states.end();
}

std::vector<std::string> anchors_of(const SceneObject& object) {
  if (object.cls == ObjectClass::character) return {"root", "left_hand", "right_hand"};
  return {"root"};
}

void check_descriptor(const SceneObject& object) {
  if (object.id.empty()) throw Error(ErrorCode::InvalidDescriptor, "object id must not be empty");
  if (object.triggerable) {
    if (object.states.empty())
      throw Error(ErrorCode::InvalidDescriptor,
                  fmt::format("triggerable object '{}' declares no states", object.id));
    if (!object.has_state(object.initial_state))
      throw Error(ErrorCode::InvalidState,
                  fmt::format("initial state '{}' of '{}' is not declared", object.initial_state, object.id),
                  constraint::kDeclaredState);
  } else if (!object.states.empty() || !object.initial_state.empty()) {
    throw Error(ErrorCode::InvalidDescriptor,
                fmt::format("non-triggerable object '{}' cannot carry states", object.id));
  }
  if (std::abs(object.initial.rotation.norm() - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidDescriptor, fmt::format("rotation of '{}' is not unit", object.id));
  if ((object.initial.scale.array() <= 0.0).any())
    throw Error(ErrorCode::InvalidDescriptor, fmt::format("scale of '{}' must be positive", object.id));
  if (!object.initial.position.allFinite())
    throw Error(ErrorCode::InvalidDescriptor, fmt::format("position of '{}' is not finite", object.id));
  if (object.initial_pose) {
    if (object.cls != ObjectClass::character)
      throw Error(ErrorCode::InvalidDescriptor, fmt::format("only characters carry a pose ('{}')", object.id));
    for (const auto& joint : *object.initial_pose)
      if (!joint.allFinite())
        throw Error(ErrorCode::InvalidDescriptor, fmt::format("pose of '{}' is not finite", object.id));
  }
}

void check_anchor(const SceneObject& parent, const std::string& anchor) {
  const auto anchors = anchors_of(parent);
  if (std::find(anchors.begin(), anchors.end(), anchor) == anchors.end())
    throw Error(ErrorCode::UnknownAnchor, fmt::format("'{}' has no anchor '{}'", parent.id, anchor));
}

const SceneObject& Scene::register_object(SceneObject object) {
  check_descriptor(object);
  if (index_.contains(object.id))
    throw Error(ErrorCode::DuplicateId, fmt::format("object '{}' already registered", object.id),
                constraint::kUniqueId);
  if (object.attachment) {
    const SceneObject& parent = at(object.attachment->parent);
    check_anchor(parent, object.attachment->anchor);
  }
  objects_.push_back(std::move(object));
  index_[objects_.back().id] = objects_.size() - 1;
  return objects_.back();
}

void Scene::remove_object(const std::string& id) {
  if (!index_of(id)) throw Error(ErrorCode::UnknownTarget, fmt::format("unknown object '{}'", id));
  objects_.erase(objects_.begin() + static_cast<std::ptrdiff_t>(*index_of(id)));
  for (auto& o : objects_)
    if (o.attachment && o.attachment->parent == id) o.attachment.reset();
  reindex();
}

void Scene::attach_object(const std::string& child, const std::string& parent, const std::string& anchor,
                          const Transform& offset) {
  const SceneObject& p = at(parent);
  at(child);
  check_anchor(p, anchor);
  for (const SceneObject* walk = &p;;) {
    if (walk->id == child)
      throw Error(ErrorCode::CycleRejected,
                  fmt::format("attaching '{}' to '{}' would form a cycle", child, parent),
                  constraint::kAcyclicAttachment);
    if (!walk->attachment) break;
    walk = &at(walk->attachment->parent);
  }
  objects_[*index_of(child)].attachment = AttachmentRef{parent, anchor, offset};
}

void Scene::detach_object(const std::string& child) {
  at(child);
  objects_[*index_of(child)].attachment.reset();
}

const SceneObject* Scene::find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &objects_[it->second];
}

const SceneObject& Scene::at(const std::string& id) const {
  if (const auto* o = find(id)) return *o;
  throw Error(ErrorCode::UnknownTarget, fmt::format("unknown object '{}'", id), constraint::kTargetExists);
}

std::optional<std::size_t> Scene::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Scene::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < objects_.size(); ++i) index_[objects_[i].id] = i;
}

const ObjectState* SceneState::find(const std::string& id) const {
  for (const auto& o : objects)
    if (o.id == id) return &o;
  return nullptr;
}

const ObjectState& SceneState::at(const std::string& id) const {
  if (const auto* o = find(id)) return *o;
  throw Error(ErrorCode::UnknownTarget, fmt::format("unknown object '{}'", id));
}

bool bit_equal(const ObjectState& a, const ObjectState& b) {
  if (a.id != b.id || !bit_equal(a.local, b.local) || !bit_equal(a.world, b.world)) return false;
  if (a.state != b.state || a.attachment != b.attachment || a.fire != b.fire) return false;
  if (a.pose.has_value() != b.pose.has_value()) return false;
  if (a.pose && !bit_equal(*a.pose, *b.pose)) return false;
  if (a.arrows.size() != b.arrows.size()) return false;
  for (std::size_t i = 0; i < a.arrows.size(); ++i) {
    const auto& x = a.arrows[i];
    const auto& y = b.arrows[i];
    if (x.source != y.source || x.destination != y.destination || !bit_equal(x.from, y.from) ||
        !bit_equal(x.to, y.to) || !bit_equal(x.phase, y.phase))
      return false;
  }
  return true;
}

bool bit_equal(const SceneState& a, const SceneState& b) {
  if (a.frame != b.frame || a.objects.size() != b.objects.size()) return false;
  for (std::size_t i = 0; i < a.objects.size(); ++i)
    if (!bit_equal(a.objects[i], b.objects[i])) return false;
  return true;
}

Transform anchor_transform(const ObjectState& object, std::string_view anchor) {
  if (anchor == "root") return object.world;
  const PoseFrame& pose = object.pose ? *object.pose : rest_pose();
  const auto joint = anchor == "left_hand" ? Joint::left_wrist : Joint::right_wrist;
  Transform t;
  t.position = object.world.apply(pose[static_cast<std::size_t>(joint)]);
  t.rotation = object.world.rotation;
  return t;
}

Visibility visible_from(const SceneState& state, const FloorPlan& plan, const ObserverPose& observer,
                        double fov_deg, const std::string& target_id) {
  if (!(fov_deg > 0.0 && fov_deg <= 360.0))
    throw Error(ErrorCode::InvalidArgument, fmt::format("field of view {} outside (0, 360]", fov_deg));
  const Vec2 target = ground(state.at(target_id).world.position);
  Visibility out;
  const Vec2 d = target - observer.position;
  if (fov_deg >= 360.0 || d.squaredNorm() == 0.0) {
    out.in_view = true;
  } else {
    const double bearing = std::atan2(d.y(), d.x()) * 180.0 / std::numbers::pi;
    out.in_view = std::abs(angle_difference_deg(bearing, observer.heading_deg)) <= fov_deg / 2.0;
  }
  const Segment2 sight{observer.position, target};
  std::optional<double> nearest;
  for (const auto& wall : plan.walls) {
    if (auto t = segment_intersection(sight, wall.segment()); t && (!nearest || *t < *nearest)) {
      nearest = t;
      out.blocking = wall;
    }
  }
  out.visible = out.in_view && !out.blocking;
  return out;
}

Approach closest_approach(const TimedPath& a, const TimedPath& b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyPath, "closest approach needs two non-empty paths");
  if (a.size() != b.size()) throw Error(ErrorCode::GridMismatch, "paths sampled on different frame grids");
  Approach best{std::numeric_limits<double>::infinity(), 0};
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].frame != b[i].frame)
      throw Error(ErrorCode::GridMismatch, fmt::format("frame {} vs {} at index {}", a[i].frame, b[i].frame, i));
    const double d = (a[i].position - b[i].position).norm();
    if (d < best.distance) best = {d, a[i].frame};
  }
  return best;
}

TimedPath path_of(const std::vector<SceneState>& states, const std::string& id) {
  TimedPath path;
  path.reserve(states.size());
  for (const auto& s : states) path.push_back({s.frame, ground(s.at(id).world.position)});
  return path;
}

}  // namespace reenact
