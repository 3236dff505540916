#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "reenact/geometry.hpp"

namespace reenact {

enum class ObjectClass { character, prop, marker, note, photo, camera_preset, environment };

std::string_view to_string(ObjectClass cls);
std::optional<ObjectClass> parse_object_class(std::string_view text);

inline constexpr std::size_t kJointCount = 16;

enum class Joint : std::size_t {
  head,
  neck,
  spine,
  pelvis,
  left_shoulder,
  left_elbow,
  left_wrist,
  right_shoulder,
  right_elbow,
  right_wrist,
  left_hip,
  left_knee,
  left_ankle,
  right_hip,
  right_knee,
  right_ankle,
};

std::string_view joint_name(std::size_t index);
std::optional<std::size_t> joint_index(std::string_view name);

/// Object-local joint positions in metres, in `Joint` order.
using PoseFrame = std::array<Vec3, kJointCount>;

/// Standing rest pose, facing local +x, right side on local +z.
const PoseFrame& rest_pose();

bool bit_equal(const PoseFrame& a, const PoseFrame& b);

struct AttachmentRef {
  std::string parent;
  std::string anchor;
  Transform offset;  // child pose relative to the anchor

  bool operator==(const AttachmentRef& other) const {
    return parent == other.parent && anchor == other.anchor && bit_equal(offset, other.offset);
  }
};

struct SceneObject {
  std::string id;
  std::string name;
  ObjectClass cls = ObjectClass::prop;
  bool triggerable = false;
  std::vector<std::string> states;  // declared state set, triggerable only
  std::string initial_state;
  Transform initial;
  std::optional<PoseFrame> initial_pose;  // characters; rest pose when unset
  std::optional<AttachmentRef> attachment;
  std::string payload;  // notes, photos, measurements

  bool has_state(std::string_view state) const;
};

/// Anchors an object exposes to attachments. Every object has "root";
/// characters add "left_hand" and "right_hand".
std::vector<std::string> anchors_of(const SceneObject& object);

struct Wall {
  Vec2 a;
  Vec2 b;
  Segment2 segment() const { return {a, b}; }
};

struct Region {
  std::string name;
  std::vector<Vec2> polygon;
};

struct SpawnPoint {
  std::string name;
  Vec2 position;
};

struct FloorPlan {
  std::vector<Wall> walls;
  std::vector<Region> regions;
  std::vector<SpawnPoint> spawns;
};

/// Registry of controllable objects plus the occluder floor plan.
class Scene {
 public:
  const SceneObject& register_object(SceneObject object);
  /// Removes an object; effects that still reference it fail at resolution.
  void remove_object(const std::string& id);

  void attach_object(const std::string& child, const std::string& parent, const std::string& anchor,
                     const Transform& offset = {});
  void detach_object(const std::string& child);

  const SceneObject* find(const std::string& id) const;
  const SceneObject& at(const std::string& id) const;  // throws UnknownTarget
  std::optional<std::size_t> index_of(const std::string& id) const;

  const std::vector<SceneObject>& objects() const { return objects_; }
  const FloorPlan& floor_plan() const { return floor_plan_; }
  FloorPlan& floor_plan() { return floor_plan_; }

 private:
  void reindex();

  std::vector<SceneObject> objects_;
  std::unordered_map<std::string, std::size_t> index_;
  FloorPlan floor_plan_;
};

/// Throws InvalidDescriptor when the object's own invariants fail.
void check_descriptor(const SceneObject& object);

/// Throws UnknownAnchor when `anchor` is not exposed by `parent`.
void check_anchor(const SceneObject& parent, const std::string& anchor);

struct FireDecoration {
  bool burning = true;
  std::string explosion_type;
  std::string firewall_type;
  bool operator==(const FireDecoration&) const = default;
};

struct ArrowDecoration {
  std::string source;
  std::string destination;
  Vec3 from = Vec3::Zero();
  Vec3 to = Vec3::Zero();
  double phase = 0.0;  // [0, 1)
};

/// Resolved attributes of one object at one frame.
struct ObjectState {
  std::string id;
  Transform local;  // the object's own transform channels
  Transform world;
  std::optional<std::string> state;
  std::optional<PoseFrame> pose;
  std::optional<AttachmentRef> attachment;
  std::optional<FireDecoration> fire;
  std::vector<ArrowDecoration> arrows;
};

struct SceneState {
  Frame frame = 0;
  std::vector<ObjectState> objects;  // registration order

  const ObjectState& at(const std::string& id) const;  // throws UnknownTarget
  const ObjectState* find(const std::string& id) const;
};

bool bit_equal(const ObjectState& a, const ObjectState& b);
bool bit_equal(const SceneState& a, const SceneState& b);

/// World-space anchor transform of `object` in `state` (pose joints for hands).
Transform anchor_transform(const ObjectState& object, std::string_view anchor);

struct ObserverPose {
  Vec2 position = Vec2::Zero();
  double heading_deg = 0.0;
};

inline constexpr double kDefaultFovDeg = 100.0;

struct Visibility {
  bool visible = false;
  bool in_view = false;                // inside the horizontal view cone
  std::optional<Wall> blocking;        // first wall crossed by the sight line
};

/// 2D line-of-sight query: visible iff the target's root lies within the view
/// cone and the observer→target segment crosses no wall.
Visibility visible_from(const SceneState& state, const FloorPlan& plan, const ObserverPose& observer,
                        double fov_deg, const std::string& target_id);

struct TimedPoint {
  Frame frame = 0;
  Vec2 position = Vec2::Zero();
};
using TimedPath = std::vector<TimedPoint>;

struct Approach {
  double distance = 0.0;
  Frame frame = 0;
};

/// Minimum synchronous distance between two paths on the same frame grid.
Approach closest_approach(const TimedPath& a, const TimedPath& b);

/// Ground-plane path of an object through a state sequence.
TimedPath path_of(const std::vector<SceneState>& states, const std::string& id);

}  // namespace reenact
