#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <optional>
#include <span>
#include <utility>

namespace reenact {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

/// Frame index. Frames are the engine's only time unit.
using Frame = std::int64_t;

inline constexpr double kGravity = 9.81;

/// Position/rotation/scale. World space is y-up; the ground plane is (x, z).
struct Transform {
  Vec3 position = Vec3::Zero();
  Quat rotation = Quat::Identity();
  Vec3 scale = Vec3::Ones();

  /// Maps a point from this transform's local space into its parent space.
  Vec3 apply(const Vec3& local_point) const {
    return position + rotation * scale.cwiseProduct(local_point);
  }

  /// parent ∘ child (TRS composition, no shear).
  Transform compose(const Transform& child) const {
    Transform out;
    out.position = apply(child.position);
    out.rotation = rotation * child.rotation;
    out.scale = scale.cwiseProduct(child.scale);
    return out;
  }
};

bool bit_equal(double a, double b);
bool bit_equal(const Vec3& a, const Vec3& b);
bool bit_equal(const Quat& a, const Quat& b);
bool bit_equal(const Transform& a, const Transform& b);

/// Projects a world position onto the ground plane.
inline Vec2 ground(const Vec3& p) { return {p.x(), p.z()}; }

/// cos/sin of an angle in degrees; exact at multiples of 45°.
std::pair<double, double> cos_sin_deg(double degrees);

/// Wraps degrees into [0, 360).
double wrap_degrees(double degrees);

/// Signed smallest difference a − b in (−180, 180].
double angle_difference_deg(double a, double b);

/// Ground-plane heading (degrees in [0,360)) of a rotation's local +x axis.
double heading_deg(const Quat& rotation);

/// Rotation about world +y that turns local +x to the given ground heading.
Quat rotation_from_heading(double degrees);

struct Segment2 {
  Vec2 a;
  Vec2 b;
};

/// Parameter t ∈ [0,1] along p of the first contact between closed segments
/// p and q, or nullopt when they are disjoint.
std::optional<double> segment_intersection(const Segment2& p, const Segment2& q);

/// Euclidean distance from point to closed segment.
double point_segment_distance(const Vec2& point, const Segment2& s);

/// True when polygon (implicitly closed) has no two non-adjacent edges touching.
bool is_simple_polygon(std::span<const Vec2> polygon);

}  // namespace reenact
