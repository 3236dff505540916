#include "reenact/geometry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

namespace reenact {

bool bit_equal(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

bool bit_equal(const Vec3& a, const Vec3& b) {
  return bit_equal(a.x(), b.x()) && bit_equal(a.y(), b.y()) && bit_equal(a.z(), b.z());
}

bool bit_equal(const Quat& a, const Quat& b) {
  return bit_equal(a.w(), b.w()) && bit_equal(a.x(), b.x()) && bit_equal(a.y(), b.y()) &&
         bit_equal(a.z(), b.z());
}

bool bit_equal(const Transform& a, const Transform& b) {
  return bit_equal(a.position, b.position) && bit_equal(a.rotation, b.rotation) &&
         bit_equal(a.scale, b.scale);
}

std::pair<double, double> cos_sin_deg(double degrees) {
  // Reduce to r ∈ [−45, 45] plus a quarter-turn count so lattice angles are exact.
  const double quarters = std::round(degrees / 90.0);
  const double r = degrees - 90.0 * quarters;
  double c = 0.0;
  double s = 0.0;
  if (r == 45.0 || r == -45.0) {
    c = std::numbers::sqrt2 / 2.0;
    s = r > 0 ? c : -c;
  } else {
    const double rad = r * std::numbers::pi / 180.0;
    c = std::cos(rad);
    s = std::sin(rad);
  }
  long q = static_cast<long>(std::fmod(quarters, 4.0));
  if (q < 0) q += 4;
  switch (q) {
    case 1: return {-s, c};
    case 2: return {-c, -s};
    case 3: return {s, -c};
    default: return {c, s};
  }
}

double wrap_degrees(double degrees) {
  double w = std::fmod(degrees, 360.0);
  if (w < 0) w += 360.0;
  if (w >= 360.0) w -= 360.0;
  return w == 0.0 ? 0.0 : w;  // folds −0
}

double angle_difference_deg(double a, double b) {
  double d = wrap_degrees(a - b);
  if (d > 180.0) d -= 360.0;
  return d;
}

double heading_deg(const Quat& rotation) {
  const Vec3 forward = rotation * Vec3::UnitX();
  return wrap_degrees(std::atan2(forward.z(), forward.x()) * 180.0 / std::numbers::pi);
}

Quat rotation_from_heading(double degrees) {
  // A right-handed turn about +y by φ sends +x to (cos φ, 0, −sin φ).
  return Quat(Eigen::AngleAxisd(-degrees * std::numbers::pi / 180.0, Vec3::UnitY()));
}

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace

std::optional<double> segment_intersection(const Segment2& p, const Segment2& q) {
  const Vec2 d = p.b - p.a;
  const Vec2 e = q.b - q.a;
  const Vec2 w = q.a - p.a;
  const double denom = cross(d, e);
  if (denom != 0.0) {
    const double t = cross(w, e) / denom;
    const double u = cross(w, d) / denom;
    if (t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0) return t;
    return std::nullopt;
  }
  if (cross(w, d) != 0.0) return std::nullopt;  // parallel, not collinear
  const double dd = d.squaredNorm();
  if (dd == 0.0) {
    // p is a point
    return point_segment_distance(p.a, q) == 0.0 ? std::optional<double>(0.0) : std::nullopt;
  }
  const double t0 = w.dot(d) / dd;
  const double t1 = (q.b - p.a).dot(d) / dd;
  const double lo = std::max(0.0, std::min(t0, t1));
  const double hi = std::min(1.0, std::max(t0, t1));
  if (lo > hi) return std::nullopt;
  return lo;
}

double point_segment_distance(const Vec2& point, const Segment2& s) {
  const Vec2 d = s.b - s.a;
  const double len2 = d.squaredNorm();
  if (len2 == 0.0) return (point - s.a).norm();
  const double t = std::clamp((point - s.a).dot(d) / len2, 0.0, 1.0);
  return (point - (s.a + t * d)).norm();
}

bool is_simple_polygon(std::span<const Vec2> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) return false;
  auto edge = [&](std::size_t i) { return Segment2{polygon[i], polygon[(i + 1) % n]}; };
  for (std::size_t i = 0; i < n; ++i) {
    if ((polygon[i] - polygon[(i + 1) % n]).squaredNorm() == 0.0) return false;
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segment_intersection(edge(i), edge(j))) return false;
    }
  }
  return true;
}

}  // namespace reenact
