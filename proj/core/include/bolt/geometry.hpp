#pragma once

// Low-level triangle geometry shared by the spatial queries, the SDF builder
// and the collision code.

#include <optional>

#include "bolt/types.hpp"

namespace bolt::geom {

struct PointTriangleResult {
  Vec3 point;
  Vec3 barycentric;
  double squared_distance = 0.0;
};

/// Closest point on triangle (a, b, c) to p (Ericson, Real-Time Collision
/// Detection, 5.1.5) together with its barycentric coordinates.
PointTriangleResult closest_point_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                                           const Vec3& c);

struct SegmentSegmentResult {
  double s = 0.0;  // parameter on the first segment
  double t = 0.0;  // parameter on the second segment
  Vec3 p;
  Vec3 q;
  double squared_distance = 0.0;
};

SegmentSegmentResult closest_points_segments(const Vec3& p0, const Vec3& p1, const Vec3& q0,
                                             const Vec3& q1);

struct TriangleTriangleResult {
  Vec3 point_a;
  Vec3 point_b;
  Vec3 bary_a;
  Vec3 bary_b;
  double distance = 0.0;
};

/// Exact minimum distance between two triangles. Intersecting triangles report
/// distance 0 with both points at an intersection point.
TriangleTriangleResult triangle_triangle_distance(const std::array<Vec3, 3>& a,
                                                  const std::array<Vec3, 3>& b);

struct RayTriangleHit {
  double t = 0.0;
  Vec3 barycentric;
};

/// Moller-Trumbore; two-sided, hits with t in [t_min, t_max].
std::optional<RayTriangleHit> ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                           const Vec3& b, const Vec3& c, double t_min,
                                           double t_max);

/// Signed solid angle of triangle (a, b, c) seen from p (Van Oosterom and
/// Strackee). Positive when the triangle's front side faces away from p.
double solid_angle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Separating-axis overlap test between an axis-aligned box and a triangle.
bool box_triangle_overlap(const Box3& box, const Vec3& a, const Vec3& b, const Vec3& c);

double squared_distance_point_box(const Vec3& p, const Box3& box);
double squared_distance_box_box(const Box3& a, const Box3& b);

inline Vec3 triangle_normal_unnormalized(const Vec3& a, const Vec3& b, const Vec3& c) {
  return (b - a).cross(c - a);
}

} // namespace bolt::geom
