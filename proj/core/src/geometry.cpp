#include "bolt/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bolt::geom {

PointTriangleResult closest_point_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                                           const Vec3& c) {
  auto finish = [&](const Vec3& bary) {
    PointTriangleResult r;
    r.barycentric = bary;
    r.point = bary[0] * a + bary[1] * b + bary[2] * c;
    r.squared_distance = (r.point - p).squaredNorm();
    return r;
  };

  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return finish({1.0, 0.0, 0.0});

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return finish({0.0, 1.0, 0.0});

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    return finish({1.0 - v, v, 0.0});
  }

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return finish({0.0, 0.0, 1.0});

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    return finish({1.0 - w, 0.0, w});
  }

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    return finish({0.0, 1.0 - w, w});
  }

  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom;
  const double w = vc * denom;
  return finish({1.0 - v - w, v, w});
}

SegmentSegmentResult closest_points_segments(const Vec3& p0, const Vec3& p1, const Vec3& q0,
                                             const Vec3& q1) {
  // Ericson 5.1.9
  constexpr double kEps = 1e-300;
  const Vec3 d1 = p1 - p0;
  const Vec3 d2 = q1 - q0;
  const Vec3 r = p0 - q0;
  const double a = d1.squaredNorm();
  const double e = d2.squaredNorm();
  const double f = d2.dot(r);
  double s = 0.0;
  double t = 0.0;
  if (a <= kEps && e <= kEps) {
    s = t = 0.0;
  } else if (a <= kEps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= kEps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > 0.0 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  SegmentSegmentResult res;
  res.s = s;
  res.t = t;
  res.p = p0 + d1 * s;
  res.q = q0 + d2 * t;
  res.squared_distance = (res.p - res.q).squaredNorm();
  return res;
}

namespace {

// Segment p0->p1 against triangle; returns segment parameter and barycentrics.
std::optional<std::pair<double, Vec3>> segment_triangle(const Vec3& p0, const Vec3& p1,
                                                        const Vec3& a, const Vec3& b,
                                                        const Vec3& c) {
  const Vec3 dir = p1 - p0;
  auto hit = ray_triangle(p0, dir, a, b, c, 0.0, 1.0);
  if (!hit) return std::nullopt;
  return std::make_pair(hit->t, hit->barycentric);
}

Vec3 edge_bary(int i, int j, double s) {
  Vec3 bary = Vec3::Zero();
  bary[i] = 1.0 - s;
  bary[j] = s;
  return bary;
}

} // namespace

TriangleTriangleResult triangle_triangle_distance(const std::array<Vec3, 3>& a,
                                                  const std::array<Vec3, 3>& b) {
  TriangleTriangleResult best;
  best.distance = std::numeric_limits<double>::infinity();
  double best_sq = std::numeric_limits<double>::infinity();

  static constexpr int kEdges[3][2] = {{0, 1}, {1, 2}, {2, 0}};

  // Edge-face intersections first: any hit means distance zero.
  for (const auto& e : kEdges) {
    if (auto hit = segment_triangle(a[e[0]], a[e[1]], b[0], b[1], b[2])) {
      best.bary_a = edge_bary(e[0], e[1], hit->first);
      best.bary_b = hit->second;
      best.point_a = best.point_b =
          hit->second[0] * b[0] + hit->second[1] * b[1] + hit->second[2] * b[2];
      best.distance = 0.0;
      return best;
    }
  }
  for (const auto& e : kEdges) {
    if (auto hit = segment_triangle(b[e[0]], b[e[1]], a[0], a[1], a[2])) {
      best.bary_b = edge_bary(e[0], e[1], hit->first);
      best.bary_a = hit->second;
      best.point_a = best.point_b =
          hit->second[0] * a[0] + hit->second[1] * a[1] + hit->second[2] * a[2];
      best.distance = 0.0;
      return best;
    }
  }

  for (int i = 0; i < 3; ++i) {
    const auto r = closest_point_triangle(a[i], b[0], b[1], b[2]);
    if (r.squared_distance < best_sq) {
      best_sq = r.squared_distance;
      best.point_a = a[i];
      best.bary_a = Vec3::Unit(i);
      best.point_b = r.point;
      best.bary_b = r.barycentric;
    }
  }
  for (int i = 0; i < 3; ++i) {
    const auto r = closest_point_triangle(b[i], a[0], a[1], a[2]);
    if (r.squared_distance < best_sq) {
      best_sq = r.squared_distance;
      best.point_b = b[i];
      best.bary_b = Vec3::Unit(i);
      best.point_a = r.point;
      best.bary_a = r.barycentric;
    }
  }
  for (const auto& ea : kEdges) {
    for (const auto& eb : kEdges) {
      const auto r = closest_points_segments(a[ea[0]], a[ea[1]], b[eb[0]], b[eb[1]]);
      if (r.squared_distance < best_sq) {
        best_sq = r.squared_distance;
        best.point_a = r.p;
        best.point_b = r.q;
        best.bary_a = edge_bary(ea[0], ea[1], r.s);
        best.bary_b = edge_bary(eb[0], eb[1], r.t);
      }
    }
  }
  best.distance = std::sqrt(best_sq);
  return best;
}

std::optional<RayTriangleHit> ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                           const Vec3& b, const Vec3& c, double t_min,
                                           double t_max) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 pvec = dir.cross(e2);
  const double det = e1.dot(pvec);
  const double scale = e1.norm() * e2.norm() * dir.norm();
  if (std::abs(det) <= 1e-14 * scale) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 tvec = origin - a;
  const double u = tvec.dot(pvec) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 qvec = tvec.cross(e1);
  const double v = dir.dot(qvec) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = e2.dot(qvec) * inv;
  if (t < t_min || t > t_max) return std::nullopt;
  return RayTriangleHit{t, Vec3(1.0 - u - v, u, v)};
}

double solid_angle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ra = a - p;
  const Vec3 rb = b - p;
  const Vec3 rc = c - p;
  const double la = ra.norm();
  const double lb = rb.norm();
  const double lc = rc.norm();
  const double numer = ra.dot(rb.cross(rc));
  const double denom = la * lb * lc + ra.dot(rb) * lc + ra.dot(rc) * lb + rb.dot(rc) * la;
  return 2.0 * std::atan2(numer, denom);
}

double squared_distance_point_box(const Vec3& p, const Box3& box) {
  double d = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double lo = box.min()[k] - p[k];
    const double hi = p[k] - box.max()[k];
    const double e = std::max({lo, hi, 0.0});
    d += e * e;
  }
  return d;
}

double squared_distance_box_box(const Box3& a, const Box3& b) {
  double d = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double gap = std::max({a.min()[k] - b.max()[k], b.min()[k] - a.max()[k], 0.0});
    d += gap * gap;
  }
  return d;
}

bool box_triangle_overlap(const Box3& box, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Akenine-Moller separating axis test.
  const Vec3 center = box.center();
  const Vec3 half = 0.5 * box.sizes();
  const Vec3 v0 = a - center;
  const Vec3 v1 = b - center;
  const Vec3 v2 = c - center;
  const std::array<Vec3, 3> edges = {v1 - v0, v2 - v1, v0 - v2};

  for (const Vec3& e : edges) {
    for (int k = 0; k < 3; ++k) {
      const Vec3 axis = Vec3::Unit(k).cross(e);
      const double p0 = axis.dot(v0);
      const double p1 = axis.dot(v1);
      const double p2 = axis.dot(v2);
      const double r = half.dot(axis.cwiseAbs());
      const double lo = std::min({p0, p1, p2});
      const double hi = std::max({p0, p1, p2});
      if (lo > r || hi < -r) return false;
    }
  }
  for (int k = 0; k < 3; ++k) {
    const double lo = std::min({v0[k], v1[k], v2[k]});
    const double hi = std::max({v0[k], v1[k], v2[k]});
    if (lo > half[k] || hi < -half[k]) return false;
  }
  const Vec3 normal = edges[0].cross(edges[1]);
  const double d = normal.dot(v0);
  const double r = half.dot(normal.cwiseAbs());
  return std::abs(d) <= r;
}

} // namespace bolt::geom
