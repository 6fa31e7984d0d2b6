// Reference computations written independently of the library code paths.
#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "bolt/mesh.hpp"

namespace oracle {

using bolt::Tri;
using bolt::Vec3;

/// Closest point on a triangle: plane projection when it falls inside,
/// otherwise the best of the three edge segments.
inline Vec3 closest_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 n = (b - a).cross(c - a);
  const Vec3 q = p - n.dot(p - a) / n.squaredNorm() * n;
  const double s0 = n.dot((b - a).cross(q - a));
  const double s1 = n.dot((c - b).cross(q - b));
  const double s2 = n.dot((a - c).cross(q - c));
  if (s0 >= 0 && s1 >= 0 && s2 >= 0) return q;
  auto seg = [&](const Vec3& u, const Vec3& v) {
    const double t = std::clamp((p - u).dot(v - u) / (v - u).squaredNorm(), 0.0, 1.0);
    return Vec3(u + t * (v - u));
  };
  Vec3 best = seg(a, b);
  for (const Vec3& cand : {seg(b, c), seg(c, a)}) {
    if ((cand - p).squaredNorm() < (best - p).squaredNorm()) best = cand;
  }
  return best;
}

inline double brute_force_distance(const Vec3& p, const bolt::TriMesh3& m, int* tri = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < m.triangles.size(); ++t) {
    const Tri& f = m.triangles[t];
    const double d = (closest_on_triangle(p, m.positions[f[0]], m.positions[f[1]], m.positions[f[2]]) - p).norm();
    if (d < best) {
      best = d;
      if (tri) *tri = static_cast<int>(t);
    }
  }
  return best;
}

/// Signed crossing count of the ray p + t d (t > 0): +1 when leaving through
/// the front of an outward-oriented triangle.
inline int signed_crossings(const Vec3& p, const Vec3& d, const bolt::TriMesh3& m) {
  int count = 0;
  for (const Tri& f : m.triangles) {
    const Vec3& a = m.positions[f[0]];
    const Vec3 e1 = m.positions[f[1]] - a;
    const Vec3 e2 = m.positions[f[2]] - a;
    const Vec3 h = d.cross(e2);
    const double det = e1.dot(h);
    if (std::abs(det) < 1e-14) continue;
    const Vec3 s = p - a;
    const double u = s.dot(h) / det;
    if (u < 0 || u > 1) continue;
    const Vec3 q = s.cross(e1);
    const double v = d.dot(q) / det;
    if (v < 0 || u + v > 1) continue;
    if (e2.dot(q) / det <= 0) continue;
    count += e1.cross(e2).dot(d) > 0 ? 1 : -1;
  }
  return count;
}

/// Monte-Carlo winding number: the mean signed crossing count over uniformly
/// random ray directions (the solid-angle integral in sampled form).
inline double monte_carlo_winding(const Vec3& p, const bolt::TriMesh3& m, int samples, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  long total = 0;
  for (int i = 0; i < samples; ++i) {
    Vec3 d(g(rng), g(rng), g(rng));
    d.normalize();
    total += signed_crossings(p, d, m);
  }
  return static_cast<double>(total) / samples;
}

/// Central differences of f at x with step h.
inline Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                          const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd y = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    y[i] = x[i] + h;
    const double fp = f(y);
    y[i] = x[i] - h;
    const double fm = f(y);
    y[i] = x[i];
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& ref) {
  const double scale = std::max(ref.norm(), 1e-12);
  return (a - ref).norm() / scale;
}

/// Golden-section minimisation of a unimodal function on [lo, hi].
inline double golden_section(const std::function<double(double)>& f, double lo, double hi, int iters = 200) {
  const double r = (std::sqrt(5.0) - 1) / 2;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  for (int i = 0; i < iters; ++i) {
    if (f(c) < f(d)) b = d; else a = c;
    c = b - r * (b - a);
    d = a + r * (b - a);
  }
  return 0.5 * (a + b);
}

} // namespace oracle
