#include "bolt/primitives.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "bolt/error.hpp"

namespace bolt {

TriMesh3 icosphere(double radius, int subdivisions, const Vec3& center) {
  if (!(radius > 0.0) || subdivisions < 0) throw ConfigError("icosphere needs radius > 0, subdivisions >= 0");
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> p = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                         {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  std::vector<Tri> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (Vec3& v : p) v.normalize();
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      if (auto it = mid.find(key); it != mid.end()) return it->second;
      p.push_back((p[a] + p[b]).normalized());
      return mid[key] = static_cast<int>(p.size()) - 1;
    };
    std::vector<Tri> next;
    next.reserve(f.size() * 4);
    for (const Tri& tri : f) {
      const int a = midpoint(tri[0], tri[1]);
      const int b = midpoint(tri[1], tri[2]);
      const int c = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  TriMesh3 m;
  for (const Vec3& v : p) m.positions.push_back(center + radius * v);
  m.triangles = std::move(f);
  return m;
}

TriMesh3 uv_sphere(double radius, int rings, int segments, const Vec3& center) {
  if (!(radius > 0.0) || rings < 2 || segments < 3) throw ConfigError("uv sphere needs rings >= 2, segments >= 3");
  TriMesh3 m;
  m.positions.push_back(center + Vec3(0, radius, 0));
  for (int r = 1; r < rings; ++r) {
    const double phi = std::numbers::pi * r / rings;
    for (int s = 0; s < segments; ++s) {
      const double th = 2.0 * std::numbers::pi * s / segments;
      m.positions.push_back(center + radius * Vec3(std::sin(phi) * std::cos(th), std::cos(phi),
                                                   -std::sin(phi) * std::sin(th)));
    }
  }
  m.positions.push_back(center + Vec3(0, -radius, 0));
  const int south = static_cast<int>(m.positions.size()) - 1;
  auto ring = [&](int r, int s) { return 1 + (r - 1) * segments + (s % segments); };
  for (int s = 0; s < segments; ++s) m.triangles.push_back({0, ring(1, s), ring(1, s + 1)});
  for (int r = 1; r + 1 < rings; ++r) {
    for (int s = 0; s < segments; ++s) {
      m.triangles.push_back({ring(r, s), ring(r + 1, s), ring(r + 1, s + 1)});
      m.triangles.push_back({ring(r, s), ring(r + 1, s + 1), ring(r, s + 1)});
    }
  }
  for (int s = 0; s < segments; ++s) m.triangles.push_back({south, ring(rings - 1, s + 1), ring(rings - 1, s)});
  return m;
}

TriMesh3 box_mesh(const Box3& box, int n) {
  if (n < 1 || box.isEmpty()) throw ConfigError("box mesh needs n >= 1 and a non-empty box");
  TriMesh3 m;
  std::map<std::array<int, 3>, int> ids;
  auto vid = [&](std::array<int, 3> c) {
    if (auto it = ids.find(c); it != ids.end()) return it->second;
    const Vec3 t(c[0] / double(n), c[1] / double(n), c[2] / double(n));
    m.positions.push_back(box.min() + t.cwiseProduct(box.sizes()));
    return ids[c] = static_cast<int>(m.positions.size()) - 1;
  };
  // face on axis `a` at side s; (u, v) axes chosen so u x v points outward
  for (int a = 0; a < 3; ++a) {
    for (int side = 0; side < 2; ++side) {
      int u = (a + 1) % 3, v = (a + 2) % 3;
      if (side == 0) std::swap(u, v);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          auto corner = [&](int di, int dj) {
            std::array<int, 3> c{};
            c[a] = side * n;
            c[u] = i + di;
            c[v] = j + dj;
            return vid(c);
          };
          const int c00 = corner(0, 0), c10 = corner(1, 0), c11 = corner(1, 1), c01 = corner(0, 1);
          m.triangles.push_back({c00, c10, c11});
          m.triangles.push_back({c00, c11, c01});
        }
      }
    }
  }
  return m;
}

GarmentSheet tube_garment(const TubeSpec& spec) {
  if (!(spec.radius > 0.0) || !(spec.y_max > spec.y_min) || spec.segments_per_panel < 2 || spec.rings < 1) {
    throw ConfigError("invalid tube specification");
  }
  GarmentSheet g;
  g.name = "tube";
  g.layer = spec.layer;
  const int ns = spec.segments_per_panel;
  const int nr = spec.rings;
  const double height = spec.y_max - spec.y_min;
  // chord spacing, so the 3D tube is an exact isometry of its layout
  const double chord = 2.0 * spec.radius * std::sin(std::numbers::pi / (2.0 * ns));
  const double half = chord * ns;
  const double gap = 0.25 * half;
  auto id = [&](int panel, int s, int r) { return panel * (ns + 1) * (nr + 1) + s * (nr + 1) + r; };
  for (int panel = 0; panel < 2; ++panel) {
    for (int s = 0; s <= ns; ++s) {
      const double th = std::numbers::pi * (panel + double(s) / ns);
      for (int r = 0; r <= nr; ++r) {
        const double y = spec.y_min + height * r / nr;
        g.mesh3d.positions.push_back(Vec3(spec.axis_point.x() + spec.radius * std::cos(th), y,
                                          spec.axis_point.z() - spec.radius * std::sin(th)));
        g.layout2d.positions2d.push_back(Vec2(panel * (half + gap) + half * s / ns, y - spec.y_min));
        g.layout2d.panel_id.push_back(panel);
      }
    }
    for (int s = 0; s < ns; ++s) {
      for (int r = 0; r < nr; ++r) {
        g.mesh3d.triangles.push_back({id(panel, s, r), id(panel, s + 1, r), id(panel, s + 1, r + 1)});
        g.mesh3d.triangles.push_back({id(panel, s, r), id(panel, s + 1, r + 1), id(panel, s, r + 1)});
      }
    }
  }
  g.layout2d.triangles = g.mesh3d.triangles;
  std::vector<std::pair<int, int>> pairs;
  for (int r = 0; r <= nr; ++r) {
    pairs.emplace_back(id(0, ns, r), id(1, 0, r)); // theta = pi
    pairs.emplace_back(id(0, 0, r), id(1, ns, r)); // theta = 0 / 2 pi
  }
  g.seams = build_seam_groups(pairs, g.mesh3d);
  g.materials = {spec.material, spec.material};
  g.panel_semantics = {"body", "body"};
  g.validate();
  return g;
}

GarmentSheet flat_sheet(double width, double depth, int nx, int nz, const Vec3& corner,
                        const MaterialParams& material) {
  if (!(width > 0.0) || !(depth > 0.0) || nx < 1 || nz < 1) throw ConfigError("invalid sheet specification");
  GarmentSheet g;
  g.name = "sheet";
  auto id = [&](int i, int k) { return i * (nz + 1) + k; };
  for (int i = 0; i <= nx; ++i) {
    for (int k = 0; k <= nz; ++k) {
      const double u = width * i / nx;
      const double v = depth * k / nz;
      g.mesh3d.positions.push_back(corner + Vec3(u, 0.0, -v));
      g.layout2d.positions2d.push_back(Vec2(u, v));
      g.layout2d.panel_id.push_back(0);
    }
  }
  for (int i = 0; i < nx; ++i) {
    for (int k = 0; k < nz; ++k) {
      g.mesh3d.triangles.push_back({id(i, k), id(i + 1, k), id(i + 1, k + 1)});
      g.mesh3d.triangles.push_back({id(i, k), id(i + 1, k + 1), id(i, k + 1)});
    }
  }
  g.layout2d.triangles = g.mesh3d.triangles;
  g.seams = build_seam_groups({}, g.mesh3d);
  g.materials = {material};
  g.panel_semantics = {"body"};
  g.validate();
  return g;
}

} // namespace bolt
