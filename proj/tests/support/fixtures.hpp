// Scenes shared by the unit tests and the acceptance runner.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "bolt/io.hpp"
#include "bolt/mesh.hpp"
#include "bolt/pipeline.hpp"
#include "bolt/primitives.hpp"
#include "bolt/rig_transfer.hpp"

namespace fixtures {

using namespace bolt;

inline constexpr double kBodyRadius = 10.0;

inline TriMesh3 sphere_body(double radius = kBodyRadius, int subdivisions = 4) {
  return icosphere(radius, subdivisions);
}

/// Collision field the first drape layer sees with the default pipeline grid.
inline SampledSDF first_layer_field(const TriMesh3& body, const std::vector<TriMesh3>& garments,
                                    const PipelineConfig& cfg = {}) {
  std::vector<TriMesh3> all{body};
  all.insert(all.end(), garments.begin(), garments.end());
  const GridSpec grid = drape_grid(all, cfg.grid_margin, cfg.grid_nodes);
  const double eps = cfg.sim.collision.eps_sdf;
  SampledSDF s = sdf_union(empty_sdf(grid), build_sdf(body, grid, cfg.winding_threshold), eps);
  return sdf_union(s, empty_sdf(grid), eps);
}

/// Short tube sitting on the top of the sphere: its bottom ring is lowered
/// until the lowest ring vertex just touches the collision surface, then the
/// tube is simulated until it rests there.
inline GarmentSheet resting_tube(const TriMesh3& body, double radius = 7.0, double height = 2.0,
                                 int settle_frames = 40) {
  TubeSpec spec;
  spec.radius = radius;
  spec.segments_per_panel = 16;
  spec.rings = 4;
  // inside the body's bounding box so the drape grid depends on the body only
  double lo = 0.0, hi = kBodyRadius - height;
  const SampledSDF field = first_layer_field(body, {});
  auto ring_gap = [&](double y0) {
    spec.y_min = y0;
    spec.y_max = y0 + height;
    const GarmentSheet g = tube_garment(spec);
    double gap = 1e300;
    for (const Vec3& p : g.mesh3d.positions) {
      if (p.y() == y0) gap = std::min(gap, sample(field, p).value);
    }
    return gap;
  };
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (ring_gap(mid) > 1e-4 ? hi : lo) = mid;
  }
  spec.y_min = hi;
  spec.y_max = hi + height;
  GarmentSheet g = tube_garment(spec);
  g.name = "tube";
  if (settle_frames > 0) {
    const PipelineConfig cfg;
    ClothState s = make_cloth_state(g);
    s.sdf = std::make_shared<const SampledSDF>(field);
    for (int f = 0; f < settle_frames; ++f) simulate_frame(s, cfg.sim, f);
    g.mesh3d.positions = s.x;
  }
  return g;
}

/// Tube floating above the sphere, clear of the body's collision surface.
inline GarmentSheet floating_tube(double radius, int layer, const std::string& name, double y_min = 9.5,
                                  double height = 3.0) {
  TubeSpec spec;
  spec.radius = radius;
  spec.y_min = y_min;
  spec.y_max = y_min + height;
  spec.segments_per_panel = 20;
  spec.rings = 6;
  spec.layer = layer;
  GarmentSheet g = tube_garment(spec);
  g.name = name;
  return g;
}

/// The same tube with its 3D shape moved to another radius (rest layout kept).
inline GarmentSheet with_radius(const GarmentSheet& g, double radius) {
  GarmentSheet out = g;
  for (Vec3& p : out.mesh3d.positions) {
    const double r = std::hypot(p.x(), p.z());
    p.x() *= radius / r;
    p.z() *= radius / r;
  }
  out.seams = build_seam_groups(out.seams.pairs, out.mesh3d);
  return out;
}

/// Concatenates two garments into one sheet; b's panels follow a's.
inline GarmentSheet merge(const GarmentSheet& a, const GarmentSheet& b) {
  GarmentSheet g = a;
  const int nv = static_cast<int>(a.mesh3d.positions.size());
  const int np = a.layout2d.panel_count();
  double shift = 0.0;
  for (const Vec2& q : a.layout2d.positions2d) shift = std::max(shift, q.x());
  shift += 5.0;
  for (std::size_t i = 0; i < b.mesh3d.positions.size(); ++i) {
    g.mesh3d.positions.push_back(b.mesh3d.positions[i]);
    g.layout2d.positions2d.push_back(b.layout2d.positions2d[i] + Vec2(shift, 0.0));
    g.layout2d.panel_id.push_back(b.layout2d.panel_id[i] + np);
  }
  for (const Tri& f : b.mesh3d.triangles) g.mesh3d.triangles.push_back({f[0] + nv, f[1] + nv, f[2] + nv});
  g.layout2d.triangles = g.mesh3d.triangles;
  std::vector<std::pair<int, int>> pairs = a.seams.pairs;
  for (const auto& [x, y] : b.seams.pairs) pairs.emplace_back(x + nv, y + nv);
  g.seams = build_seam_groups(pairs, g.mesh3d);
  g.materials.insert(g.materials.end(), b.materials.begin(), b.materials.end());
  g.panel_semantics.insert(g.panel_semantics.end(), b.panel_semantics.begin(), b.panel_semantics.end());
  g.validate();
  return g;
}

/// Two square sheets, the upper one shifted sideways, closer than the cloth
/// thickness so they touch from the first substep.
inline GarmentSheet two_cloth_scene() {
  const GarmentSheet lower = flat_sheet(10.0, 10.0, 10, 10, Vec3(0.0, 0.0, 0.0));
  const GarmentSheet upper = flat_sheet(10.0, 10.0, 10, 10, Vec3(2.5, 0.2, -1.5));
  return merge(lower, upper);
}

/// Torso box and an arm box with a 2 cm gap between their facing sides; the
/// cloth wraps the torso 1.2 cm away, so on the gap side the arm is the
/// closer surface.
struct PinchFixture {
  TriMesh3 body;
  SkinWeights weights;
  TriMesh3 cloth;
  int correct_joint = 0;
};

inline PinchFixture pinch_fixture() {
  PinchFixture f;
  const TriMesh3 torso = box_mesh(Box3(Vec3(-10, -10, -10), Vec3(0, 10, 10)), 10);
  const TriMesh3 arm = box_mesh(Box3(Vec3(2, -5, -5), Vec3(6, 5, 5)), 10);
  const std::array<TriMesh3, 2> parts{torso, arm};
  f.body = concatenate(parts);
  f.weights.joints = {"torso", "arm"};
  for (std::size_t v = 0; v < f.body.positions.size(); ++v) {
    f.weights.vertices.push_back({{v < torso.positions.size() ? 0 : 1, 1.0}});
  }
  f.cloth = box_mesh(Box3(Vec3(-11.2, -11.2, -11.2), Vec3(1.2, 11.2, 11.2)), 16);
  f.correct_joint = 0;
  return f;
}

/// Two panels side by side in 2D, sewn along panel 0's right edge and panel
/// 1's left edge. Returns the layout and the seam pairs.
struct TwoPanelLayout {
  PatternLayout2D layout;
  TriMesh3 mesh; // flat copy of the layout in the z = 0 plane
  SeamSpec seams;
};

inline TwoPanelLayout two_panel_layout(int nx = 6, int ny = 8, double w = 6.0, double h = 8.0) {
  TwoPanelLayout t;
  const double gap = 2.0;
  auto id = [&](int panel, int i, int j) { return panel * (nx + 1) * (ny + 1) + i * (ny + 1) + j; };
  for (int panel = 0; panel < 2; ++panel) {
    for (int i = 0; i <= nx; ++i) {
      for (int j = 0; j <= ny; ++j) {
        const Vec2 q(panel * (w + gap) + w * i / nx, h * j / ny);
        t.layout.positions2d.push_back(q);
        t.layout.panel_id.push_back(panel);
        t.mesh.positions.push_back(Vec3(q.x(), q.y(), 0.0));
      }
    }
    for (int i = 0; i < nx; ++i) {
      for (int j = 0; j < ny; ++j) {
        t.layout.triangles.push_back({id(panel, i, j), id(panel, i + 1, j), id(panel, i + 1, j + 1)});
        t.layout.triangles.push_back({id(panel, i, j), id(panel, i + 1, j + 1), id(panel, i, j + 1)});
      }
    }
  }
  t.mesh.triangles = t.layout.triangles;
  std::vector<std::pair<int, int>> pairs;
  for (int j = 0; j <= ny; ++j) pairs.emplace_back(id(0, nx, j), id(1, 0, j));
  t.seams = build_seam_groups(pairs, t.mesh);
  return t;
}

/// Writes body + one garment bundle + manifest; target body == source body.
inline std::filesystem::path write_outfit(const std::filesystem::path& dir, const TriMesh3& body,
                                          const std::vector<GarmentSheet>& garments,
                                          const nlohmann::json& config = nlohmann::json::object()) {
  namespace fs = std::filesystem;
  fs::remove_all(dir);
  fs::create_directories(dir);
  BodyAsset b;
  b.mesh = body;
  write_body(dir / "body", b);
  OutfitManifest m;
  m.source_bodies["base"] = dir / "body";
  m.target_body = dir / "body";
  for (std::size_t i = 0; i < garments.size(); ++i) {
    const fs::path gdir = dir / ("garment" + std::to_string(i));
    write_garment_bundle(gdir, garments[i]);
    GarmentEntry e;
    e.bundle = gdir;
    e.source_body = "base";
    m.garments.push_back(e);
  }
  m.config = config;
  write_manifest(dir / "manifest.json", m);
  return dir / "manifest.json";
}

} // namespace fixtures
