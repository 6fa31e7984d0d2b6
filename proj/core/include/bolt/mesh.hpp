#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bolt/types.hpp"

namespace bolt {

/// Indexed triangle mesh in 3D (body, garment, proxy or collider).
struct TriMesh3 {
  std::vector<Vec3> positions;
  std::vector<Tri> triangles;
  /// Optional; empty or one unit normal per vertex.
  std::vector<Vec3> normals;

  std::size_t vertex_count() const { return positions.size(); }
  std::size_t triangle_count() const { return triangles.size(); }

  /// Throws ValidationError on out-of-range indices, degenerate triangles or
  /// non-unit normals.
  void validate() const;

  double triangle_area(std::size_t t) const;
  Vec3 triangle_normal(std::size_t t) const;
  Box3 bounds() const;
};

/// Area-weighted vertex normals.
std::vector<Vec3> area_weighted_normals(std::span<const Vec3> positions,
                                        std::span<const Tri> triangles);

/// Fills mesh.normals with area-weighted normals when absent.
void ensure_normals(TriMesh3& mesh);

TriMesh3 concatenate(std::span<const TriMesh3> meshes);

/// neighbors[t][i] is the triangle sharing the edge opposite vertex i of t, or
/// -1 when that edge is a border (or non-manifold) edge.
std::vector<std::array<int, 3>> triangle_neighbors(std::span<const Tri> triangles,
                                                   std::size_t vertex_count);

/// Vertex one-ring adjacency (sorted, unique).
std::vector<std::vector<int>> vertex_adjacency(std::span<const Tri> triangles,
                                               std::size_t vertex_count);

/// For every vertex on a border edge, its (up to two) neighbors along the
/// border; interior vertices get an empty list.
std::vector<std::vector<int>> border_neighbors(std::span<const Tri> triangles,
                                               std::size_t vertex_count);

/// 2D sewing-pattern layout paired one-to-one with a TriMesh3.
struct PatternLayout2D {
  std::vector<Vec2> positions2d;
  std::vector<Tri> triangles;
  std::vector<int> panel_id;

  double signed_area(std::size_t t) const;
  int panel_count() const;

  /// Checks the panel invariants and the pairing with mesh3d.
  void validate(const TriMesh3& mesh3d) const;
};

/// Seam pairs plus the derived seam groups and per-member offsets.
struct SeamSpec {
  std::vector<std::pair<int, int>> pairs;
  /// Disjoint vertex sets; members sorted ascending, groups ordered by their
  /// smallest member.
  std::vector<std::vector<int>> groups;
  /// offsets[g][k] is member k's offset from the centroid of group g.
  std::vector<std::vector<Vec3>> offsets;
  /// Group index per vertex, -1 for vertices not on any seam.
  std::vector<int> vertex_group;

  bool empty() const { return groups.empty(); }
  bool same_group(int a, int b) const;
};

/// Union-find over the seam pairs; offsets are taken from mesh positions.
SeamSpec build_seam_groups(std::span<const std::pair<int, int>> pairs, const TriMesh3& mesh);

/// Per-panel fabric parameters (cm, g, s).
struct MaterialParams {
  double k_warp = 2.0e4;
  double k_weft = 2.0e4;
  double k_shear_stretch = 5.0e3;
  double k_warp_bend = 50.0;
  double k_weft_bend = 50.0;
  double k_shear_bend = 25.0;
  double density = 0.02;  // g/cm^2
  double thickness = 0.3; // cm
  double seam_bend_stiffness = 100.0;
  double seam_bend_damping = 1.0;

  void validate() const;
};

/// A garment: 3D mesh and 2D pattern over one triangulation.
struct GarmentSheet {
  std::string name;
  TriMesh3 mesh3d;
  PatternLayout2D layout2d;
  SeamSpec seams;
  /// One entry per panel id.
  std::vector<MaterialParams> materials;
  int layer = 0;
  /// Semantic tag per panel id ("body", "pocket", "strap", ...).
  std::vector<std::string> panel_semantics;

  void validate() const;
  const MaterialParams& material_for_panel(int panel) const;
};

} // namespace bolt
