#pragma once

#include "bolt/mesh.hpp"
#include "bolt/types.hpp"

namespace bolt {

/// Closed, outward-oriented meshes.
TriMesh3 icosphere(double radius, int subdivisions, const Vec3& center = Vec3::Zero());
TriMesh3 uv_sphere(double radius, int rings, int segments, const Vec3& center = Vec3::Zero());
/// Box surface with `n` segments along every edge.
TriMesh3 box_mesh(const Box3& box, int n);

struct TubeSpec {
  double radius = 12.0;
  double y_min = 0.0;
  double y_max = 6.0;
  Vec3 axis_point = Vec3::Zero(); // x and z of the axis; y ignored
  int segments_per_panel = 16;
  int rings = 6;
  MaterialParams material;
  int layer = 0;
};

/// Open vertical tube made of two half-cylinder panels sewn along both sides.
/// The layout is the unrolled panels (chord length, height), the second panel
/// shifted right of the first.
GarmentSheet tube_garment(const TubeSpec& spec);

/// One rectangular panel in the plane y = corner.y, normal +y, spanning
/// x in [corner.x, corner.x + width] and z in [corner.z - depth, corner.z].
/// Layout coordinate u runs along +x, v along -z, both from 0.
GarmentSheet flat_sheet(double width, double depth, int nx, int nz, const Vec3& corner,
                        const MaterialParams& material = {});

} // namespace bolt
