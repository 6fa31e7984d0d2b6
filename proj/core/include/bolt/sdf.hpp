#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "bolt/mesh.hpp"
#include "bolt/types.hpp"

namespace bolt {

/// Generalized winding number of `query` with respect to `mesh`: the sum of
/// signed solid angles over 4*pi. Exact per-triangle evaluation; a query lying
/// on a triangle is nudged by 1e-9 cm.
double winding_number(const Vec3& query, const TriMesh3& mesh);

/// Regular node lattice: node (i, j, k) sits at origin + cell * (i, j, k).
struct GridSpec {
  Vec3 origin = Vec3::Zero();
  double cell = 1.0;
  std::array<int, 3> dims{0, 0, 0};

  std::size_t node_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  /// Row-major: z varies fastest.
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * dims[1] + j) * dims[2] + k;
  }
  Vec3 node(int i, int j, int k) const { return origin + cell * Vec3(i, j, k); }
  Box3 bounds() const;
  bool operator==(const GridSpec& o) const {
    return origin == o.origin && cell == o.cell && dims == o.dims;
  }
};

/// Cubic-cell grid over `box` expanded by `margin`; the longest axis gets
/// `max_nodes` nodes.
GridSpec grid_for_bounds(const Box3& box, double margin, int max_nodes = 128);

/// Exact generalized winding numbers at every grid node. Open meshes are
/// closed with a cap fan; the closed part is counted by signed line crossings
/// and the cap's solid angle is subtracted. Agrees with winding_number() to
/// floating-point accuracy.
std::vector<double> winding_numbers_on_grid(const TriMesh3& mesh, const GridSpec& grid);

/// Same evaluation at arbitrary points; points sharing (y, z) share a sweep.
std::vector<double> winding_numbers_at(const TriMesh3& mesh, std::span<const Vec3> points);

/// Regular-grid signed distance field.
struct SampledSDF {
  GridSpec grid;
  std::vector<double> values;
  double winding_threshold = 0.25;
  /// Total outward expansion applied by unions so far (cm).
  double offset_applied = 0.0;

  double at(int i, int j, int k) const { return values[grid.index(i, j, k)]; }
};

/// Magnitude from the unsigned distance to the mesh, negative where the
/// winding number exceeds `winding_threshold`.
SampledSDF build_sdf(const TriMesh3& mesh, const GridSpec& grid, double winding_threshold = 0.25);

/// Field that is +infinity everywhere (the empty collider set).
SampledSDF empty_sdf(const GridSpec& grid);

/// min(a, b) - eps, with b resampled onto a's grid when the specs differ.
SampledSDF sdf_union(const SampledSDF& a, const SampledSDF& b, double eps);

SampledSDF resample(const SampledSDF& field, const GridSpec& grid);

struct SdfSample {
  double value = 0.0;
  Vec3 gradient = Vec3::Zero();
  bool clamped = false;
};

/// Trilinear value; gradient by central differences of the trilinear field
/// (step of half a cell). Points outside the grid are clamped onto it.
SdfSample sample(const SampledSDF& field, const Vec3& point);

/// Little-endian dump: origin (3 x f64), cell (f64), dims (3 x i64), then the
/// node values as f64 in row-major order.
void write_sdf_binary(const SampledSDF& field, const std::filesystem::path& path);
SampledSDF read_sdf_binary(const std::filesystem::path& path);

} // namespace bolt
