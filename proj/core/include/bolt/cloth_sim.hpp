#pragma once

#include <array>
#include <memory>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "bolt/bvh.hpp"
#include "bolt/mesh.hpp"
#include "bolt/sdf.hpp"
#include "bolt/types.hpp"

namespace bolt {

struct CollisionParams {
  double force_coefficient = 2.5e6;
  double damping_coefficient = 25.0;
  double friction_coefficient = 25.0;
  double eps_sdf = 0.2;
  /// Fraction of velocity removed by the global damping pass.
  double velocity_damping = 0.9;
  /// Apply the damping every substep (true) or once per frame.
  bool damping_per_substep = true;
  bool self_collisions = true;

  void validate() const;
};

struct SimParams {
  double frame_dt = 1.0 / 60.0;
  int substeps = 16;
  Vec3 gravity = Vec3(0.0, -981.0, 0.0);
  double blowup_limit = 1e4;
  CollisionParams collision;

  double substep_dt() const { return frame_dt / substeps; }
  void validate() const;
};

void to_json(nlohmann::json& j, const SimParams& p);
void from_json(const nlohmann::json& j, SimParams& p);

/// Dihedral spring across a seam: shared edge (v[0], v[1]) and the two
/// opposite vertices v[2] (first triangle) and v[3] (second).
struct SeamHinge {
  std::array<int, 4> v{};
  double rest_angle = 0.0;
  double stiffness = 0.0;
  double damping = 0.0;
};

struct ClothState {
  std::vector<Vec3> x;
  std::vector<Vec3> v;
  std::vector<double> mass;
  std::vector<char> pinned;

  std::vector<Tri> triangles;
  std::vector<int> vertex_panel;
  std::vector<Mat2> dm_inv;       // inverse rest 2D edge matrices
  std::vector<double> rest_area;  // 2D
  std::vector<MaterialParams> tri_material;
  std::vector<std::array<int, 3>> neighbors;
  std::vector<Mat2> rest_curvature; // S^r, zero by default
  std::vector<SeamHinge> hinges;
  SeamSpec seams;

  std::vector<Vec3> last_normal;
  std::vector<char> has_last_normal;

  std::shared_ptr<const SampledSDF> sdf;
  /// Frozen lower-layer meshes (one-sided contact).
  TriMesh3 frozen;
  TriangleBVH frozen_bvh;
  TriangleBVH bvh;

  long substeps_done = 0;

  std::size_t vertex_count() const { return x.size(); }
  TriMesh3 mesh() const;
};

/// Rest data from the 2D layout (the optimized pattern when draping),
/// positions from the garment's 3D mesh.
ClothState make_cloth_state(const GarmentSheet& garment, const PatternLayout2D& rest_layout);
ClothState make_cloth_state(const GarmentSheet& garment);

void set_frozen_meshes(ClothState& s, const TriMesh3& frozen);

struct ForceResult {
  double energy = 0.0;
  std::array<Vec3, 3> force{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
};

/// Warp, weft and shear stretch terms of triangle t.
ForceResult stretch_force(const ClothState& s, std::size_t t);

/// 2x2 shape operator of triangle t in warp/weft coordinates (mid-edge
/// normals). Returns false when a neighbor is missing.
bool shape_operator(const ClothState& s, std::size_t t, Mat2& S);

struct BendResult {
  double energy = 0.0;
  /// Stencil vertices: the triangle's three, then the opposite vertex of each
  /// neighbor; forces in the same order.
  std::array<int, 6> vertices{-1, -1, -1, -1, -1, -1};
  std::array<Vec3, 6> force;
};

BendResult bend_force(const ClothState& s, std::size_t t);

/// Signed dihedral angle of a hinge at the current positions.
double hinge_angle(const ClothState& s, const SeamHinge& h);

struct HingeResult {
  double energy = 0.0;
  double angle = 0.0;
  std::array<Vec3, 4> force;
};

HingeResult seam_bend_force(const ClothState& s, const SeamHinge& h);

/// Members move to group center + stored offset and share the mean velocity.
void enforce_seams(ClothState& s);

struct ImpulseStats {
  int contacts = 0;
  /// Sum of m * dv over all vertices touched by cloth-cloth impulses.
  Vec3 momentum_change = Vec3::Zero();
  /// Sum of |impulse| over pairs (scale for the momentum audit).
  double impulse_magnitude = 0.0;
  double max_tangential_ratio = 0.0;
};

/// Self contacts between non-adjacent, non-seam-connected triangles within
/// thickness, plus one-sided contacts against frozen meshes. Velocities are
/// updated in place, pair by pair in sorted order.
ImpulseStats cloth_cloth_impulses(ClothState& s, const CollisionParams& p, double dt);

/// Vertex impulses against the collision SDF where it is negative.
ImpulseStats sdf_impulses(ClothState& s, const CollisionParams& p, double dt);

/// Total force on every vertex (gravity included, pinned vertices zero).
std::vector<Vec3> total_forces(const ClothState& s, const SimParams& p);

double kinetic_energy(const ClothState& s);

struct SubstepStats {
  ImpulseStats cloth;
  ImpulseStats sdf;
};

/// One symplectic-Euler substep of length dt. `end_of_frame` matters only for
/// per-frame damping.
SubstepStats step(ClothState& s, double dt, const SimParams& p, bool end_of_frame = true);

struct FrameTelemetry {
  int frame = 0;
  double kinetic_energy = 0.0;
  double max_penetration = 0.0;
  int cloth_contacts = 0;
  int sdf_contacts = 0;
  double momentum_error = 0.0; // worst relative cloth-impulse momentum change
};

void to_json(nlohmann::json& j, const FrameTelemetry& t);

/// Deepest SDF penetration (max of -value, at least 0) over the vertices.
double max_penetration(const ClothState& s);

FrameTelemetry simulate_frame(ClothState& s, const SimParams& p, int frame_index);

} // namespace bolt
