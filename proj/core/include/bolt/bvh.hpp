#pragma once

#include <optional>
#include <span>
#include <vector>

#include "bolt/geometry.hpp"
#include "bolt/mesh.hpp"
#include "bolt/types.hpp"

namespace bolt {

/// Axis-aligned bounding-box hierarchy over a mesh's triangles.
///
/// The hierarchy keeps its own copy of the triangle list; positions are passed
/// to every query so one BVH can follow a deforming mesh through refit().
class TriangleBVH {
public:
  struct Node {
    Box3 box;
    int left = -1;
    int right = -1;
    int first = 0; // into leaf_order()
    int count = 0; // > 0 for leaves
    bool is_leaf() const { return count > 0; }
  };

  TriangleBVH() = default;
  TriangleBVH(std::span<const Vec3> positions, std::span<const Tri> triangles, int leaf_size = 4);
  explicit TriangleBVH(const TriMesh3& mesh) : TriangleBVH(mesh.positions, mesh.triangles) {}

  /// Updates node bounds for new positions. Rebuilds the topology when the
  /// surface-area heuristic cost has degraded by more than 4x relative to the
  /// last build; returns true in that case.
  bool refit(std::span<const Vec3> positions);

  bool empty() const { return nodes_.empty(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<int>& leaf_order() const { return order_; }
  std::span<const Tri> triangles() const { return tris_; }
  const Box3& triangle_box(int t) const { return tri_boxes_[t]; }

  double sah_cost() const;
  double built_sah_cost() const { return built_sah_; }

  /// Depth-first traversal. `enter(box)` decides whether to descend into a
  /// node; `leaf(triangle)` is called for each triangle of an entered leaf.
  template <class Enter, class Leaf>
  void traverse(Enter&& enter, Leaf&& leaf) const {
    if (nodes_.empty()) return;
    int stack[128];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      if (!enter(node.box)) continue;
      if (node.is_leaf()) {
        for (int i = 0; i < node.count; ++i) leaf(order_[node.first + i]);
      } else {
        stack[top++] = node.right;
        stack[top++] = node.left;
      }
    }
  }

private:
  void build(std::span<const Vec3> positions);
  int build_node(int first, int count, std::vector<Vec3>& centroids);
  void compute_triangle_boxes(std::span<const Vec3> positions);

  std::vector<Tri> tris_;
  std::vector<Box3> tri_boxes_;
  std::vector<Node> nodes_;
  std::vector<int> order_;
  int leaf_size_ = 4;
  double built_sah_ = 0.0;
};

enum class Side { Inside, Outside };

struct ClosestPoint {
  Vec3 point = Vec3::Zero();
  int triangle = -1;
  Vec3 barycentric = Vec3::Zero();
  double distance = 0.0;
  Side side = Side::Outside;
};

/// Global nearest point on the mesh; ties resolve to the lowest triangle
/// index. `hint` (a triangle index) only seeds the search bound.
ClosestPoint closest_point_unsigned(const Vec3& query, std::span<const Vec3> positions,
                                    const TriangleBVH& bvh, int hint = -1);

/// Nearest point plus inside/outside classification from the generalized
/// winding number (threshold 0.5, intended for closed meshes).
ClosestPoint closest_point_on_mesh(const Vec3& query, const TriMesh3& mesh, const TriangleBVH& bvh);

struct ProximityPair {
  int tri_a = -1;
  int tri_b = -1;
  Vec3 point_a;
  Vec3 point_b;
  Vec3 bary_a;
  Vec3 bary_b;
  double distance = 0.0;
};

/// All triangle pairs (one from each mesh) whose minimum distance is <= radius,
/// ordered by (tri_a, tri_b).
std::vector<ProximityPair> proximity_pairs(const TriangleBVH& bvh_a, std::span<const Vec3> pos_a,
                                           const TriangleBVH& bvh_b, std::span<const Vec3> pos_b,
                                           double radius);

/// Same, for a mesh against itself: pairs with tri_a < tri_b. Pairs sharing a
/// vertex are included; callers filter by topology.
std::vector<ProximityPair> proximity_pairs_self(const TriangleBVH& bvh,
                                                std::span<const Vec3> positions, double radius);

/// All-pairs reference used to validate the hierarchy.
std::vector<ProximityPair> proximity_pairs_brute_force(std::span<const Vec3> pos_a,
                                                       std::span<const Tri> tris_a,
                                                       std::span<const Vec3> pos_b,
                                                       std::span<const Tri> tris_b, double radius,
                                                       bool self);

struct RayHit {
  int triangle = -1;
  double t = 0.0;
  Vec3 barycentric;
  Vec3 point;
};

/// Nearest hit along origin + t*dir for t in [0, max_t]; dir need not be unit.
std::optional<RayHit> raycast(const Vec3& origin, const Vec3& dir, double max_t,
                              std::span<const Vec3> positions, const TriangleBVH& bvh);

/// Triangles whose geometry overlaps the box (exact SAT test).
std::vector<int> triangles_overlapping_box(const Box3& box, std::span<const Vec3> positions,
                                           const TriangleBVH& bvh);

} // namespace bolt
