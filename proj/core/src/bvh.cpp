#include "bolt/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bolt/sdf.hpp"

namespace bolt {

namespace {

double surface_area(const Box3& b) {
  if (b.isEmpty()) return 0.0;
  const Vec3 s = b.sizes();
  return 2.0 * (s.x() * s.y() + s.y() * s.z() + s.z() * s.x());
}

} // namespace

TriangleBVH::TriangleBVH(std::span<const Vec3> positions, std::span<const Tri> triangles,
                         int leaf_size)
    : tris_(triangles.begin(), triangles.end()), leaf_size_(std::max(1, leaf_size)) {
  build(positions);
}

void TriangleBVH::compute_triangle_boxes(std::span<const Vec3> positions) {
  tri_boxes_.resize(tris_.size());
  for (std::size_t t = 0; t < tris_.size(); ++t) {
    Box3 b;
    b.setEmpty();
    for (int v : tris_[t]) b.extend(positions[v]);
    tri_boxes_[t] = b;
  }
}

void TriangleBVH::build(std::span<const Vec3> positions) {
  nodes_.clear();
  order_.resize(tris_.size());
  std::iota(order_.begin(), order_.end(), 0);
  compute_triangle_boxes(positions);
  if (tris_.empty()) {
    built_sah_ = 0.0;
    return;
  }
  std::vector<Vec3> centroids(tris_.size());
  for (std::size_t t = 0; t < tris_.size(); ++t) centroids[t] = tri_boxes_[t].center();
  nodes_.reserve(2 * tris_.size() / leaf_size_ + 2);
  build_node(0, static_cast<int>(tris_.size()), centroids);
  built_sah_ = sah_cost();
}

int TriangleBVH::build_node(int first, int count, std::vector<Vec3>& centroids) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Box3 box;
  box.setEmpty();
  Box3 cbox;
  cbox.setEmpty();
  for (int i = first; i < first + count; ++i) {
    box.extend(tri_boxes_[order_[i]]);
    cbox.extend(centroids[order_[i]]);
  }
  nodes_[index].box = box;
  if (count <= leaf_size_) {
    nodes_[index].first = first;
    nodes_[index].count = count;
    return index;
  }
  int axis = 0;
  const Vec3 extent = cbox.sizes();
  if (extent.y() > extent[axis]) axis = 1;
  if (extent.z() > extent[axis]) axis = 2;
  const int mid = first + count / 2;
  std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                   [&](int a, int b) {
                     if (centroids[a][axis] != centroids[b][axis]) {
                       return centroids[a][axis] < centroids[b][axis];
                     }
                     return a < b;
                   });
  const int left = build_node(first, mid - first, centroids);
  const int right = build_node(mid, first + count - mid, centroids);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

double TriangleBVH::sah_cost() const {
  if (nodes_.empty()) return 0.0;
  const double root_area = std::max(surface_area(nodes_[0].box), 1e-300);
  double cost = 0.0;
  for (const Node& n : nodes_) {
    const double rel = surface_area(n.box) / root_area;
    cost += n.is_leaf() ? rel * n.count : rel;
  }
  return cost;
}

bool TriangleBVH::refit(std::span<const Vec3> positions) {
  compute_triangle_boxes(positions);
  // Children always have larger indices than their parent.
  for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
    Node& n = nodes_[i];
    Box3 box;
    box.setEmpty();
    if (n.is_leaf()) {
      for (int k = 0; k < n.count; ++k) box.extend(tri_boxes_[order_[n.first + k]]);
    } else {
      box.extend(nodes_[n.left].box);
      box.extend(nodes_[n.right].box);
    }
    n.box = box;
  }
  if (sah_cost() > 4.0 * built_sah_) {
    build(positions);
    return true;
  }
  return false;
}

ClosestPoint closest_point_unsigned(const Vec3& query, std::span<const Vec3> positions,
                                    const TriangleBVH& bvh, int hint) {
  ClosestPoint best;
  double best_sq = std::numeric_limits<double>::infinity();
  const auto tris = bvh.triangles();
  auto consider = [&](int t) {
    const Tri& f = tris[t];
    const auto r = geom::closest_point_triangle(query, positions[f[0]], positions[f[1]],
                                                positions[f[2]]);
    if (r.squared_distance < best_sq ||
        (r.squared_distance == best_sq && t < best.triangle)) {
      best_sq = r.squared_distance;
      best.point = r.point;
      best.barycentric = r.barycentric;
      best.triangle = t;
    }
  };
  double bound = std::numeric_limits<double>::infinity();
  if (hint >= 0 && hint < static_cast<int>(tris.size())) {
    const Tri& f = tris[hint];
    bound = geom::closest_point_triangle(query, positions[f[0]], positions[f[1]], positions[f[2]])
                .squared_distance;
  }

  const auto& nodes = bvh.nodes();
  if (nodes.empty()) return best;
  struct Item {
    int node;
    double d;
  };
  Item stack[128];
  int top = 0;
  stack[top++] = {0, geom::squared_distance_point_box(query, nodes[0].box)};
  while (top > 0) {
    const Item it = stack[--top];
    if (it.d > best_sq || it.d > bound) continue;
    const auto& node = nodes[it.node];
    if (node.is_leaf()) {
      for (int i = 0; i < node.count; ++i) consider(bvh.leaf_order()[node.first + i]);
      continue;
    }
    const double dl = geom::squared_distance_point_box(query, nodes[node.left].box);
    const double dr = geom::squared_distance_point_box(query, nodes[node.right].box);
    // push the farther child first so the nearer one is visited first
    if (dl <= dr) {
      stack[top++] = {node.right, dr};
      stack[top++] = {node.left, dl};
    } else {
      stack[top++] = {node.left, dl};
      stack[top++] = {node.right, dr};
    }
  }
  best.distance = std::sqrt(best_sq);
  return best;
}

ClosestPoint closest_point_on_mesh(const Vec3& query, const TriMesh3& mesh, const TriangleBVH& bvh) {
  ClosestPoint cp = closest_point_unsigned(query, mesh.positions, bvh);
  cp.side = winding_number(query, mesh) >= 0.5 ? Side::Inside : Side::Outside;
  return cp;
}

namespace {

ProximityPair make_pair_result(int ta, int tb, const geom::TriangleTriangleResult& r) {
  ProximityPair p;
  p.tri_a = ta;
  p.tri_b = tb;
  p.point_a = r.point_a;
  p.point_b = r.point_b;
  p.bary_a = r.bary_a;
  p.bary_b = r.bary_b;
  p.distance = r.distance;
  return p;
}

std::array<Vec3, 3> corners(std::span<const Vec3> pos, const Tri& f) {
  return {pos[f[0]], pos[f[1]], pos[f[2]]};
}

void sort_pairs(std::vector<ProximityPair>& pairs) {
  std::sort(pairs.begin(), pairs.end(), [](const ProximityPair& a, const ProximityPair& b) {
    return a.tri_a != b.tri_a ? a.tri_a < b.tri_a : a.tri_b < b.tri_b;
  });
}

} // namespace

std::vector<ProximityPair> proximity_pairs(const TriangleBVH& bvh_a, std::span<const Vec3> pos_a,
                                           const TriangleBVH& bvh_b, std::span<const Vec3> pos_b,
                                           double radius) {
  std::vector<ProximityPair> out;
  if (bvh_a.empty() || bvh_b.empty()) return out;
  const double r2 = radius * radius;
  const auto& na = bvh_a.nodes();
  const auto& nb = bvh_b.nodes();
  std::vector<std::pair<int, int>> stack;
  stack.emplace_back(0, 0);
  while (!stack.empty()) {
    const auto [ia, ib] = stack.back();
    stack.pop_back();
    const auto& a = na[ia];
    const auto& b = nb[ib];
    if (geom::squared_distance_box_box(a.box, b.box) > r2) continue;
    if (a.is_leaf() && b.is_leaf()) {
      for (int i = 0; i < a.count; ++i) {
        const int ta = bvh_a.leaf_order()[a.first + i];
        for (int j = 0; j < b.count; ++j) {
          const int tb = bvh_b.leaf_order()[b.first + j];
          if (geom::squared_distance_box_box(bvh_a.triangle_box(ta), bvh_b.triangle_box(tb)) > r2) {
            continue;
          }
          const auto r = geom::triangle_triangle_distance(corners(pos_a, bvh_a.triangles()[ta]),
                                                          corners(pos_b, bvh_b.triangles()[tb]));
          if (r.distance <= radius) out.push_back(make_pair_result(ta, tb, r));
        }
      }
    } else if (b.is_leaf() || (!a.is_leaf() && a.box.volume() >= b.box.volume())) {
      stack.emplace_back(a.left, ib);
      stack.emplace_back(a.right, ib);
    } else {
      stack.emplace_back(ia, b.left);
      stack.emplace_back(ia, b.right);
    }
  }
  sort_pairs(out);
  return out;
}

std::vector<ProximityPair> proximity_pairs_self(const TriangleBVH& bvh,
                                                std::span<const Vec3> positions, double radius) {
  std::vector<ProximityPair> out;
  if (bvh.empty()) return out;
  const double r2 = radius * radius;
  const auto& nodes = bvh.nodes();
  std::vector<std::pair<int, int>> stack;
  stack.emplace_back(0, 0);
  while (!stack.empty()) {
    const auto [ia, ib] = stack.back();
    stack.pop_back();
    const auto& a = nodes[ia];
    const auto& b = nodes[ib];
    if (ia != ib && geom::squared_distance_box_box(a.box, b.box) > r2) continue;
    if (ia == ib) {
      if (a.is_leaf()) {
        for (int i = 0; i < a.count; ++i) {
          for (int j = i + 1; j < a.count; ++j) {
            int ta = bvh.leaf_order()[a.first + i];
            int tb = bvh.leaf_order()[a.first + j];
            if (ta > tb) std::swap(ta, tb);
            if (geom::squared_distance_box_box(bvh.triangle_box(ta), bvh.triangle_box(tb)) > r2) {
              continue;
            }
            const auto r = geom::triangle_triangle_distance(corners(positions, bvh.triangles()[ta]),
                                                            corners(positions, bvh.triangles()[tb]));
            if (r.distance <= radius) out.push_back(make_pair_result(ta, tb, r));
          }
        }
      } else {
        stack.emplace_back(a.left, a.left);
        stack.emplace_back(a.right, a.right);
        stack.emplace_back(a.left, a.right);
      }
      continue;
    }
    if (a.is_leaf() && b.is_leaf()) {
      for (int i = 0; i < a.count; ++i) {
        for (int j = 0; j < b.count; ++j) {
          int ta = bvh.leaf_order()[a.first + i];
          int tb = bvh.leaf_order()[b.first + j];
          if (geom::squared_distance_box_box(bvh.triangle_box(ta), bvh.triangle_box(tb)) > r2) {
            continue;
          }
          if (ta > tb) std::swap(ta, tb);
          const auto r = geom::triangle_triangle_distance(corners(positions, bvh.triangles()[ta]),
                                                          corners(positions, bvh.triangles()[tb]));
          if (r.distance <= radius) out.push_back(make_pair_result(ta, tb, r));
        }
      }
    } else if (b.is_leaf() || (!a.is_leaf() && a.box.volume() >= b.box.volume())) {
      stack.emplace_back(a.left, ib);
      stack.emplace_back(a.right, ib);
    } else {
      stack.emplace_back(ia, b.left);
      stack.emplace_back(ia, b.right);
    }
  }
  sort_pairs(out);
  return out;
}

std::vector<ProximityPair> proximity_pairs_brute_force(std::span<const Vec3> pos_a,
                                                       std::span<const Tri> tris_a,
                                                       std::span<const Vec3> pos_b,
                                                       std::span<const Tri> tris_b, double radius,
                                                       bool self) {
  std::vector<ProximityPair> out;
  for (std::size_t i = 0; i < tris_a.size(); ++i) {
    for (std::size_t j = self ? i + 1 : 0; j < tris_b.size(); ++j) {
      const auto r =
          geom::triangle_triangle_distance(corners(pos_a, tris_a[i]), corners(pos_b, tris_b[j]));
      if (r.distance <= radius) {
        out.push_back(make_pair_result(static_cast<int>(i), static_cast<int>(j), r));
      }
    }
  }
  return out;
}

std::optional<RayHit> raycast(const Vec3& origin, const Vec3& dir, double max_t,
                              std::span<const Vec3> positions, const TriangleBVH& bvh) {
  std::optional<RayHit> best;
  double best_t = max_t;
  const Vec3 inv(1.0 / dir.x(), 1.0 / dir.y(), 1.0 / dir.z());
  auto slab = [&](const Box3& box) {
    double t0 = 0.0;
    double t1 = best_t;
    for (int k = 0; k < 3; ++k) {
      if (dir[k] == 0.0) {
        if (origin[k] < box.min()[k] || origin[k] > box.max()[k]) return false;
        continue;
      }
      double a = (box.min()[k] - origin[k]) * inv[k];
      double b = (box.max()[k] - origin[k]) * inv[k];
      if (a > b) std::swap(a, b);
      t0 = std::max(t0, a);
      t1 = std::min(t1, b);
      if (t0 > t1) return false;
    }
    return true;
  };
  bvh.traverse(slab, [&](int t) {
    const Tri& f = bvh.triangles()[t];
    auto hit = geom::ray_triangle(origin, dir, positions[f[0]], positions[f[1]], positions[f[2]],
                                  0.0, best_t);
    if (!hit) return;
    if (!best || hit->t < best_t || (hit->t == best_t && t < best->triangle)) {
      best_t = hit->t;
      RayHit h;
      h.triangle = t;
      h.t = hit->t;
      h.barycentric = hit->barycentric;
      h.point = origin + hit->t * dir;
      best = h;
    }
  });
  return best;
}

std::vector<int> triangles_overlapping_box(const Box3& box, std::span<const Vec3> positions,
                                           const TriangleBVH& bvh) {
  std::vector<int> out;
  bvh.traverse([&](const Box3& b) { return b.intersects(box); },
               [&](int t) {
                 const Tri& f = bvh.triangles()[t];
                 if (geom::box_triangle_overlap(box, positions[f[0]], positions[f[1]],
                                                positions[f[2]])) {
                   out.push_back(t);
                 }
               });
  std::sort(out.begin(), out.end());
  return out;
}

} // namespace bolt
