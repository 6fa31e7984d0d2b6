#include "bolt/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "bolt/error.hpp"

namespace bolt {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Configuration: return "configuration";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::Io: return "io";
    case ErrorKind::Stalled: return "stalled";
  }
  return "unknown";
}

void TriMesh3::validate() const {
  const auto n = static_cast<int>(positions.size());
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    for (int v : triangles[t]) {
      if (v < 0 || v >= n) {
        std::ostringstream os;
        os << "triangle " << t << " references vertex " << v << " (mesh has " << n
           << " vertices)";
        throw ValidationError(os.str());
      }
    }
    if (triangle_area(t) <= kMinTriangleArea) {
      std::ostringstream os;
      os << "triangle " << t << " is degenerate (area <= 1e-12 cm^2)";
      throw ValidationError(os.str());
    }
  }
  for (const Vec3& p : positions) {
    if (!p.allFinite()) throw ValidationError("non-finite vertex position");
  }
  if (!normals.empty()) {
    if (normals.size() != positions.size()) {
      throw ValidationError("normal count does not match vertex count");
    }
    for (std::size_t v = 0; v < normals.size(); ++v) {
      if (std::abs(normals[v].norm() - 1.0) > 1e-6) {
        throw ValidationError("normal of vertex " + std::to_string(v) + " is not unit length");
      }
    }
  }
}

double TriMesh3::triangle_area(std::size_t t) const {
  const Tri& f = triangles[t];
  return 0.5 * (positions[f[1]] - positions[f[0]]).cross(positions[f[2]] - positions[f[0]]).norm();
}

Vec3 TriMesh3::triangle_normal(std::size_t t) const {
  const Tri& f = triangles[t];
  return (positions[f[1]] - positions[f[0]])
      .cross(positions[f[2]] - positions[f[0]])
      .normalized();
}

Box3 TriMesh3::bounds() const {
  Box3 box;
  box.setEmpty();
  for (const Vec3& p : positions) box.extend(p);
  return box;
}

std::vector<Vec3> area_weighted_normals(std::span<const Vec3> positions,
                                        std::span<const Tri> triangles) {
  std::vector<Vec3> normals(positions.size(), Vec3::Zero());
  for (const Tri& f : triangles) {
    // cross product magnitude is twice the area, so this is area weighting
    const Vec3 n = (positions[f[1]] - positions[f[0]]).cross(positions[f[2]] - positions[f[0]]);
    for (int v : f) normals[v] += n;
  }
  for (Vec3& n : normals) {
    const double len = n.norm();
    n = len > 0.0 ? Vec3(n / len) : Vec3::UnitZ();
  }
  return normals;
}

void ensure_normals(TriMesh3& mesh) {
  if (mesh.normals.size() != mesh.positions.size()) {
    mesh.normals = area_weighted_normals(mesh.positions, mesh.triangles);
  }
}

TriMesh3 concatenate(std::span<const TriMesh3> meshes) {
  TriMesh3 out;
  bool all_normals = !meshes.empty();
  for (const TriMesh3& m : meshes) all_normals = all_normals && m.normals.size() == m.positions.size();
  for (const TriMesh3& m : meshes) {
    const int base = static_cast<int>(out.positions.size());
    out.positions.insert(out.positions.end(), m.positions.begin(), m.positions.end());
    if (all_normals) out.normals.insert(out.normals.end(), m.normals.begin(), m.normals.end());
    for (const Tri& f : m.triangles) out.triangles.push_back({f[0] + base, f[1] + base, f[2] + base});
  }
  return out;
}

namespace {

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

} // namespace

std::vector<std::array<int, 3>> triangle_neighbors(std::span<const Tri> triangles,
                                                   std::size_t /*vertex_count*/) {
  // (triangle, local edge) per undirected edge
  std::unordered_map<std::uint64_t, std::vector<std::pair<int, int>>> edges;
  edges.reserve(triangles.size() * 2);
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const Tri& f = triangles[t];
    for (int i = 0; i < 3; ++i) {
      edges[edge_key(f[(i + 1) % 3], f[(i + 2) % 3])].emplace_back(static_cast<int>(t), i);
    }
  }
  std::vector<std::array<int, 3>> nbr(triangles.size(), {-1, -1, -1});
  for (const auto& [key, users] : edges) {
    if (users.size() != 2) continue;
    nbr[users[0].first][users[0].second] = users[1].first;
    nbr[users[1].first][users[1].second] = users[0].first;
  }
  return nbr;
}

std::vector<std::vector<int>> vertex_adjacency(std::span<const Tri> triangles,
                                               std::size_t vertex_count) {
  std::vector<std::vector<int>> adj(vertex_count);
  for (const Tri& f : triangles) {
    for (int i = 0; i < 3; ++i) {
      adj[f[i]].push_back(f[(i + 1) % 3]);
      adj[f[i]].push_back(f[(i + 2) % 3]);
    }
  }
  for (auto& list : adj) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return adj;
}

std::vector<std::vector<int>> border_neighbors(std::span<const Tri> triangles,
                                               std::size_t vertex_count) {
  std::unordered_map<std::uint64_t, int> count;
  count.reserve(triangles.size() * 2);
  for (const Tri& f : triangles) {
    for (int i = 0; i < 3; ++i) ++count[edge_key(f[i], f[(i + 1) % 3])];
  }
  std::vector<std::vector<int>> out(vertex_count);
  for (const Tri& f : triangles) {
    for (int i = 0; i < 3; ++i) {
      const int a = f[i];
      const int b = f[(i + 1) % 3];
      if (count[edge_key(a, b)] == 1) {
        out[a].push_back(b);
        out[b].push_back(a);
      }
    }
  }
  for (auto& list : out) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return out;
}

double PatternLayout2D::signed_area(std::size_t t) const {
  const Tri& f = triangles[t];
  const Vec2 e1 = positions2d[f[1]] - positions2d[f[0]];
  const Vec2 e2 = positions2d[f[2]] - positions2d[f[0]];
  return 0.5 * (e1.x() * e2.y() - e1.y() * e2.x());
}

int PatternLayout2D::panel_count() const {
  int m = -1;
  for (int p : panel_id) m = std::max(m, p);
  return m + 1;
}

void PatternLayout2D::validate(const TriMesh3& mesh3d) const {
  if (positions2d.size() != mesh3d.positions.size()) {
    throw ValidationError("2D layout vertex count differs from 3D mesh");
  }
  if (triangles != mesh3d.triangles) {
    throw ValidationError("2D layout triangulation differs from 3D mesh");
  }
  if (panel_id.size() != positions2d.size()) {
    throw ValidationError("panel_id must have one entry per vertex");
  }
  for (int p : panel_id) {
    if (p < 0) throw ValidationError("negative panel id");
  }
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const Tri& f = triangles[t];
    if (panel_id[f[0]] != panel_id[f[1]] || panel_id[f[0]] != panel_id[f[2]]) {
      throw ValidationError("triangle " + std::to_string(t) + " spans more than one panel");
    }
    if (signed_area(t) <= 0.0) {
      throw ValidationError("2D triangle " + std::to_string(t) +
                            " has non-positive signed area");
    }
  }
}

bool SeamSpec::same_group(int a, int b) const {
  if (a < 0 || b < 0 || a >= static_cast<int>(vertex_group.size()) ||
      b >= static_cast<int>(vertex_group.size())) {
    return false;
  }
  return vertex_group[a] >= 0 && vertex_group[a] == vertex_group[b];
}

SeamSpec build_seam_groups(std::span<const std::pair<int, int>> pairs, const TriMesh3& mesh) {
  const auto n = static_cast<int>(mesh.positions.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [a, b] = pairs[i];
    if (a < 0 || a >= n || b < 0 || b >= n) {
      std::ostringstream os;
      os << "seam pair " << i << " (" << a << ", " << b << ") is out of range for a mesh with "
         << n << " vertices";
      throw ValidationError(os.str());
    }
  }

  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  std::vector<char> on_seam(n, 0);
  for (const auto& [a, b] : pairs) {
    on_seam[a] = on_seam[b] = 1;
    const int ra = find(a);
    const int rb = find(b);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }

  SeamSpec spec;
  spec.pairs.assign(pairs.begin(), pairs.end());
  spec.vertex_group.assign(n, -1);
  std::vector<int> root_to_group(n, -1);
  // Ascending vertex order makes groups ordered by smallest member and
  // independent of the order of the pair list.
  for (int v = 0; v < n; ++v) {
    if (!on_seam[v]) continue;
    const int r = find(v);
    if (root_to_group[r] < 0) {
      root_to_group[r] = static_cast<int>(spec.groups.size());
      spec.groups.emplace_back();
    }
    spec.groups[root_to_group[r]].push_back(v);
    spec.vertex_group[v] = root_to_group[r];
  }
  spec.offsets.resize(spec.groups.size());
  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    Vec3 center = Vec3::Zero();
    for (int v : spec.groups[g]) center += mesh.positions[v];
    center /= static_cast<double>(spec.groups[g].size());
    for (int v : spec.groups[g]) spec.offsets[g].push_back(mesh.positions[v] - center);
  }
  return spec;
}

void MaterialParams::validate() const {
  for (double k : {k_warp, k_weft, k_shear_stretch, k_warp_bend, k_weft_bend, k_shear_bend,
                   seam_bend_stiffness, seam_bend_damping, thickness}) {
    if (!(k >= 0.0)) throw ValidationError("material stiffness values must be >= 0");
  }
  if (!(density > 0.0)) throw ValidationError("material density must be > 0");
}

void GarmentSheet::validate() const {
  mesh3d.validate();
  layout2d.validate(mesh3d);
  if (layer < 0) throw ValidationError("garment '" + name + "' has a negative layer");
  const int panels = layout2d.panel_count();
  if (static_cast<int>(materials.size()) < panels) {
    throw ValidationError("garment '" + name + "' is missing materials for some panels");
  }
  for (const MaterialParams& m : materials) m.validate();
  if (!panel_semantics.empty() && static_cast<int>(panel_semantics.size()) < panels) {
    throw ValidationError("garment '" + name + "' is missing semantic tags for some panels");
  }
  if (seams.vertex_group.size() != mesh3d.positions.size() && !seams.pairs.empty()) {
    throw ValidationError("garment '" + name + "' seam groups are not built for this mesh");
  }
}

const MaterialParams& GarmentSheet::material_for_panel(int panel) const {
  if (panel < 0 || panel >= static_cast<int>(materials.size())) {
    throw ValidationError("no material for panel " + std::to_string(panel));
  }
  return materials[panel];
}

} // namespace bolt
