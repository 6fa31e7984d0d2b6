#include "bolt/cloth_sim.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>
#include <unsupported/Eigen/AutoDiff>

#include "bolt/error.hpp"
#include "bolt/parallel.hpp"

namespace bolt {

void CollisionParams::validate() const {
  for (double c : {force_coefficient, damping_coefficient, friction_coefficient, eps_sdf}) {
    if (!(c >= 0.0)) throw ConfigError("collision coefficients must be >= 0");
  }
  if (!(velocity_damping >= 0.0 && velocity_damping <= 1.0)) {
    throw ConfigError("velocity damping must lie in [0, 1]");
  }
}

void SimParams::validate() const {
  if (!(frame_dt > 0.0)) throw ConfigError("frame dt must be > 0");
  if (substeps < 1) throw ConfigError("substeps must be >= 1");
  if (!(blowup_limit > 0.0)) throw ConfigError("blowup limit must be > 0");
  collision.validate();
}

void to_json(nlohmann::json& j, const SimParams& p) {
  j = {{"frame_dt", p.frame_dt},
       {"substeps", p.substeps},
       {"gravity", {p.gravity.x(), p.gravity.y(), p.gravity.z()}},
       {"blowup_limit", p.blowup_limit},
       {"collision",
        {{"force_coefficient", p.collision.force_coefficient},
         {"damping_coefficient", p.collision.damping_coefficient},
         {"friction_coefficient", p.collision.friction_coefficient},
         {"eps_sdf", p.collision.eps_sdf},
         {"velocity_damping", p.collision.velocity_damping},
         {"damping_per_substep", p.collision.damping_per_substep},
         {"self_collisions", p.collision.self_collisions}}}};
}

void from_json(const nlohmann::json& j, SimParams& p) {
  const SimParams d;
  p.frame_dt = j.value("frame_dt", d.frame_dt);
  p.substeps = j.value("substeps", d.substeps);
  if (j.contains("gravity")) {
    const auto g = j.at("gravity").get<std::vector<double>>();
    if (g.size() != 3) throw ConfigError("gravity needs three components");
    p.gravity = Vec3(g[0], g[1], g[2]);
  }
  p.blowup_limit = j.value("blowup_limit", d.blowup_limit);
  const nlohmann::json c = j.value("collision", nlohmann::json::object());
  p.collision.force_coefficient = c.value("force_coefficient", d.collision.force_coefficient);
  p.collision.damping_coefficient = c.value("damping_coefficient", d.collision.damping_coefficient);
  p.collision.friction_coefficient =
      c.value("friction_coefficient", d.collision.friction_coefficient);
  p.collision.eps_sdf = c.value("eps_sdf", d.collision.eps_sdf);
  p.collision.velocity_damping = c.value("velocity_damping", d.collision.velocity_damping);
  p.collision.damping_per_substep =
      c.value("damping_per_substep", d.collision.damping_per_substep);
  p.collision.self_collisions = c.value("self_collisions", d.collision.self_collisions);
}

TriMesh3 ClothState::mesh() const {
  TriMesh3 m;
  m.positions = x;
  m.triangles = triangles;
  return m;
}

namespace {

std::uint64_t ekey(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

} // namespace

ClothState make_cloth_state(const GarmentSheet& g) { return make_cloth_state(g, g.layout2d); }

ClothState make_cloth_state(const GarmentSheet& g, const PatternLayout2D& rest) {
  if (rest.triangles != g.mesh3d.triangles || rest.positions2d.size() != g.mesh3d.positions.size()) {
    throw ValidationError("rest layout does not match the garment triangulation");
  }
  ClothState s;
  const std::size_t n = g.mesh3d.positions.size();
  s.x = g.mesh3d.positions;
  s.v.assign(n, Vec3::Zero());
  s.mass.assign(n, 0.0);
  s.pinned.assign(n, 0);
  s.triangles = g.mesh3d.triangles;
  s.vertex_panel = rest.panel_id;
  s.dm_inv.resize(s.triangles.size());
  s.rest_area.resize(s.triangles.size());
  s.tri_material.resize(s.triangles.size());
  s.rest_curvature.assign(s.triangles.size(), Mat2::Zero());
  for (std::size_t t = 0; t < s.triangles.size(); ++t) {
    const Tri& f = s.triangles[t];
    Mat2 Dm;
    Dm.col(0) = rest.positions2d[f[1]] - rest.positions2d[f[0]];
    Dm.col(1) = rest.positions2d[f[2]] - rest.positions2d[f[0]];
    const double area = 0.5 * Dm.determinant();
    if (!(area > kMinTriangleArea)) {
      throw ValidationError("rest triangle " + std::to_string(t) + " is degenerate or flipped");
    }
    s.dm_inv[t] = Dm.inverse();
    s.rest_area[t] = area;
    s.tri_material[t] = g.material_for_panel(rest.panel_id[f[0]]);
    for (int v : f) s.mass[v] += s.tri_material[t].density * area / 3.0;
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (!(s.mass[v] > 0.0)) throw ValidationError("vertex " + std::to_string(v) + " has no mass");
  }
  s.neighbors = triangle_neighbors(s.triangles, n);
  s.seams = g.seams.vertex_group.size() == n || g.seams.pairs.empty()
                ? g.seams
                : build_seam_groups(g.seams.pairs, g.mesh3d);
  if (s.seams.vertex_group.size() != n) s.seams.vertex_group.assign(n, -1);
  s.last_normal.assign(n, Vec3::Zero());
  s.has_last_normal.assign(n, 0);

  // seam hinges: border edge (a1, a2) sewn to border edge (b1, b2)
  std::map<std::uint64_t, std::pair<int, int>> border; // edge -> (triangle, opposite vertex)
  std::map<std::uint64_t, int> count;
  for (const Tri& f : s.triangles) {
    for (int i = 0; i < 3; ++i) ++count[ekey(f[(i + 1) % 3], f[(i + 2) % 3])];
  }
  for (std::size_t t = 0; t < s.triangles.size(); ++t) {
    const Tri& f = s.triangles[t];
    for (int i = 0; i < 3; ++i) {
      const auto k = ekey(f[(i + 1) % 3], f[(i + 2) % 3]);
      if (count[k] == 1) border[k] = {static_cast<int>(t), f[i]};
    }
  }
  std::vector<std::vector<int>> partner(n);
  for (const auto& [a, b] : s.seams.pairs) {
    partner[a].push_back(b);
    partner[b].push_back(a);
  }
  for (const auto& [key, info] : border) {
    const int a1 = static_cast<int>(key >> 32);
    const int a2 = static_cast<int>(key & 0xffffffffu);
    std::set<std::uint64_t> seen;
    for (int b1 : partner[a1]) {
      for (int b2 : partner[a2]) {
        const auto kb = ekey(b1, b2);
        if (kb <= key || !border.count(kb) || !seen.insert(kb).second) continue;
        SeamHinge h;
        h.v = {a1, a2, info.second, border.at(kb).second};
        const MaterialParams& m = s.tri_material[info.first];
        h.stiffness = m.seam_bend_stiffness;
        h.damping = m.seam_bend_damping;
        h.rest_angle = hinge_angle(s, h);
        s.hinges.push_back(h);
      }
    }
  }
  s.bvh = TriangleBVH(s.x, s.triangles);
  return s;
}

void set_frozen_meshes(ClothState& s, const TriMesh3& frozen) {
  s.frozen = frozen;
  s.frozen_bvh = TriangleBVH(s.frozen.positions, s.frozen.triangles);
}

ForceResult stretch_force(const ClothState& s, std::size_t t) {
  const Tri& f = s.triangles[t];
  Mat32 Ds;
  Ds.col(0) = s.x[f[1]] - s.x[f[0]];
  Ds.col(1) = s.x[f[2]] - s.x[f[0]];
  const Mat32 F = Ds * s.dm_inv[t];
  const Vec3 fx = F.col(0);
  const Vec3 fy = F.col(1);
  const MaterialParams& m = s.tri_material[t];
  const double A = s.rest_area[t];
  const double lx = fx.norm();
  const double ly = fy.norm();
  const double c = fx.dot(fy);
  ForceResult r;
  r.energy = A * (0.5 * m.k_warp * (lx - 1.0) * (lx - 1.0) + 0.5 * m.k_weft * (ly - 1.0) * (ly - 1.0) +
                  0.5 * m.k_shear_stretch * c * c);
  Mat32 dF;
  dF.col(0) = A * (m.k_warp * (lx - 1.0) * fx / lx + m.k_shear_stretch * c * fy);
  dF.col(1) = A * (m.k_weft * (ly - 1.0) * fy / ly + m.k_shear_stretch * c * fx);
  const Mat32 dDs = dF * s.dm_inv[t].transpose();
  r.force[1] = -dDs.col(0);
  r.force[2] = -dDs.col(1);
  r.force[0] = dDs.col(0) + dDs.col(1);
  return r;
}

namespace {

// Slot layout of the bending stencil: 0..2 the triangle, 3 + i the vertex of
// neighbor i opposite the shared edge.
struct BendStencil {
  std::array<int, 6> vertex{-1, -1, -1, -1, -1, -1};
  std::array<std::array<int, 3>, 3> nbr_slots{};
  bool complete = false;
};

BendStencil bend_stencil(const ClothState& s, std::size_t t) {
  BendStencil st;
  const Tri& f = s.triangles[t];
  for (int i = 0; i < 3; ++i) st.vertex[i] = f[i];
  st.complete = true;
  for (int i = 0; i < 3; ++i) {
    const int nb = s.neighbors[t][i];
    if (nb < 0) {
      st.complete = false;
      continue;
    }
    const Tri& g = s.triangles[nb];
    for (int k = 0; k < 3; ++k) {
      int slot = -1;
      for (int a = 0; a < 3; ++a) {
        if (g[k] == f[a]) slot = a;
      }
      if (slot < 0) {
        st.vertex[3 + i] = g[k];
        slot = 3 + i;
      }
      st.nbr_slots[i][k] = slot;
    }
  }
  return st;
}

template <class T>
Eigen::Matrix<T, 2, 2> shape_operator_generic(const std::array<Eigen::Matrix<T, 3, 1>, 6>& p,
                                              const BendStencil& st, const Mat2& dminv) {
  using V = Eigen::Matrix<T, 3, 1>;
  const V e1 = p[1] - p[0];
  const V e2 = p[2] - p[0];
  V nt = e1.cross(e2);
  nt /= nt.norm();
  std::array<V, 3> n;
  for (int i = 0; i < 3; ++i) {
    const auto& q = st.nbr_slots[i];
    V nn = (p[q[1]] - p[q[0]]).cross(p[q[2]] - p[q[0]]);
    nn /= nn.norm();
    const V mid = nt + nn;
    n[i] = mid / mid.norm();
  }
  // normal differences along the two edges, from the mid-edge normals
  const V d1 = T(2.0) * (n[0] - n[1]);
  const V d2 = T(2.0) * (n[0] - n[2]);
  Eigen::Matrix<T, 2, 2> II;
  II(0, 0) = e1.dot(d1);
  II(1, 1) = e2.dot(d2);
  II(0, 1) = T(0.5) * (e1.dot(d2) + e2.dot(d1));
  II(1, 0) = II(0, 1);
  const Eigen::Matrix<T, 2, 2> D = dminv.cast<T>();
  return D.transpose() * II * D;
}

template <class T>
T bend_energy_generic(const std::array<Eigen::Matrix<T, 3, 1>, 6>& p, const BendStencil& st,
                      const Mat2& dminv, const Mat2& rest, double area, const MaterialParams& m) {
  const Eigen::Matrix<T, 2, 2> S = shape_operator_generic<T>(p, st, dminv);
  const T d00 = S(0, 0) - rest(0, 0);
  const T d11 = S(1, 1) - rest(1, 1);
  const T d10 = S(1, 0) - rest(1, 0);
  return T(0.5 * area) * (m.k_warp_bend * d00 * d00 + m.k_weft_bend * d11 * d11 +
                          m.k_shear_bend * d10 * d10);
}

template <class T>
T hinge_angle_generic(const Eigen::Matrix<T, 3, 1>& x0, const Eigen::Matrix<T, 3, 1>& x1,
                      const Eigen::Matrix<T, 3, 1>& oa, const Eigen::Matrix<T, 3, 1>& ob) {
  using V = Eigen::Matrix<T, 3, 1>;
  const V e = x1 - x0;
  V na = e.cross(oa - x0);
  V nb = (ob - x0).cross(e);
  na /= na.norm();
  nb /= nb.norm();
  const V eh = e / e.norm();
  using std::atan2;
  return atan2(na.cross(nb).dot(eh), na.dot(nb));
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a < 0.0) a += two_pi;
  return a - std::numbers::pi;
}

} // namespace

bool shape_operator(const ClothState& s, std::size_t t, Mat2& S) {
  const BendStencil st = bend_stencil(s, t);
  if (!st.complete) return false;
  std::array<Vec3, 6> p;
  for (int k = 0; k < 6; ++k) p[k] = s.x[st.vertex[k]];
  S = shape_operator_generic<double>(p, st, s.dm_inv[t]);
  return true;
}

BendResult bend_force(const ClothState& s, std::size_t t) {
  BendResult r;
  const BendStencil st = bend_stencil(s, t);
  r.vertices = st.vertex;
  for (auto& f : r.force) f = Vec3::Zero();
  // triangles on a border carry no bending energy
  if (!st.complete) return r;
  using AD = Eigen::AutoDiffScalar<Eigen::Matrix<double, 18, 1>>;
  std::array<Eigen::Matrix<AD, 3, 1>, 6> p;
  for (int k = 0; k < 6; ++k) {
    for (int d = 0; d < 3; ++d) p[k][d] = AD(s.x[st.vertex[k]][d], 18, 3 * k + d);
  }
  const AD e = bend_energy_generic<AD>(p, st, s.dm_inv[t], s.rest_curvature[t], s.rest_area[t],
                                       s.tri_material[t]);
  r.energy = e.value();
  for (int k = 0; k < 6; ++k) r.force[k] = -e.derivatives().segment<3>(3 * k);
  return r;
}

double hinge_angle(const ClothState& s, const SeamHinge& h) {
  return hinge_angle_generic<double>(s.x[h.v[0]], s.x[h.v[1]], s.x[h.v[2]], s.x[h.v[3]]);
}

HingeResult seam_bend_force(const ClothState& s, const SeamHinge& h) {
  using AD = Eigen::AutoDiffScalar<Eigen::Matrix<double, 12, 1>>;
  std::array<Eigen::Matrix<AD, 3, 1>, 4> p;
  for (int k = 0; k < 4; ++k) {
    for (int d = 0; d < 3; ++d) p[k][d] = AD(s.x[h.v[k]][d], 12, 3 * k + d);
  }
  const AD theta = hinge_angle_generic<AD>(p[0], p[1], p[2], p[3]);
  const Eigen::Matrix<double, 12, 1> grad = theta.derivatives();
  HingeResult r;
  r.angle = theta.value();
  const double d = wrap_angle(r.angle - h.rest_angle);
  r.energy = 0.5 * h.stiffness * d * d;
  double rate = 0.0;
  for (int k = 0; k < 4; ++k) rate += grad.segment<3>(3 * k).dot(s.v[h.v[k]]);
  const double scale = -(h.stiffness * d + h.damping * rate);
  for (int k = 0; k < 4; ++k) r.force[k] = scale * grad.segment<3>(3 * k);
  return r;
}

void enforce_seams(ClothState& s) {
  const SeamSpec& sp = s.seams;
  for (std::size_t g = 0; g < sp.groups.size(); ++g) {
    const auto& members = sp.groups[g];
    Vec3 center = Vec3::Zero();
    Vec3 vel = Vec3::Zero();
    for (int v : members) {
      center += s.x[v];
      vel += s.v[v];
    }
    center /= static_cast<double>(members.size());
    vel /= static_cast<double>(members.size());
    for (std::size_t k = 0; k < members.size(); ++k) {
      s.x[members[k]] = center + sp.offsets[g][k];
      s.v[members[k]] = vel;
    }
  }
}

namespace {

double inv_mass(const ClothState& s, int v) { return s.pinned[v] ? 0.0 : 1.0 / s.mass[v]; }

struct ContactResponse {
  double delta_n = 0.0;
  Vec3 delta_t = Vec3::Zero();
};

// Relative velocity change for a contact with penetration depth `depth`.
ContactResponse respond(const Vec3& vrel, const Vec3& n, double depth, double m_eff,
                        const CollisionParams& p, double dt) {
  ContactResponse r;
  const double vn = vrel.dot(n);
  const double damping =
      vn < 0.0 ? std::min(p.damping_coefficient * -vn * dt / m_eff, -vn) : 0.0;
  // elastic part capped so the pair separates by at most `depth` this substep
  const double elastic =
      std::min(p.force_coefficient * depth * dt / m_eff, std::max(0.0, depth / dt - vn - damping));
  r.delta_n = elastic + damping;
  if (r.delta_n <= 0.0) return r;
  const Vec3 vt = vrel - vn * n;
  const double vt_len = vt.norm();
  if (vt_len > 0.0) r.delta_t = -std::min(vt_len, p.friction_coefficient * r.delta_n) * vt / vt_len;
  return r;
}

bool seam_connected(const ClothState& s, const Tri& a, const Tri& b) {
  for (int va : a) {
    for (int vb : b) {
      if (va == vb || s.seams.same_group(va, vb)) return true;
    }
  }
  return false;
}

Vec3 contact_normal(const ProximityPair& pr, const std::array<Vec3, 3>& ta,
                    const std::array<Vec3, 3>& tb) {
  if (pr.distance > 1e-12) return (pr.point_a - pr.point_b) / pr.distance;
  Vec3 n = (tb[1] - tb[0]).cross(tb[2] - tb[0]).normalized();
  const Vec3 ca = (ta[0] + ta[1] + ta[2]) / 3.0;
  const Vec3 cb = (tb[0] + tb[1] + tb[2]) / 3.0;
  if ((ca - cb).dot(n) < 0.0) n = -n;
  return n;
}

} // namespace

ImpulseStats cloth_cloth_impulses(ClothState& s, const CollisionParams& p, double dt) {
  ImpulseStats st;
  if (s.triangles.empty()) return st;
  double radius = 0.0;
  for (const auto& m : s.tri_material) radius = std::max(radius, m.thickness);
  if (!(radius > 0.0)) return st;
  s.bvh.refit(s.x);

  auto corners = [](const std::vector<Vec3>& pos, const Tri& f) {
    return std::array<Vec3, 3>{pos[f[0]], pos[f[1]], pos[f[2]]};
  };

  if (p.self_collisions) {
    const auto pairs = proximity_pairs_self(s.bvh, s.x, radius);
    for (const ProximityPair& pr : pairs) {
      const Tri& fa = s.triangles[pr.tri_a];
      const Tri& fb = s.triangles[pr.tri_b];
      if (seam_connected(s, fa, fb)) continue;
      const double thick = std::max(s.tri_material[pr.tri_a].thickness, s.tri_material[pr.tri_b].thickness);
      const double depth = thick - pr.distance;
      if (depth <= 0.0) continue;
      double ima = 0.0, imb = 0.0;
      Vec3 va = Vec3::Zero(), vb = Vec3::Zero();
      for (int i = 0; i < 3; ++i) {
        ima += pr.bary_a[i] * pr.bary_a[i] * inv_mass(s, fa[i]);
        imb += pr.bary_b[i] * pr.bary_b[i] * inv_mass(s, fb[i]);
        va += pr.bary_a[i] * s.v[fa[i]];
        vb += pr.bary_b[i] * s.v[fb[i]];
      }
      if (ima + imb <= 0.0) continue;
      const double m_eff = 1.0 / (ima + imb);
      const Vec3 n = contact_normal(pr, corners(s.x, fa), corners(s.x, fb));
      const ContactResponse r = respond(va - vb, n, depth, m_eff, p, dt);
      if (r.delta_n <= 0.0) continue;
      const Vec3 I = m_eff * (r.delta_n * n + r.delta_t);
      std::array<int, 6> touched{fa[0], fa[1], fa[2], fb[0], fb[1], fb[2]};
      std::array<Vec3, 6> before;
      for (int k = 0; k < 6; ++k) before[k] = s.v[touched[k]];
      for (int i = 0; i < 3; ++i) {
        s.v[fa[i]] += pr.bary_a[i] * inv_mass(s, fa[i]) * I;
        s.v[fb[i]] -= pr.bary_b[i] * inv_mass(s, fb[i]) * I;
      }
      // vertices shared by the two triangles are excluded above, so each
      // touched vertex appears once
      for (int k = 0; k < 6; ++k) st.momentum_change += s.mass[touched[k]] * (s.v[touched[k]] - before[k]);
      st.impulse_magnitude += I.norm();
      st.max_tangential_ratio = std::max(st.max_tangential_ratio, r.delta_t.norm() / r.delta_n);
      ++st.contacts;
    }
  }

  if (!s.frozen.triangles.empty()) {
    const auto pairs = proximity_pairs(s.bvh, s.x, s.frozen_bvh, s.frozen.positions, radius);
    for (const ProximityPair& pr : pairs) {
      const Tri& fa = s.triangles[pr.tri_a];
      // frozen garments are oriented outward; cloth behind the face is pushed
      // out along the face normal
      const Tri& fb = s.frozen.triangles[pr.tri_b];
      const auto& fp = s.frozen.positions;
      const Vec3 nraw = (fp[fb[1]] - fp[fb[0]]).cross(fp[fb[2]] - fp[fb[0]]);
      if (nraw.squaredNorm() <= 0.0) continue;
      const Vec3 n = nraw.normalized();
      const double depth = s.tri_material[pr.tri_a].thickness - (pr.point_a - pr.point_b).dot(n);
      if (depth <= 0.0) continue;
      double ima = 0.0;
      Vec3 va = Vec3::Zero();
      for (int i = 0; i < 3; ++i) {
        ima += pr.bary_a[i] * pr.bary_a[i] * inv_mass(s, fa[i]);
        va += pr.bary_a[i] * s.v[fa[i]];
      }
      if (ima <= 0.0) continue;
      const double m_eff = 1.0 / ima;
      const ContactResponse r = respond(va, n, depth, m_eff, p, dt);
      if (r.delta_n <= 0.0) continue;
      const Vec3 I = m_eff * (r.delta_n * n + r.delta_t);
      for (int i = 0; i < 3; ++i) s.v[fa[i]] += pr.bary_a[i] * inv_mass(s, fa[i]) * I;
      ++st.contacts;
    }
  }
  return st;
}

ImpulseStats sdf_impulses(ClothState& s, const CollisionParams& p, double dt) {
  ImpulseStats st;
  if (!s.sdf) return st;
  int fallbacks = 0;
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    if (s.pinned[i]) continue;
    const SdfSample smp = sample(*s.sdf, s.x[i]);
    if (!(smp.value < 0.0)) continue;
    Vec3 n = smp.gradient;
    const double len = n.norm();
    if (len > 1e-12) {
      n /= len;
      s.last_normal[i] = n;
      s.has_last_normal[i] = 1;
    } else if (s.has_last_normal[i]) {
      n = s.last_normal[i];
      ++fallbacks;
    } else {
      ++fallbacks;
      continue;
    }
    const ContactResponse r = respond(s.v[i], n, -smp.value, s.mass[i], p, dt);
    if (r.delta_n <= 0.0) continue;
    s.v[i] += r.delta_n * n + r.delta_t;
    st.impulse_magnitude += s.mass[i] * (r.delta_n * n + r.delta_t).norm();
    st.max_tangential_ratio = std::max(st.max_tangential_ratio, r.delta_t.norm() / r.delta_n);
    ++st.contacts;
  }
  if (fallbacks > 0) {
    spdlog::warn("{} penetrating vertices had a zero SDF gradient; reused previous normals",
                 fallbacks);
  }
  return st;
}

std::vector<Vec3> total_forces(const ClothState& s, const SimParams& p) {
  const std::size_t nt = s.triangles.size();
  std::vector<ForceResult> stretch(nt);
  std::vector<BendResult> bend(nt);
  parallel_for(0, nt, [&](std::size_t t) {
    stretch[t] = stretch_force(s, t);
    bend[t] = bend_force(s, t);
  });
  std::vector<HingeResult> hinge(s.hinges.size());
  parallel_for(0, s.hinges.size(), [&](std::size_t h) { hinge[h] = seam_bend_force(s, s.hinges[h]); });

  std::vector<Vec3> F(s.x.size());
  for (std::size_t i = 0; i < F.size(); ++i) F[i] = s.mass[i] * p.gravity;
  for (std::size_t t = 0; t < nt; ++t) {
    for (int k = 0; k < 3; ++k) F[s.triangles[t][k]] += stretch[t].force[k];
    for (int k = 0; k < 6; ++k) {
      if (bend[t].vertices[k] >= 0) F[bend[t].vertices[k]] += bend[t].force[k];
    }
  }
  for (std::size_t h = 0; h < s.hinges.size(); ++h) {
    for (int k = 0; k < 4; ++k) F[s.hinges[h].v[k]] += hinge[h].force[k];
  }
  for (std::size_t i = 0; i < F.size(); ++i) {
    if (s.pinned[i]) F[i] = Vec3::Zero();
  }
  return F;
}

double kinetic_energy(const ClothState& s) {
  double e = 0.0;
  for (std::size_t i = 0; i < s.x.size(); ++i) e += 0.5 * s.mass[i] * s.v[i].squaredNorm();
  return e;
}

SubstepStats step(ClothState& s, double dt, const SimParams& p, bool end_of_frame) {
  if (!(dt > 0.0)) throw ConfigError("time step must be > 0");
  const std::vector<Vec3> F = total_forces(s, p);
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    if (!s.pinned[i]) s.v[i] += dt * F[i] / s.mass[i];
  }
  SubstepStats st;
  st.cloth = cloth_cloth_impulses(s, p.collision, dt);
  st.sdf = sdf_impulses(s, p.collision, dt);
  if (p.collision.damping_per_substep || end_of_frame) {
    const double keep = 1.0 - p.collision.velocity_damping;
    for (Vec3& v : s.v) v *= keep;
  }
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    if (!s.pinned[i]) s.x[i] += dt * s.v[i];
  }
  enforce_seams(s);
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    if (!s.x[i].allFinite() || !s.v[i].allFinite() || s.x[i].cwiseAbs().maxCoeff() > p.blowup_limit) {
      std::ostringstream os;
      os << "cloth simulation blew up at substep " << s.substeps_done << " (vertex " << i << ")";
      throw NumericalError(os.str());
    }
  }
  ++s.substeps_done;
  return st;
}

double max_penetration(const ClothState& s) {
  double worst = 0.0;
  if (!s.sdf) return worst;
  for (const Vec3& x : s.x) worst = std::max(worst, -sample(*s.sdf, x).value);
  return worst;
}

void to_json(nlohmann::json& j, const FrameTelemetry& t) {
  j = {{"frame", t.frame},
       {"kinetic_energy", t.kinetic_energy},
       {"max_penetration", t.max_penetration},
       {"cloth_contacts", t.cloth_contacts},
       {"sdf_contacts", t.sdf_contacts},
       {"momentum_error", t.momentum_error}};
}

FrameTelemetry simulate_frame(ClothState& s, const SimParams& p, int frame_index) {
  FrameTelemetry tel;
  tel.frame = frame_index;
  const double dt = p.substep_dt();
  for (int k = 0; k < p.substeps; ++k) {
    const SubstepStats st = step(s, dt, p, k + 1 == p.substeps);
    tel.cloth_contacts += st.cloth.contacts;
    tel.sdf_contacts += st.sdf.contacts;
    if (st.cloth.impulse_magnitude > 0.0) {
      tel.momentum_error = std::max(tel.momentum_error,
                                    st.cloth.momentum_change.norm() / st.cloth.impulse_magnitude);
    }
  }
  tel.kinetic_energy = kinetic_energy(s);
  tel.max_penetration = max_penetration(s);
  return tel;
}

} // namespace bolt
