#include "bolt/sdf.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "bolt/bvh.hpp"
#include "bolt/error.hpp"
#include "bolt/geometry.hpp"
#include "bolt/parallel.hpp"

namespace bolt {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Solid angle sum; returns false when the query lies on a triangle.
bool try_solid_angle_sum(const Vec3& q, std::span<const Vec3> pos, std::span<const Tri> tris,
                         double& sum) {
  sum = 0.0;
  for (const Tri& f : tris) {
    const Vec3 ra = pos[f[0]] - q;
    const Vec3 rb = pos[f[1]] - q;
    const Vec3 rc = pos[f[2]] - q;
    const double la = ra.norm();
    const double lb = rb.norm();
    const double lc = rc.norm();
    const double numer = ra.dot(rb.cross(rc));
    const double denom = la * lb * lc + ra.dot(rb) * lc + ra.dot(rc) * lb + rb.dot(rc) * la;
    if (numer == 0.0 && denom <= 0.0) return false;
    sum += 2.0 * std::atan2(numer, denom);
  }
  return true;
}

double winding_of(const Vec3& query, std::span<const Vec3> pos, std::span<const Tri> tris) {
  double sum = 0.0;
  Vec3 q = query;
  const Vec3 nudge = Vec3(0.5773502691896258, 0.5773502691896257, 0.5773502691896259) * 1e-9;
  for (int attempt = 0; attempt < 4; ++attempt) {
    if (try_solid_angle_sum(q, pos, tris, sum)) return sum / kFourPi;
    q += nudge;
  }
  return sum / kFourPi;
}

} // namespace

double winding_number(const Vec3& query, const TriMesh3& mesh) {
  return winding_of(query, mesh.positions, mesh.triangles);
}

Box3 GridSpec::bounds() const {
  const Vec3 far = origin + cell * Vec3(dims[0] - 1, dims[1] - 1, dims[2] - 1);
  return Box3(origin, far);
}

GridSpec grid_for_bounds(const Box3& box, double margin, int max_nodes) {
  if (box.isEmpty()) throw ConfigError("cannot build a grid over empty bounds");
  if (max_nodes < 2) throw ConfigError("grid needs at least 2 nodes per axis");
  const Vec3 lo = box.min() - Vec3::Constant(margin);
  const Vec3 hi = box.max() + Vec3::Constant(margin);
  const Vec3 extent = hi - lo;
  const double longest = extent.maxCoeff();
  GridSpec g;
  g.cell = longest / (max_nodes - 1);
  g.origin = lo;
  for (int k = 0; k < 3; ++k) {
    g.dims[k] = std::clamp(static_cast<int>(std::ceil(extent[k] / g.cell - 1e-9)) + 1, 2, max_nodes);
  }
  return g;
}

namespace {

// Edge function of (p - P) against edge P->Q in the (y, z) projection,
// evaluated with the vertices in canonical (index) order so that a shared edge
// gives exactly opposite values in its two triangles. Zeros are resolved by
// the symbolic perturbation (y + d, z + d^2).
int edge_sign(const Vec3& P, int ip, const Vec3& Q, int iq, double y, double z, double& value) {
  const bool flip = ip > iq;
  const Vec3& A = flip ? Q : P;
  const Vec3& B = flip ? P : Q;
  const double a = B.y() - A.y();
  const double b = B.z() - A.z();
  double e = a * (z - A.z()) - b * (y - A.y());
  int s = 0;
  if (e > 0.0) {
    s = 1;
  } else if (e < 0.0) {
    s = -1;
  } else if (b != 0.0) {
    s = b < 0.0 ? 1 : -1;
  } else if (a != 0.0) {
    s = a > 0.0 ? 1 : -1;
  }
  if (flip) {
    s = -s;
    e = -e;
  }
  value = e;
  return s;
}

struct Crossing {
  double x;
  int sign;
};

} // namespace

namespace {

// Mesh closed by a cap fan over its boundary chain. Winding numbers of the
// closed surface are integers counted by signed crossings along x-lines; the
// cap's own (fractional) winding is subtracted to recover the open mesh's.
class CappedSurface {
public:
  explicit CappedSurface(const TriMesh3& mesh) : pos_(mesh.positions), closed_(mesh.triangles) {
    std::map<std::pair<int, int>, int> net;
    for (const Tri& f : mesh.triangles) {
      for (int i = 0; i < 3; ++i) {
        const int a = f[i];
        const int b = f[(i + 1) % 3];
        if (a < b) {
          ++net[{a, b}];
        } else {
          --net[{b, a}];
        }
      }
    }
    Vec3 apex = Vec3::Zero();
    int boundary_vertices = 0;
    for (const auto& [e, n] : net) {
      if (n == 0) continue;
      apex += pos_[e.first] + pos_[e.second];
      boundary_vertices += 2;
    }
    if (boundary_vertices > 0) {
      apex /= boundary_vertices;
      const int c = static_cast<int>(pos_.size());
      pos_.push_back(apex);
      for (const auto& [e, n] : net) {
        // boundary edge a->b (n > 0) is closed by the reversed cap triangle
        for (int k = 0; k < std::abs(n); ++k) {
          cap_.push_back(n > 0 ? Tri{e.second, e.first, c} : Tri{e.first, e.second, c});
        }
      }
      closed_.insert(closed_.end(), cap_.begin(), cap_.end());
    }
    bvh_ = TriangleBVH(pos_, closed_);
  }

  // Signed crossings of the line (*, y, z), sorted by x, with running sums.
  void line(double y, double z, std::vector<double>& xs, std::vector<int>& prefix) const {
    std::vector<Crossing> hits;
    bvh_.traverse(
        [&](const Box3& b) {
          return y >= b.min().y() && y <= b.max().y() && z >= b.min().z() && z <= b.max().z();
        },
        [&](int t) {
          const Tri& f = closed_[t];
          double e0 = 0.0, e1 = 0.0, e2 = 0.0;
          const int s2 = edge_sign(pos_[f[0]], f[0], pos_[f[1]], f[1], y, z, e2);
          const int s0 = edge_sign(pos_[f[1]], f[1], pos_[f[2]], f[2], y, z, e0);
          const int s1 = edge_sign(pos_[f[2]], f[2], pos_[f[0]], f[0], y, z, e1);
          if (s0 == 0 || s0 != s1 || s1 != s2) return;
          const double wsum = e0 + e1 + e2;
          double x;
          if (std::abs(wsum) > 0.0) {
            x = (e0 * pos_[f[0]].x() + e1 * pos_[f[1]].x() + e2 * pos_[f[2]].x()) / wsum;
          } else {
            x = (pos_[f[0]].x() + pos_[f[1]].x() + pos_[f[2]].x()) / 3.0;
          }
          // entering through a face whose normal points to -x adds one
          hits.push_back({x, -s0});
        });
    std::sort(hits.begin(), hits.end(), [](const Crossing& a, const Crossing& b) {
      return a.x != b.x ? a.x < b.x : a.sign < b.sign;
    });
    xs.resize(hits.size());
    prefix.resize(hits.size() + 1);
    prefix[0] = 0;
    for (std::size_t h = 0; h < hits.size(); ++h) {
      xs[h] = hits[h].x;
      prefix[h + 1] = prefix[h] + hits[h].sign;
    }
  }

  static int count_below(double x, const std::vector<double>& xs, const std::vector<int>& prefix) {
    const auto it = std::lower_bound(xs.begin(), xs.end(), x);
    return prefix[static_cast<std::size_t>(it - xs.begin())];
  }

  double cap_winding(const Vec3& q) const {
    return cap_.empty() ? 0.0 : winding_of(q, pos_, cap_);
  }

private:
  std::vector<Vec3> pos_;
  std::vector<Tri> closed_;
  std::vector<Tri> cap_;
  TriangleBVH bvh_;
};

} // namespace

std::vector<double> winding_numbers_on_grid(const TriMesh3& mesh, const GridSpec& grid) {
  const CappedSurface surface(mesh);
  std::vector<double> result(grid.node_count(), 0.0);
  const int nx = grid.dims[0];
  const int nz = grid.dims[2];
  parallel_for(0, static_cast<std::size_t>(grid.dims[1]) * nz, [&](std::size_t line) {
    const int j = static_cast<int>(line / nz);
    const int k = static_cast<int>(line % nz);
    std::vector<double> xs;
    std::vector<int> prefix;
    surface.line(grid.origin.y() + grid.cell * j, grid.origin.z() + grid.cell * k, xs, prefix);
    for (int i = 0; i < nx; ++i) {
      const Vec3 q = grid.node(i, j, k);
      result[grid.index(i, j, k)] =
          CappedSurface::count_below(q.x(), xs, prefix) - surface.cap_winding(q);
    }
  });
  return result;
}

std::vector<double> winding_numbers_at(const TriMesh3& mesh, std::span<const Vec3> points) {
  const CappedSurface surface(mesh);
  // points sharing a (y, z) line share one crossing sweep
  std::map<std::pair<double, double>, std::vector<std::size_t>> lines;
  for (std::size_t n = 0; n < points.size(); ++n) lines[{points[n].y(), points[n].z()}].push_back(n);
  std::vector<const std::pair<const std::pair<double, double>, std::vector<std::size_t>>*> order;
  order.reserve(lines.size());
  for (const auto& entry : lines) order.push_back(&entry);
  std::vector<double> result(points.size(), 0.0);
  parallel_for(0, order.size(), [&](std::size_t l) {
    const auto& [yz, members] = *order[l];
    std::vector<double> xs;
    std::vector<int> prefix;
    surface.line(yz.first, yz.second, xs, prefix);
    for (std::size_t n : members) {
      result[n] = CappedSurface::count_below(points[n].x(), xs, prefix) -
                  surface.cap_winding(points[n]);
    }
  });
  return result;
}

SampledSDF build_sdf(const TriMesh3& mesh, const GridSpec& grid, double winding_threshold) {
  if (mesh.triangles.empty()) throw ConfigError("cannot build an SDF of an empty mesh");
  const Box3 need = mesh.bounds();
  const Box3 have = grid.bounds();
  const double margin = 2.0 * grid.cell;
  const Box3 need_margin(need.min() - Vec3::Constant(margin), need.max() + Vec3::Constant(margin));
  if (!have.contains(need_margin)) {
    std::ostringstream os;
    os << "SDF grid does not cover the mesh; required bounds ["
       << need_margin.min().transpose() << "] to [" << need_margin.max().transpose() << "]";
    throw ConfigError(os.str());
  }

  SampledSDF sdf;
  sdf.grid = grid;
  sdf.winding_threshold = winding_threshold;
  sdf.values = winding_numbers_on_grid(mesh, grid);

  const TriangleBVH bvh(mesh);
  const int ny = grid.dims[1];
  const int nz = grid.dims[2];
  parallel_for(0, static_cast<std::size_t>(grid.dims[0]) * ny, [&](std::size_t row) {
    const int i = static_cast<int>(row / ny);
    const int j = static_cast<int>(row % ny);
    int hint = -1;
    for (int k = 0; k < nz; ++k) {
      const auto cp = closest_point_unsigned(grid.node(i, j, k), mesh.positions, bvh, hint);
      hint = cp.triangle;
      double& v = sdf.values[grid.index(i, j, k)];
      v = v > winding_threshold ? -cp.distance : cp.distance;
    }
  });
  return sdf;
}

SampledSDF empty_sdf(const GridSpec& grid) {
  SampledSDF sdf;
  sdf.grid = grid;
  sdf.values.assign(grid.node_count(), kInf);
  return sdf;
}

SampledSDF resample(const SampledSDF& field, const GridSpec& grid) {
  SampledSDF out;
  out.grid = grid;
  out.winding_threshold = field.winding_threshold;
  out.offset_applied = field.offset_applied;
  out.values.resize(grid.node_count());
  const Box3 box = field.grid.bounds();
  for (int i = 0; i < grid.dims[0]; ++i) {
    for (int j = 0; j < grid.dims[1]; ++j) {
      for (int k = 0; k < grid.dims[2]; ++k) {
        const Vec3 p = grid.node(i, j, k);
        const SdfSample s = sample(field, p);
        // outside the source grid: distance to the box is a lower bound on the
        // extra distance, outside being positive
        const double outside = std::sqrt(geom::squared_distance_point_box(p, box));
        out.values[grid.index(i, j, k)] = s.value + outside;
      }
    }
  }
  return out;
}

SampledSDF sdf_union(const SampledSDF& a, const SampledSDF& b, double eps) {
  if (a.grid.node_count() == 0) throw ConfigError("sdf_union: first operand has no grid");
  const SampledSDF* rhs = &b;
  SampledSDF resampled;
  if (!(a.grid == b.grid)) {
    if (b.grid.node_count() == 0) throw ConfigError("sdf_union: incompatible grids");
    resampled = resample(b, a.grid);
    rhs = &resampled;
  }
  SampledSDF out;
  out.grid = a.grid;
  out.winding_threshold = a.winding_threshold;
  out.offset_applied = std::max(a.offset_applied, b.offset_applied) + eps;
  out.values.resize(a.values.size());
  for (std::size_t n = 0; n < a.values.size(); ++n) {
    out.values[n] = std::min(a.values[n], rhs->values[n]) - eps;
  }
  return out;
}

namespace {

double trilinear(const SampledSDF& f, const Vec3& p, bool& clamped) {
  const GridSpec& g = f.grid;
  Vec3 u = (p - g.origin) / g.cell;
  std::array<int, 3> base{};
  Vec3 t;
  for (int k = 0; k < 3; ++k) {
    const double hi = g.dims[k] - 1;
    if (u[k] < 0.0 || u[k] > hi) {
      clamped = true;
      u[k] = std::clamp(u[k], 0.0, hi);
    }
    base[k] = std::min(static_cast<int>(std::floor(u[k])), g.dims[k] - 2);
    t[k] = u[k] - base[k];
  }
  double value = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int di = c >> 2 & 1;
    const int dj = c >> 1 & 1;
    const int dk = c & 1;
    const double w = (di ? t[0] : 1.0 - t[0]) * (dj ? t[1] : 1.0 - t[1]) * (dk ? t[2] : 1.0 - t[2]);
    if (w == 0.0) continue;
    const double v = f.at(base[0] + di, base[1] + dj, base[2] + dk);
    if (std::isinf(v)) return v;
    value += w * v;
  }
  return value;
}

} // namespace

SdfSample sample(const SampledSDF& field, const Vec3& point) {
  SdfSample s;
  s.value = trilinear(field, point, s.clamped);
  if (std::isinf(s.value)) return s;
  const double h = 0.5 * field.grid.cell;
  for (int k = 0; k < 3; ++k) {
    bool ignore = false;
    const Vec3 d = Vec3::Unit(k) * h;
    const double fp = trilinear(field, point + d, ignore);
    const double fm = trilinear(field, point - d, ignore);
    s.gradient[k] = std::isinf(fp) || std::isinf(fm) ? 0.0 : (fp - fm) / (2.0 * h);
  }
  return s;
}

static_assert(std::endian::native == std::endian::little,
              "binary SDF dumps assume a little-endian host");

void write_sdf_binary(const SampledSDF& field, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  auto put_f64 = [&](double v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
  auto put_i64 = [&](std::int64_t v) { out.write(reinterpret_cast<const char*>(&v), sizeof v); };
  for (int k = 0; k < 3; ++k) put_f64(field.grid.origin[k]);
  put_f64(field.grid.cell);
  for (int k = 0; k < 3; ++k) put_i64(field.grid.dims[k]);
  out.write(reinterpret_cast<const char*>(field.values.data()),
            static_cast<std::streamsize>(field.values.size() * sizeof(double)));
  if (!out) throw IoError("failed writing " + path.string());
}

SampledSDF read_sdf_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  SampledSDF f;
  auto get_f64 = [&] {
    double v = 0.0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  };
  auto get_i64 = [&] {
    std::int64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
  };
  for (int k = 0; k < 3; ++k) f.grid.origin[k] = get_f64();
  f.grid.cell = get_f64();
  for (int k = 0; k < 3; ++k) f.grid.dims[k] = static_cast<int>(get_i64());
  if (!in) throw IoError("truncated SDF header in " + path.string());
  f.values.resize(f.grid.node_count());
  in.read(reinterpret_cast<char*>(f.values.data()),
          static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  if (!in) throw IoError("truncated SDF payload in " + path.string());
  return f;
}

} // namespace bolt
