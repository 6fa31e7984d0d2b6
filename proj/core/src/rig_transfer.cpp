#include "bolt/rig_transfer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bolt/bvh.hpp"
#include "bolt/error.hpp"
#include "bolt/parallel.hpp"

namespace bolt {

void SkinWeights::validate(long vertex_count) const {
  if (vertex_count >= 0 && vertices.size() != static_cast<std::size_t>(vertex_count)) {
    throw ValidationError("skin weights cover " + std::to_string(vertices.size()) +
                          " vertices, mesh has " + std::to_string(vertex_count));
  }
  for (std::size_t v = 0; v < vertices.size(); ++v) {
    const auto& w = vertices[v];
    if (w.size() > static_cast<std::size_t>(kMaxInfluences)) {
      throw ValidationError("vertex " + std::to_string(v) + " has more than 8 influences");
    }
    double sum = 0.0;
    for (const auto& [j, x] : w) {
      if (j < 0 || j >= static_cast<int>(joints.size())) {
        throw ValidationError("vertex " + std::to_string(v) + " references unknown joint " +
                              std::to_string(j));
      }
      if (!(x >= 0.0)) throw ValidationError("vertex " + std::to_string(v) + " has a negative weight");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw ValidationError("weights of vertex " + std::to_string(v) + " sum to " + std::to_string(sum));
    }
  }
}

double SkinWeights::weight(std::size_t v, int joint) const {
  for (const auto& [j, x] : vertices[v]) {
    if (j == joint) return x;
  }
  return 0.0;
}

int SkinWeights::dominant_joint(std::size_t v) const {
  int best = -1;
  double bw = -1.0;
  for (const auto& [j, x] : vertices[v]) {
    if (x > bw || (x == bw && j < best)) {
      best = j;
      bw = x;
    }
  }
  return best;
}

void to_json(nlohmann::json& j, const SkinWeights& w) {
  nlohmann::json verts = nlohmann::json::array();
  for (const auto& list : w.vertices) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& [joint, x] : list) row.push_back({joint, x});
    verts.push_back(std::move(row));
  }
  j = {{"joints", w.joints}, {"vertices", std::move(verts)}};
}

void from_json(const nlohmann::json& j, SkinWeights& w) {
  w.joints = j.at("joints").get<std::vector<std::string>>();
  w.vertices.clear();
  for (const auto& row : j.at("vertices")) {
    std::vector<std::pair<int, double>> list;
    for (const auto& e : row) list.emplace_back(e.at(0).get<int>(), e.at(1).get<double>());
    w.vertices.push_back(std::move(list));
  }
}

std::vector<std::pair<int, double>> normalize_influences(std::vector<std::pair<int, double>> w) {
  std::map<int, double> merged;
  for (const auto& [j, x] : w) merged[j] += x;
  std::vector<std::pair<int, double>> out;
  for (const auto& [j, x] : merged) {
    if (x > 0.0) out.emplace_back(j, x);
  }
  if (out.size() > static_cast<std::size_t>(kMaxInfluences)) {
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    out.resize(kMaxInfluences);
    std::sort(out.begin(), out.end());
  }
  double sum = 0.0;
  for (const auto& e : out) sum += e.second;
  if (sum > 0.0) {
    for (auto& e : out) e.second /= sum;
  }
  return out;
}

const char* to_string(WeightSource s) {
  return s == WeightSource::NormalHit ? "normal_hit" : "proximal_fallback";
}

void RigTransferConfig::validate() const {
  if (!(max_ray > 0.0)) throw ConfigError("max_ray must be > 0");
  if (smoothing_rounds < 0) throw ConfigError("smoothing rounds must be >= 0");
  if (!(smoothing_factor >= 0.0 && smoothing_factor <= 1.0)) {
    throw ConfigError("smoothing factor must lie in [0, 1]");
  }
}

void to_json(nlohmann::json& j, const RigTransferConfig& c) {
  j = {{"max_ray", c.max_ray},
       {"smoothing_rounds", c.smoothing_rounds},
       {"smoothing_factor", c.smoothing_factor}};
}

void from_json(const nlohmann::json& j, RigTransferConfig& c) {
  const RigTransferConfig d;
  c.max_ray = j.value("max_ray", d.max_ray);
  c.smoothing_rounds = j.value("smoothing_rounds", d.smoothing_rounds);
  c.smoothing_factor = j.value("smoothing_factor", d.smoothing_factor);
}

double RigTransferResult::fallback_fraction() const {
  if (source.empty()) return 0.0;
  const auto n = std::count(source.begin(), source.end(), WeightSource::ProximalFallback);
  return static_cast<double>(n) / static_cast<double>(source.size());
}

std::vector<Vec3> smooth_normals_for_transfer(const TriMesh3& cloth, const std::vector<Vec3>& normals,
                                              int rounds, double factor) {
  if (rounds < 0) throw ConfigError("smoothing rounds must be >= 0");
  std::vector<Vec3> cur = normals;
  if (rounds == 0) return cur;
  const auto adj = vertex_adjacency(cloth.triangles, cloth.positions.size());
  std::vector<Vec3> next(cur.size());
  for (int r = 0; r < rounds; ++r) {
    for (std::size_t v = 0; v < cur.size(); ++v) {
      if (adj[v].empty()) {
        next[v] = cur[v];
        continue;
      }
      Vec3 mean = Vec3::Zero();
      for (int u : adj[v]) mean += cur[u];
      mean /= static_cast<double>(adj[v].size());
      const Vec3 n = (1.0 - factor) * cur[v] + factor * mean;
      const double len = n.norm();
      next[v] = len > 1e-12 ? Vec3(n / len) : cur[v];
    }
    std::swap(cur, next);
  }
  return cur;
}

namespace {

std::vector<std::pair<int, double>> interpolate(const SkinWeights& w, const Tri& f, const Vec3& bary) {
  std::vector<std::pair<int, double>> acc;
  for (int i = 0; i < 3; ++i) {
    const double b = std::max(0.0, bary[i]);
    for (const auto& [j, x] : w.vertices[f[i]]) acc.emplace_back(j, b * x);
  }
  return normalize_influences(std::move(acc));
}

void check_body(const TriMesh3& body, const SkinWeights& w) {
  if (body.triangles.empty()) throw ValidationError("body mesh has no triangles");
  w.validate(static_cast<long>(body.positions.size()));
}

} // namespace

RigTransferResult transfer_by_normal(const TriMesh3& cloth, const TriMesh3& body,
                                     const SkinWeights& body_weights, double max_ray,
                                     std::vector<Vec3> normals) {
  if (!(max_ray > 0.0)) throw ConfigError("max_ray must be > 0");
  check_body(body, body_weights);
  if (normals.empty()) normals = area_weighted_normals(cloth.positions, cloth.triangles);
  if (normals.size() != cloth.positions.size()) throw ValidationError("one normal per cloth vertex required");

  // orientation vote: normals should point away from the body center
  Vec3 center = Vec3::Zero();
  for (const Vec3& p : body.positions) center += p;
  center /= static_cast<double>(body.positions.size());
  long votes = 0;
  for (std::size_t v = 0; v < normals.size(); ++v) {
    const double d = normals[v].dot(cloth.positions[v] - center);
    votes += d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
  }
  RigTransferResult res;
  if (votes < 0) {
    for (Vec3& n : normals) n = -n;
    res.normals_flipped = true;
  }

  const TriangleBVH bvh(body.positions, body.triangles);
  const std::size_t n = cloth.positions.size();
  res.weights.joints = body_weights.joints;
  res.weights.vertices.resize(n);
  res.source.assign(n, WeightSource::NormalHit);
  std::vector<char> orphan(n, 0);
  parallel_for(0, n, [&](std::size_t v) {
    const Vec3& x = cloth.positions[v];
    if (normals[v].squaredNorm() > 0.0) {
      if (auto hit = raycast(x, -normals[v], max_ray, body.positions, bvh)) {
        res.weights.vertices[v] = interpolate(body_weights, body.triangles[hit->triangle], hit->barycentric);
        return;
      }
    }
    const ClosestPoint cp = closest_point_unsigned(x, body.positions, bvh);
    res.source[v] = WeightSource::ProximalFallback;
    if (cp.distance > max_ray) {
      orphan[v] = 1;
      return;
    }
    res.weights.vertices[v] = interpolate(body_weights, body.triangles[cp.triangle], cp.barycentric);
  });
  std::vector<std::size_t> orphans;
  for (std::size_t v = 0; v < n; ++v) {
    if (orphan[v]) orphans.push_back(v);
  }
  if (!orphans.empty()) {
    std::ostringstream os;
    os << orphans.size() << " cloth vertices have no body correspondence within " << max_ray
       << " cm:";
    for (std::size_t i = 0; i < std::min<std::size_t>(orphans.size(), 20); ++i) os << ' ' << orphans[i];
    if (orphans.size() > 20) os << " ...";
    throw ValidationError(os.str());
  }
  return res;
}

SkinWeights transfer_by_position(const TriMesh3& cloth, const TriMesh3& body,
                                 const SkinWeights& body_weights) {
  check_body(body, body_weights);
  const TriangleBVH bvh(body.positions, body.triangles);
  SkinWeights out;
  out.joints = body_weights.joints;
  out.vertices.resize(cloth.positions.size());
  parallel_for(0, cloth.positions.size(), [&](std::size_t v) {
    const ClosestPoint cp = closest_point_unsigned(cloth.positions[v], body.positions, bvh);
    out.vertices[v] = interpolate(body_weights, body.triangles[cp.triangle], cp.barycentric);
  });
  return out;
}

SkinWeights enforce_seam_weight_continuity(const SkinWeights& weights, const SeamSpec& seams) {
  SkinWeights out = weights;
  for (const auto& members : seams.groups) {
    std::vector<std::pair<int, double>> acc;
    for (int v : members) {
      for (const auto& [j, x] : weights.vertices[v]) acc.emplace_back(j, x / members.size());
    }
    const auto avg = normalize_influences(std::move(acc));
    for (int v : members) out.vertices[v] = avg;
  }
  return out;
}

double max_seam_weight_spread(const SkinWeights& weights, const SeamSpec& seams) {
  double spread = 0.0;
  for (const auto& members : seams.groups) {
    for (std::size_t j = 0; j < weights.joints.size(); ++j) {
      double lo = 1e300, hi = -1e300;
      for (int v : members) {
        const double x = weights.weight(v, static_cast<int>(j));
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
      if (!members.empty()) spread = std::max(spread, hi - lo);
    }
  }
  return spread;
}

} // namespace bolt
