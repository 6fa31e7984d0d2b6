#pragma once

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "bolt/mesh.hpp"
#include "bolt/types.hpp"

namespace bolt {

inline constexpr int kMaxInfluences = 8;

/// Per-vertex sparse (joint index, weight) lists over a fixed joint set.
struct SkinWeights {
  std::vector<std::string> joints;
  std::vector<std::vector<std::pair<int, double>>> vertices;

  /// Non-negative, summing to 1 within 1e-6, at most kMaxInfluences entries,
  /// joint indices in range. `vertex_count` < 0 skips the size check.
  void validate(long vertex_count = -1) const;
  /// Dense weight of `joint` at vertex v.
  double weight(std::size_t v, int joint) const;
  /// Joint with the largest weight at v (lowest index on ties).
  int dominant_joint(std::size_t v) const;
};

void to_json(nlohmann::json& j, const SkinWeights& w);
void from_json(const nlohmann::json& j, SkinWeights& w);

/// Merges, drops non-positive entries, keeps the largest kMaxInfluences and
/// renormalizes. Output sorted by joint index.
std::vector<std::pair<int, double>> normalize_influences(std::vector<std::pair<int, double>> w);

enum class WeightSource { NormalHit, ProximalFallback };
const char* to_string(WeightSource s);

struct RigTransferConfig {
  double max_ray = 15.0;
  int smoothing_rounds = 3;
  double smoothing_factor = 0.5;

  void validate() const;
};

void to_json(nlohmann::json& j, const RigTransferConfig& c);
void from_json(const nlohmann::json& j, RigTransferConfig& c);

struct RigTransferResult {
  SkinWeights weights;
  std::vector<WeightSource> source;
  /// True when the normals were flipped by the orientation vote.
  bool normals_flipped = false;

  double fallback_fraction() const;
};

/// Neighbor-averaged normals: n <- normalize((1 - factor) n + factor * mean of
/// the one-ring), repeated `rounds` times.
std::vector<Vec3> smooth_normals_for_transfer(const TriMesh3& cloth, const std::vector<Vec3>& normals,
                                              int rounds, double factor);

/// Casts from each cloth vertex along -normal (up to max_ray) and interpolates
/// the body weights at the nearest hit; vertices without a hit fall back to
/// the closest body point. `normals` empty means area-weighted normals.
/// Throws ValidationError listing vertices with neither within max_ray.
RigTransferResult transfer_by_normal(const TriMesh3& cloth, const TriMesh3& body,
                                     const SkinWeights& body_weights, double max_ray,
                                     std::vector<Vec3> normals = {});

/// Weights from the closest body point only.
SkinWeights transfer_by_position(const TriMesh3& cloth, const TriMesh3& body,
                                 const SkinWeights& body_weights);

/// Every seam group's members get the group-average weights.
SkinWeights enforce_seam_weight_continuity(const SkinWeights& weights, const SeamSpec& seams);

/// Largest difference of any joint weight between members of one group.
double max_seam_weight_spread(const SkinWeights& weights, const SeamSpec& seams);

} // namespace bolt
