#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bolt/mesh.hpp"
#include "bolt/rig_transfer.hpp"

namespace bolt {

inline constexpr const char* kBundleFormat = "bolt-bundle/1";
inline constexpr const char* kManifestFormat = "bolt-manifest/1";

struct ObjData {
  TriMesh3 mesh;
  /// One texture coordinate per vertex, or empty.
  std::vector<Vec2> uv;
};

/// Positions and triangles, plus one-to-one texture coordinates when `uv` is
/// given. Output is byte-stable for identical input.
void write_obj(const std::filesystem::path& path, const TriMesh3& mesh, const std::vector<Vec2>* uv = nullptr);
/// Accepts "f a b c" and "f a/t b/t c/t" faces; texture indices must match the
/// vertex indices. Polygons are rejected.
ObjData read_obj(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const MaterialParams& m);
void from_json(const nlohmann::json& j, MaterialParams& m);

/// Directory with garment.obj (positions, layout as vt) and garment.json.
void write_garment_bundle(const std::filesystem::path& dir, const GarmentSheet& g);
/// Loads, builds seam groups and validates.
GarmentSheet read_garment_bundle(const std::filesystem::path& dir);

struct BodyAsset {
  TriMesh3 mesh;
  std::optional<SkinWeights> weights;
};

/// Directory with body.obj and optional rig.json.
void write_body(const std::filesystem::path& dir, const BodyAsset& body);
BodyAsset read_body(const std::filesystem::path& dir);

struct GarmentEntry {
  std::filesystem::path bundle;
  /// Overrides the bundle's layer when set.
  std::optional<int> layer;
  std::string source_body;
  std::vector<std::string> drop_tags;
};

struct OutfitManifest {
  /// Absolute (resolved) paths.
  std::map<std::string, std::filesystem::path> source_bodies;
  std::filesystem::path target_body;
  std::vector<GarmentEntry> garments;
  std::vector<std::filesystem::path> colliders;
  nlohmann::json config = nlohmann::json::object();

  void validate() const;
};

/// Relative paths are resolved against the manifest's directory.
OutfitManifest read_manifest(const std::filesystem::path& path);
/// Paths are written relative to the manifest's directory when possible.
void write_manifest(const std::filesystem::path& path, const OutfitManifest& m);

nlohmann::json read_json(const std::filesystem::path& path);
/// Two-space indented, trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

} // namespace bolt
