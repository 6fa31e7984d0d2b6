#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bolt/cloth_sim.hpp"
#include "bolt/field_transfer.hpp"
#include "bolt/io.hpp"
#include "bolt/mesh.hpp"
#include "bolt/pattern_opt.hpp"
#include "bolt/rig_transfer.hpp"
#include "bolt/sdf.hpp"

namespace bolt {

struct PipelineConfig {
  TransferConfig transfer;
  PatternConfig pattern;
  SimParams sim;
  RigTransferConfig rig;
  int frames = 6;
  int grid_nodes = 128;
  double grid_margin = 5.0;
  double winding_threshold = 0.25;
  int threads = 1;
  bool emit_debug_sdf = false;
  bool emit_frames = false;
  std::uint64_t seed = 0;

  void validate() const;
};

void to_json(nlohmann::json& j, const PipelineConfig& c);
/// Missing keys keep their current values, so configs can be layered.
void merge_config(PipelineConfig& c, const nlohmann::json& overrides);

/// Simulation-ready garment plus what is needed to put the dropped panels back.
struct ProxyResult {
  GarmentSheet proxy;
  /// Proxy vertex -> original vertex.
  std::vector<int> kept_vertices;
  /// Original vertex -> proxy vertex, or -1 when dropped.
  std::vector<int> original_to_proxy;
  struct Anchor {
    int vertex = -1;   // original index
    int triangle = -1; // proxy triangle
    Vec3 barycentric = Vec3::Zero();
    Vec3 offset = Vec3::Zero(); // world space, from the anchor point
  };
  std::vector<Anchor> anchors;
  std::vector<int> dropped_panels;
  /// Original triangle indices removed.
  std::vector<int> dropped_triangles;
};

/// Removes panels whose semantic tag is in `drop_tags`. Every dropped vertex
/// must lie within twice its panel thickness of a kept triangle.
ProxyResult generate_proxy(const GarmentSheet& garment, const std::set<std::string>& drop_tags);

/// Full-garment positions from proxy positions: kept vertices copied, dropped
/// vertices replayed from their anchors.
std::vector<Vec3> reconstitute(const GarmentSheet& original, const ProxyResult& proxy,
                               const std::vector<Vec3>& proxy_positions);

struct DrapeItem {
  std::string name;
  int layer = 0;
  /// Simulated mesh (start positions) with its seams and materials.
  GarmentSheet garment;
  /// Rest state of the simulation.
  PatternLayout2D rest;
  /// When set, the detailed mesh of this garment (rebuilt from `proxy`)
  /// joins the collider set once the layer is frozen.
  const GarmentSheet* detailed = nullptr;
  const ProxyResult* proxy = nullptr;
};

struct DrapeParams {
  SimParams sim;
  int frames = 6;
  GridSpec grid;
  double winding_threshold = 0.25;
  std::function<void(std::size_t item, int frame, const ClothState&)> on_frame;
  std::function<void(std::size_t item, const SampledSDF&)> on_sdf;
};

struct DrapeLayerStats {
  std::string name;
  int layer = 0;
  double max_penetration = 0.0;
  std::vector<FrameTelemetry> frames;
  std::vector<std::string> warnings;
};

void to_json(nlohmann::json& j, const DrapeLayerStats& s);

struct DrapeResult {
  /// Indexed like the input items.
  std::vector<std::vector<Vec3>> positions;
  std::vector<TriMesh3> detailed;
  /// Input indices in simulation order.
  std::vector<std::size_t> order;
  std::vector<DrapeLayerStats> stats; // simulation order
  /// Collision field each item was simulated against (input indexing).
  std::vector<std::shared_ptr<const SampledSDF>> fields;
};

/// Layer-by-layer drape against the union of collider SDFs and the frozen
/// lower layers. Ties in layer keep input order.
DrapeResult progressive_drape(const std::vector<DrapeItem>& items, const std::vector<TriMesh3>& colliders,
                              const DrapeParams& params);

/// Shared simulation grid over every collider and garment.
GridSpec drape_grid(const std::vector<TriMesh3>& meshes, double margin, int max_nodes);

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct GarmentRunStats {
  std::string name;
  int layer = 0;
  std::string source_body;
  std::vector<int> dropped_panels;
  nlohmann::json transfer = nlohmann::json::object();
  nlohmann::json pattern = nlohmann::json::object();
  nlohmann::json drape = nlohmann::json::object();
  nlohmann::json rig = nlohmann::json::object();
};

struct RunReport {
  bool ok = true;
  std::string failed_stage;
  std::string failed_garment;
  std::string error_kind;
  std::string error_message;
  std::vector<StageTiming> timings;
  std::vector<GarmentRunStats> garments;
  std::vector<std::string> warnings;
  nlohmann::json config = nlohmann::json::object();
};

void to_json(nlohmann::json& j, const RunReport& r);

/// Runs proxy -> transfer -> pattern -> drape -> reconstitute -> rig for a
/// manifest and writes the bundle to `out_dir` atomically. On failure the
/// report is still written to out_dir/report.json and partial outputs are kept
/// under out_dir/failed/. Never throws for stage errors; check `ok`.
RunReport run_pipeline(const OutfitManifest& manifest, const PipelineConfig& cfg,
                       const std::filesystem::path& out_dir);

/// Renders a report JSON as a plain-text table.
std::string format_report_table(const nlohmann::json& report);

/// Checks a garment bundle, body directory or manifest file. Returns a short
/// description; throws on invalid input.
std::string validate_path(const std::filesystem::path& path);

} // namespace bolt
