#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "bolt/error.hpp"
#include "bolt/io.hpp"
#include "bolt/pipeline.hpp"
#include "bolt/primitives.hpp"

#include "fixtures.hpp"

using namespace bolt;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "bolt_unit_pipeline" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// A 10 x 10 vest panel with a 3 x 3 pocket panel hovering `lift` above it.
GarmentSheet vest_with_pocket(double lift) {
  const GarmentSheet vest = flat_sheet(10.0, 10.0, 10, 10, Vec3(0, 0, 0));
  const GarmentSheet pocket = flat_sheet(3.0, 3.0, 3, 3, Vec3(2.0, lift, -2.0));
  GarmentSheet g = fixtures::merge(vest, pocket);
  g.name = "vest";
  g.panel_semantics = {"body", "pocket"};
  return g;
}

} // namespace

TEST_CASE("OBJ round trip is exact and byte-stable") {
  const fs::path dir = scratch("obj");
  const GarmentSheet g = fixtures::floating_tube(6.0, 0, "tube");
  std::vector<Vec2> uv = g.layout2d.positions2d;
  write_obj(dir / "a.obj", g.mesh3d, &uv);
  write_obj(dir / "b.obj", g.mesh3d, &uv);
  CHECK(slurp(dir / "a.obj") == slurp(dir / "b.obj"));
  const ObjData back = read_obj(dir / "a.obj");
  CHECK(back.mesh.triangles == g.mesh3d.triangles);
  REQUIRE(back.mesh.positions.size() == g.mesh3d.positions.size());
  for (std::size_t v = 0; v < back.mesh.positions.size(); ++v) {
    CHECK((back.mesh.positions[v].array() == g.mesh3d.positions[v].array()).all());
    CHECK((back.uv[v].array() == uv[v].array()).all());
  }

  std::ofstream(dir / "quad.obj") << "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
  CHECK_THROWS_AS(read_obj(dir / "quad.obj"), Error);
  CHECK_THROWS_AS(read_obj(dir / "missing.obj"), IoError);
}

TEST_CASE("garment bundle, body and manifest round trips") {
  const fs::path dir = scratch("bundle");
  GarmentSheet g = vest_with_pocket(0.3);
  g.layer = 2;
  g.materials[1].k_warp = 123.0;
  write_garment_bundle(dir / "vest", g);
  const GarmentSheet b = read_garment_bundle(dir / "vest");
  CHECK(b.name == "vest");
  CHECK(b.layer == 2);
  CHECK(b.panel_semantics == g.panel_semantics);
  CHECK(b.materials[1].k_warp == 123.0);
  CHECK(b.seams.pairs == g.seams.pairs);
  CHECK(b.mesh3d.triangles == g.mesh3d.triangles);
  CHECK(b.layout2d.panel_id == g.layout2d.panel_id);
  for (std::size_t v = 0; v < g.mesh3d.positions.size(); ++v) {
    CHECK((b.mesh3d.positions[v] - g.mesh3d.positions[v]).norm() == 0.0);
    CHECK((b.layout2d.positions2d[v] - g.layout2d.positions2d[v]).norm() == 0.0);
  }
  CHECK(validate_path(dir / "vest").find("garment bundle 'vest'") != std::string::npos);

  BodyAsset body;
  body.mesh = icosphere(3.0, 1);
  SkinWeights w;
  w.joints = {"root"};
  w.vertices.assign(body.mesh.positions.size(), {{0, 1.0}});
  body.weights = w;
  write_body(dir / "body", body);
  const BodyAsset rb = read_body(dir / "body");
  CHECK(rb.mesh.triangles == body.mesh.triangles);
  REQUIRE(rb.weights.has_value());
  CHECK(rb.weights->joints == w.joints);
  CHECK(validate_path(dir / "body").find("1 joints") != std::string::npos);

  OutfitManifest m;
  m.source_bodies["base"] = dir / "body";
  m.target_body = dir / "body";
  GarmentEntry e;
  e.bundle = dir / "vest";
  e.source_body = "base";
  e.layer = 4;
  e.drop_tags = {"pocket"};
  m.garments.push_back(e);
  m.config = {{"frames", 2}};
  write_manifest(dir / "manifest.json", m);
  // paths are stored relative to the manifest
  CHECK(slurp(dir / "manifest.json").find(dir.string()) == std::string::npos);
  const OutfitManifest rm = read_manifest(dir / "manifest.json");
  CHECK(rm.target_body == (dir / "body").lexically_normal());
  REQUIRE(rm.garments.size() == 1);
  CHECK(rm.garments[0].layer == 4);
  CHECK(rm.garments[0].drop_tags == e.drop_tags);
  CHECK(rm.config == m.config);
  CHECK(validate_path(dir / "manifest.json").find("1 garments") != std::string::npos);

  m.garments[0].source_body = "other";
  CHECK_THROWS_WITH_AS(m.validate(), doctest::Contains("undeclared source body"), ValidationError);
  CHECK_THROWS_AS(validate_path(dir / "nothing_here"), IoError);
}

TEST_CASE("config layering") {
  PipelineConfig c;
  merge_config(c, {{"frames", 3}, {"sim", {{"substeps", 8}}}});
  CHECK(c.frames == 3);
  CHECK(c.sim.substeps == 8);
  CHECK(c.sim.collision.eps_sdf == 0.2);
  merge_config(c, {{"transfer", {{"cell_size", 1.5}}}});
  CHECK(c.frames == 3);
  CHECK(c.transfer.cell_size == 1.5);
  nlohmann::json j = c;
  PipelineConfig d;
  merge_config(d, j);
  CHECK(nlohmann::json(d) == j);
  CHECK_NOTHROW(c.validate());
  merge_config(c, {{"frames", -1}});
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(merge_config(c, {{"frames", "many"}}), ConfigError);
  CHECK_THROWS_AS(merge_config(c, nlohmann::json::array()), ConfigError);
}

TEST_CASE("proxy generation and reconstitution") {
  const GarmentSheet g = vest_with_pocket(0.3);
  const ProxyResult same = generate_proxy(g, {});
  CHECK(same.proxy.mesh3d.triangles == g.mesh3d.triangles);
  CHECK(same.anchors.empty());
  CHECK(same.dropped_panels.empty());

  const ProxyResult p = generate_proxy(g, {"pocket"});
  CHECK(p.proxy.mesh3d.triangles.size() == g.mesh3d.triangles.size() - 18);
  CHECK(p.dropped_triangles.size() == 18);
  CHECK(p.dropped_panels == std::vector<int>{1});
  CHECK(p.anchors.size() == 16);
  CHECK(p.proxy.panel_semantics == std::vector<std::string>{"body"});

  // rigid motion of the proxy carries the pocket along
  const Vec3 t(1.5, -2.0, 0.25);
  std::vector<Vec3> moved = p.proxy.mesh3d.positions;
  for (Vec3& x : moved) x += t;
  const std::vector<Vec3> full = reconstitute(g, p, moved);
  REQUIRE(full.size() == g.mesh3d.positions.size());
  for (std::size_t v = 0; v < full.size(); ++v) CHECK((full[v] - (g.mesh3d.positions[v] + t)).norm() < 1e-12);

  CHECK_THROWS_WITH_AS(generate_proxy(vest_with_pocket(2.0), {"pocket"}), doctest::Contains("panel(s) 1"), ValidationError);
}

TEST_CASE("single-layer drape equals a plain body-collision drape") {
  const TriMesh3 body = fixtures::sphere_body();
  const GarmentSheet tube = fixtures::floating_tube(10.5, 0, "tube", 6.0, 3.0);
  DrapeItem item;
  item.name = tube.name;
  item.garment = tube;
  item.rest = tube.layout2d;
  DrapeParams dp;
  dp.frames = 2;
  const PipelineConfig cfg;
  dp.grid = drape_grid({body, tube.mesh3d}, cfg.grid_margin, cfg.grid_nodes);
  const DrapeResult d = progressive_drape({item}, {body}, dp);
  REQUIRE(d.positions.size() == 1);
  CHECK(d.order == std::vector<std::size_t>{0});

  ClothState s = make_cloth_state(tube);
  s.sdf = std::make_shared<SampledSDF>(fixtures::first_layer_field(body, {tube.mesh3d}));
  for (int f = 0; f < dp.frames; ++f) simulate_frame(s, dp.sim, f);
  REQUIRE(s.x.size() == d.positions[0].size());
  for (std::size_t v = 0; v < s.x.size(); ++v) CHECK((s.x[v].array() == d.positions[0][v].array()).all());
  CHECK(d.stats[0].frames.size() == 2);
}

TEST_CASE("layers are simulated in order, ties by input order") {
  const TriMesh3 body = fixtures::sphere_body(10.0, 3);
  std::vector<DrapeItem> items(3);
  const std::array<int, 3> layers{1, 0, 1};
  std::vector<GarmentSheet> sheets;
  for (int i = 0; i < 3; ++i) sheets.push_back(fixtures::floating_tube(11.0 + i, layers[i], "t" + std::to_string(i), 8.0, 2.0));
  for (int i = 0; i < 3; ++i) {
    items[i].name = sheets[i].name;
    items[i].layer = layers[i];
    items[i].garment = sheets[i];
    items[i].rest = sheets[i].layout2d;
  }
  DrapeParams dp;
  dp.frames = 0;
  dp.grid = drape_grid({body, sheets[0].mesh3d, sheets[1].mesh3d, sheets[2].mesh3d}, 5.0, 48);
  std::vector<std::size_t> seen;
  dp.on_sdf = [&](std::size_t i, const SampledSDF&) { seen.push_back(i); };
  const DrapeResult d = progressive_drape(items, {body}, dp);
  CHECK(d.order == std::vector<std::size_t>{1, 0, 2});
  CHECK(seen == d.order);
  // each later layer sees a field at least as large in extent (min-union)
  const Vec3 probe(0.0, 9.0, 11.5);
  CHECK(sample(*d.fields[2], probe).value <= sample(*d.fields[1], probe).value);
}

TEST_CASE("pipeline runs: empty outfit, failure report, two source bodies") {
  const fs::path dir = scratch("runs");
  const TriMesh3 body = fixtures::sphere_body(10.0, 3);

  const fs::path empty_manifest = fixtures::write_outfit(dir / "empty_in", body, {});
  const RunReport empty = run_pipeline(read_manifest(empty_manifest), PipelineConfig{}, dir / "empty_out");
  CHECK(empty.ok);
  CHECK(empty.garments.empty());
  const nlohmann::json ej = read_json(dir / "empty_out" / "report.json");
  CHECK(ej["status"] == "ok");
  CHECK(format_report_table(ej).find("status: ok") != std::string::npos);

  // source body with a different triangulation fails in the transfer stage
  const GarmentSheet tube = fixtures::floating_tube(11.0, 0, "tube", 6.0, 3.0);
  const fs::path bad_manifest = fixtures::write_outfit(dir / "bad_in", body, {tube});
  OutfitManifest bm = read_manifest(bad_manifest);
  BodyAsset other;
  other.mesh = fixtures::sphere_body(10.0, 2);
  write_body(dir / "bad_in" / "other", other);
  bm.source_bodies["base"] = dir / "bad_in" / "other";
  const RunReport bad = run_pipeline(bm, PipelineConfig{}, dir / "bad_out");
  CHECK(!bad.ok);
  CHECK(bad.failed_stage == "transfer");
  CHECK(bad.failed_garment == "tube");
  CHECK(bad.error_kind == "validation");
  CHECK(fs::exists(dir / "bad_out" / "report.json"));
  CHECK(fs::is_directory(dir / "bad_out" / "failed"));
  CHECK(!fs::exists(dir / "bad_out" / "garments"));
  CHECK(!fs::exists(dir / ".bad_out.partial"));
  const nlohmann::json bj = read_json(dir / "bad_out" / "report.json");
  CHECK(bj["failure"]["stage"] == "transfer");
  CHECK(format_report_table(bj).find("failed stage: transfer") != std::string::npos);

  // a directory that is not a previous run is never clobbered
  fs::create_directories(dir / "precious");
  std::ofstream(dir / "precious" / "keep.txt") << "x";
  CHECK_THROWS_AS(run_pipeline(bm, PipelineConfig{}, dir / "precious"), ConfigError);
  CHECK(fs::exists(dir / "precious" / "keep.txt"));

  // two garments fit to two source bodies
  const fs::path two = dir / "two_in";
  fixtures::write_outfit(two, body, {tube, fixtures::floating_tube(12.0, 1, "outer", 6.0, 3.0)});
  OutfitManifest tm = read_manifest(two / "manifest.json");
  BodyAsset second;
  second.mesh = body;
  for (Vec3& p : second.mesh.positions) p *= 1.02;
  write_body(two / "second", second);
  tm.source_bodies["second"] = two / "second";
  tm.garments[1].source_body = "second";
  PipelineConfig cfg;
  cfg.frames = 2;
  const RunReport rr = run_pipeline(tm, cfg, dir / "two_out");
  REQUIRE(rr.ok);
  REQUIRE(rr.garments.size() == 2);
  CHECK(rr.garments[0].source_body == "base");
  CHECK(rr.garments[1].source_body == "second");
  // one transfer per garment, timings summed per stage
  for (const auto& g : rr.garments) CHECK(g.transfer.value("outer_iterations", 0) >= 1);
  int transfer_rows = 0;
  for (const auto& t : rr.timings) transfer_rows += t.stage == "transfer";
  CHECK(transfer_rows == 1);
  for (const auto& g : rr.garments) CHECK(g.drape.contains("max_penetration"));
  CHECK(fs::exists(dir / "two_out" / "garments" / "00_tube" / "garment.obj"));
  CHECK(fs::exists(dir / "two_out" / "garments" / "01_outer" / "pattern.svg"));
  const std::string table = format_report_table(read_json(dir / "two_out" / "report.json"));
  CHECK(table.find("outer") != std::string::npos);
  CHECK(table.find("second") != std::string::npos);
}
