#include "bolt/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>

#include <spdlog/spdlog.h>

#include "bolt/bvh.hpp"
#include "bolt/error.hpp"
#include "bolt/parallel.hpp"

namespace fs = std::filesystem;

namespace bolt {

void PipelineConfig::validate() const {
  transfer.validate();
  pattern.validate();
  sim.validate();
  rig.validate();
  if (frames < 0) throw ConfigError("frames must be >= 0");
  if (grid_nodes < 4) throw ConfigError("grid_nodes must be >= 4");
  if (threads < 0) throw ConfigError("threads must be >= 0 (0 = all cores)");
  if (!(grid_margin >= 0.0)) throw ConfigError("grid_margin must be >= 0");
  if (!(winding_threshold > 0.0 && winding_threshold < 1.0)) {
    throw ConfigError("winding_threshold must lie in (0, 1)");
  }
}

void to_json(nlohmann::json& j, const PipelineConfig& c) {
  j = {{"transfer", c.transfer},
       {"pattern", c.pattern},
       {"sim", c.sim},
       {"rig", c.rig},
       {"frames", c.frames},
       {"grid_nodes", c.grid_nodes},
       {"grid_margin", c.grid_margin},
       {"winding_threshold", c.winding_threshold},
       {"threads", c.threads},
       {"emit_debug_sdf", c.emit_debug_sdf},
       {"emit_frames", c.emit_frames},
       {"seed", c.seed}};
}

void merge_config(PipelineConfig& c, const nlohmann::json& overrides) {
  if (!overrides.is_object()) throw ConfigError("config overrides must be a JSON object");
  nlohmann::json cur = c;
  cur.merge_patch(overrides);
  try {
    c.transfer = cur.at("transfer").get<TransferConfig>();
    c.pattern = cur.at("pattern").get<PatternConfig>();
    c.sim = cur.at("sim").get<SimParams>();
    c.rig = cur.at("rig").get<RigTransferConfig>();
    c.frames = cur.at("frames").get<int>();
    c.grid_nodes = cur.at("grid_nodes").get<int>();
    c.grid_margin = cur.at("grid_margin").get<double>();
    c.winding_threshold = cur.at("winding_threshold").get<double>();
    c.threads = cur.at("threads").get<int>();
    c.emit_debug_sdf = cur.at("emit_debug_sdf").get<bool>();
    c.emit_frames = cur.at("emit_frames").get<bool>();
    c.seed = cur.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
}

// ---------------------------------------------------------------- proxy

ProxyResult generate_proxy(const GarmentSheet& g, const std::set<std::string>& drop_tags) {
  const int np = g.layout2d.panel_count();
  std::vector<char> drop(np, 0);
  ProxyResult r;
  for (int p = 0; p < np; ++p) {
    if (p < static_cast<int>(g.panel_semantics.size()) && drop_tags.count(g.panel_semantics[p])) {
      drop[p] = 1;
      r.dropped_panels.push_back(p);
    }
  }
  const std::size_t nv = g.mesh3d.positions.size();
  r.original_to_proxy.assign(nv, -1);
  if (r.dropped_panels.empty()) {
    r.proxy = g;
    r.kept_vertices.resize(nv);
    std::iota(r.kept_vertices.begin(), r.kept_vertices.end(), 0);
    std::iota(r.original_to_proxy.begin(), r.original_to_proxy.end(), 0);
    return r;
  }

  std::vector<int> panel_map(np, -1);
  GarmentSheet& p = r.proxy;
  p.name = g.name;
  p.layer = g.layer;
  for (int q = 0; q < np; ++q) {
    if (drop[q]) continue;
    panel_map[q] = static_cast<int>(p.materials.size());
    p.materials.push_back(g.material_for_panel(q));
    p.panel_semantics.push_back(q < static_cast<int>(g.panel_semantics.size()) ? g.panel_semantics[q] : "body");
  }
  if (p.materials.empty()) throw ValidationError("garment '" + g.name + "': every panel was dropped");
  for (std::size_t v = 0; v < nv; ++v) {
    const int panel = g.layout2d.panel_id[v];
    if (drop[panel]) continue;
    r.original_to_proxy[v] = static_cast<int>(r.kept_vertices.size());
    r.kept_vertices.push_back(static_cast<int>(v));
    p.mesh3d.positions.push_back(g.mesh3d.positions[v]);
    p.layout2d.positions2d.push_back(g.layout2d.positions2d[v]);
    p.layout2d.panel_id.push_back(panel_map[panel]);
  }
  for (std::size_t t = 0; t < g.mesh3d.triangles.size(); ++t) {
    const Tri& f = g.mesh3d.triangles[t];
    if (drop[g.layout2d.panel_id[f[0]]]) {
      r.dropped_triangles.push_back(static_cast<int>(t));
      continue;
    }
    p.mesh3d.triangles.push_back({r.original_to_proxy[f[0]], r.original_to_proxy[f[1]], r.original_to_proxy[f[2]]});
  }
  p.layout2d.triangles = p.mesh3d.triangles;
  std::vector<std::pair<int, int>> pairs;
  for (const auto& [a, b] : g.seams.pairs) {
    if (r.original_to_proxy[a] >= 0 && r.original_to_proxy[b] >= 0) {
      pairs.emplace_back(r.original_to_proxy[a], r.original_to_proxy[b]);
    }
  }
  p.seams = build_seam_groups(pairs, p.mesh3d);
  p.validate();

  const TriangleBVH bvh(p.mesh3d.positions, p.mesh3d.triangles);
  std::set<int> bad_panels;
  for (std::size_t v = 0; v < nv; ++v) {
    if (r.original_to_proxy[v] >= 0) continue;
    const int panel = g.layout2d.panel_id[v];
    const ClosestPoint cp = closest_point_unsigned(g.mesh3d.positions[v], p.mesh3d.positions, bvh);
    if (cp.distance > 2.0 * g.material_for_panel(panel).thickness) {
      bad_panels.insert(panel);
      continue;
    }
    r.anchors.push_back({static_cast<int>(v), cp.triangle, cp.barycentric, g.mesh3d.positions[v] - cp.point});
  }
  if (!bad_panels.empty()) {
    std::ostringstream os;
    os << "garment '" << g.name << "': dropped panel(s)";
    for (int q : bad_panels) os << ' ' << q;
    os << " have vertices farther than twice the thickness from the proxy surface";
    throw ValidationError(os.str());
  }
  return r;
}

std::vector<Vec3> reconstitute(const GarmentSheet& original, const ProxyResult& proxy,
                               const std::vector<Vec3>& pos) {
  if (pos.size() != proxy.kept_vertices.size()) throw ValidationError("proxy position count mismatch");
  std::vector<Vec3> out = original.mesh3d.positions;
  for (std::size_t i = 0; i < proxy.kept_vertices.size(); ++i) out[proxy.kept_vertices[i]] = pos[i];
  for (const auto& a : proxy.anchors) {
    const Tri& f = proxy.proxy.mesh3d.triangles[a.triangle];
    const Vec3 anchor = a.barycentric[0] * pos[f[0]] + a.barycentric[1] * pos[f[1]] + a.barycentric[2] * pos[f[2]];
    out[a.vertex] = anchor + a.offset;
  }
  return out;
}

// ---------------------------------------------------------------- drape

void to_json(nlohmann::json& j, const DrapeLayerStats& s) {
  j = {{"name", s.name},
       {"layer", s.layer},
       {"max_penetration", s.max_penetration},
       {"frames", s.frames},
       {"warnings", s.warnings}};
}

GridSpec drape_grid(const std::vector<TriMesh3>& meshes, double margin, int max_nodes) {
  Box3 box;
  box.setEmpty();
  for (const TriMesh3& m : meshes) {
    if (!m.positions.empty()) box.extend(m.bounds());
  }
  if (box.isEmpty()) throw ValidationError("nothing to build a simulation grid around");
  return grid_for_bounds(box, margin, max_nodes);
}

DrapeResult progressive_drape(const std::vector<DrapeItem>& items, const std::vector<TriMesh3>& colliders,
                              const DrapeParams& params) {
  params.sim.validate();
  const double eps = params.sim.collision.eps_sdf;
  DrapeResult res;
  res.positions.resize(items.size());
  res.detailed.resize(items.size());
  res.fields.resize(items.size());
  res.order.resize(items.size());
  std::iota(res.order.begin(), res.order.end(), std::size_t{0});
  std::stable_sort(res.order.begin(), res.order.end(),
                   [&](std::size_t a, std::size_t b) { return items[a].layer < items[b].layer; });

  SampledSDF total = empty_sdf(params.grid);
  total.winding_threshold = params.winding_threshold;
  for (const TriMesh3& c : colliders) {
    total = sdf_union(total, build_sdf(c, params.grid, params.winding_threshold), eps);
  }

  TriMesh3 prev;
  for (std::size_t idx : res.order) {
    const DrapeItem& item = items[idx];
    const SampledSDF prev_field =
        prev.triangles.empty() ? empty_sdf(params.grid) : build_sdf(prev, params.grid, params.winding_threshold);
    total = sdf_union(total, prev_field, eps);
    auto field = std::make_shared<const SampledSDF>(total);
    res.fields[idx] = field;
    if (params.on_sdf) params.on_sdf(idx, *field);

    DrapeLayerStats st;
    st.name = item.name;
    st.layer = item.layer;
    ClothState cs = make_cloth_state(item.garment, item.rest);
    cs.sdf = field;
    if (!prev.triangles.empty()) set_frozen_meshes(cs, prev);
    for (int f = 0; f < params.frames; ++f) {
      try {
        st.frames.push_back(simulate_frame(cs, params.sim, f));
      } catch (const NumericalError& e) {
        throw NumericalError("layer " + std::to_string(item.layer) + " ('" + item.name + "'), frame " +
                             std::to_string(f) + ": " + e.what());
      }
      if (params.on_frame) params.on_frame(idx, f, cs);
    }
    st.max_penetration = max_penetration(cs);
    if (st.max_penetration > eps) {
      st.warnings.push_back("'" + item.name + "' ends with penetration " + std::to_string(st.max_penetration) +
                            " cm, above eps_sdf");
      spdlog::warn("{}", st.warnings.back());
    }
    res.positions[idx] = cs.x;

    TriMesh3 detailed;
    if (item.detailed && item.proxy) {
      detailed.positions = reconstitute(*item.detailed, *item.proxy, cs.x);
      detailed.triangles = item.detailed->mesh3d.triangles;
    } else {
      detailed = cs.mesh();
    }
    const std::array<TriMesh3, 2> parts{prev, detailed};
    prev = concatenate(parts);
    res.detailed[idx] = std::move(detailed);
    res.stats.push_back(std::move(st));
  }
  return res;
}

// ---------------------------------------------------------------- run

void to_json(nlohmann::json& j, const RunReport& r) {
  nlohmann::json timings = nlohmann::json::array();
  for (const auto& t : r.timings) timings.push_back({{"stage", t.stage}, {"seconds", t.seconds}});
  nlohmann::json garments = nlohmann::json::array();
  for (const auto& g : r.garments) {
    garments.push_back({{"name", g.name},
                        {"layer", g.layer},
                        {"source_body", g.source_body},
                        {"dropped_panels", g.dropped_panels},
                        {"transfer", g.transfer},
                        {"pattern", g.pattern},
                        {"drape", g.drape},
                        {"rig", g.rig}});
  }
  j = {{"status", r.ok ? "ok" : "failed"},
       {"timings", std::move(timings)},
       {"garments", std::move(garments)},
       {"warnings", r.warnings},
       {"config", r.config}};
  if (!r.ok) {
    j["failure"] = {{"stage", r.failed_stage},
                    {"garment", r.failed_garment},
                    {"kind", r.error_kind},
                    {"message", r.error_message}};
  }
}

namespace {

using Clock = std::chrono::steady_clock;

class StageTimer {
public:
  StageTimer(RunReport& r, std::string& current, std::string name) : r_(r), start_(Clock::now()) {
    current = name;
    name_ = std::move(name);
  }
  ~StageTimer() {
    const double s = std::chrono::duration<double>(Clock::now() - start_).count();
    for (auto& t : r_.timings) {
      if (t.stage == name_) {
        t.seconds += s;
        return;
      }
    }
    r_.timings.push_back({name_, s});
  }

private:
  RunReport& r_;
  Clock::time_point start_;
  std::string name_;
};

void prepare_output(const fs::path& out) {
  if (!fs::exists(out)) return;
  if (!fs::is_directory(out)) throw ConfigError(out.string() + " exists and is not a directory");
  if (fs::is_empty(out) || fs::exists(out / "report.json")) {
    fs::remove_all(out);
    return;
  }
  throw ConfigError(out.string() + " exists and does not look like a previous run directory");
}

std::string slug(std::size_t i, const std::string& name) {
  std::string s;
  for (char c : name) s += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu_", i);
  return buf + (s.empty() ? std::string("garment") : s);
}

} // namespace

RunReport run_pipeline(const OutfitManifest& manifest, const PipelineConfig& cfg, const fs::path& out_dir_in) {
  cfg.validate();
  const fs::path out_dir = fs::absolute(out_dir_in).lexically_normal();
  prepare_output(out_dir);
  const fs::path tmp = out_dir.parent_path() / ("." + out_dir.filename().string() + ".partial");
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  set_thread_count(cfg.threads);

  RunReport report;
  report.config = cfg;
  std::string stage = "load";
  std::string garment_name;

  try {
    std::vector<GarmentSheet> garments;
    std::map<std::string, BodyAsset> sources;
    BodyAsset target;
    std::vector<TriMesh3> colliders;
    {
      StageTimer t(report, stage, "load");
      manifest.validate();
      target = read_body(manifest.target_body);
      for (const auto& [name, path] : manifest.source_bodies) sources[name] = read_body(path);
      for (const auto& c : manifest.colliders) colliders.push_back(read_body(c).mesh);
      for (const GarmentEntry& e : manifest.garments) {
        garment_name = e.bundle.string();
        garments.push_back(read_garment_bundle(e.bundle));
        if (e.layer) garments.back().layer = *e.layer;
      }
      garment_name.clear();
    }
    const std::size_t n = garments.size();
    report.garments.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      report.garments[i].name = garments[i].name;
      report.garments[i].layer = garments[i].layer;
      report.garments[i].source_body = manifest.garments[i].source_body;
    }

    std::vector<ProxyResult> proxies(n);
    std::vector<PatternLayout2D> rests(n);
    std::vector<std::vector<Vec3>> transferred(n);
    for (std::size_t i = 0; i < n; ++i) {
      garment_name = garments[i].name;
      const GarmentEntry& e = manifest.garments[i];
      {
        StageTimer t(report, stage, "proxy");
        proxies[i] = generate_proxy(garments[i], std::set<std::string>(e.drop_tags.begin(), e.drop_tags.end()));
        report.garments[i].dropped_panels = proxies[i].dropped_panels;
      }
      {
        StageTimer t(report, stage, "transfer");
        const TransferResult tr =
            transfer_garment(proxies[i].proxy.mesh3d, sources.at(e.source_body).mesh, target.mesh, cfg.transfer);
        transferred[i] = tr.positions;
        report.garments[i].transfer = tr.report;
        for (const auto& w : tr.report.warnings) report.warnings.push_back(garment_name + ": " + w);
      }
      {
        StageTimer t(report, stage, "pattern");
        TriMesh3 tgt = proxies[i].proxy.mesh3d;
        tgt.positions = transferred[i];
        const PatternResult pr = optimize_pattern(proxies[i].proxy, proxies[i].proxy.mesh3d, tgt, cfg.pattern);
        rests[i] = pr.layout;
        report.garments[i].pattern = pr.report;
        for (const auto& w : pr.report.admm.warnings) report.warnings.push_back(garment_name + ": " + w);
        const fs::path gdir = tmp / "garments" / slug(i, garment_name);
        fs::create_directories(gdir);
        write_pattern_svg(proxies[i].proxy.layout2d, pr.layout, gdir / "pattern.svg");
      }
    }
    garment_name.clear();

    std::vector<DrapeItem> items(n);
    for (std::size_t i = 0; i < n; ++i) {
      items[i].name = garments[i].name;
      items[i].layer = garments[i].layer;
      items[i].garment = proxies[i].proxy;
      items[i].garment.mesh3d.positions = transferred[i];
      items[i].garment.seams = build_seam_groups(items[i].garment.seams.pairs, items[i].garment.mesh3d);
      items[i].rest = rests[i];
      items[i].detailed = &garments[i];
      items[i].proxy = &proxies[i];
    }
    DrapeResult drape;
    if (n > 0) {
      StageTimer t(report, stage, "drape");
      std::vector<TriMesh3> all = colliders;
      all.push_back(target.mesh);
      for (const auto& it : items) all.push_back(it.garment.mesh3d);
      DrapeParams dp;
      dp.sim = cfg.sim;
      dp.frames = cfg.frames;
      dp.grid = drape_grid(all, cfg.grid_margin, cfg.grid_nodes);
      dp.winding_threshold = cfg.winding_threshold;
      if (cfg.emit_frames) {
        dp.on_frame = [&](std::size_t i, int f, const ClothState& cs) {
          char name[32];
          std::snprintf(name, sizeof name, "frame_%03d.obj", f);
          write_obj(tmp / "frames" / slug(i, items[i].name) / name, cs.mesh());
        };
      }
      if (cfg.emit_debug_sdf) {
        dp.on_sdf = [&](std::size_t i, const SampledSDF& f) {
          write_sdf_binary(f, tmp / "sdf" / (slug(i, items[i].name) + ".sdf"));
        };
      }
      std::vector<TriMesh3> coll{target.mesh};
      coll.insert(coll.end(), colliders.begin(), colliders.end());
      drape = progressive_drape(items, coll, dp);
      for (std::size_t k = 0; k < drape.order.size(); ++k) {
        report.garments[drape.order[k]].drape = drape.stats[k];
        for (const auto& w : drape.stats[k].warnings) report.warnings.push_back(w);
      }
    }

    for (std::size_t i = 0; i < n; ++i) {
      garment_name = garments[i].name;
      GarmentSheet out = garments[i];
      {
        StageTimer t(report, stage, "reconstitute");
        out.mesh3d.positions = drape.detailed[i].positions;
        for (std::size_t k = 0; k < proxies[i].kept_vertices.size(); ++k) {
          out.layout2d.positions2d[proxies[i].kept_vertices[k]] = rests[i].positions2d[k];
        }
      }
      const fs::path gdir = tmp / "garments" / slug(i, garment_name);
      {
        StageTimer t(report, stage, "rig");
        if (target.weights) {
          std::vector<Vec3> normals = area_weighted_normals(out.mesh3d.positions, out.mesh3d.triangles);
          normals = smooth_normals_for_transfer(out.mesh3d, normals, cfg.rig.smoothing_rounds, cfg.rig.smoothing_factor);
          RigTransferResult rr = transfer_by_normal(out.mesh3d, target.mesh, *target.weights, cfg.rig.max_ray, normals);
          const SeamSpec seams = build_seam_groups(out.seams.pairs, out.mesh3d);
          const SkinWeights w = enforce_seam_weight_continuity(rr.weights, seams);
          w.validate(static_cast<long>(out.mesh3d.positions.size()));
          write_json(gdir / "weights.json", w);
          report.garments[i].rig = {{"fallback_fraction", rr.fallback_fraction()},
                                    {"normals_flipped", rr.normals_flipped},
                                    {"seam_weight_spread", max_seam_weight_spread(w, seams)}};
        } else if (i == 0) {
          report.warnings.push_back("target body has no rig.json; skin weights not transferred");
        }
      }
      {
        StageTimer t(report, stage, "write");
        write_garment_bundle(gdir, out);
      }
    }
    garment_name.clear();

    write_json(tmp / "report.json", report);
    fs::rename(tmp, out_dir);
  } catch (const std::exception& e) {
    report.ok = false;
    report.failed_stage = stage;
    report.failed_garment = garment_name;
    if (const auto* be = dynamic_cast<const Error*>(&e)) {
      report.error_kind = to_string(be->kind());
    } else {
      report.error_kind = "internal";
    }
    report.error_message = e.what();
    spdlog::error("stage '{}' failed{}: {}", stage, garment_name.empty() ? "" : " for '" + garment_name + "'",
                  e.what());
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    fs::rename(tmp, out_dir / "failed", ec);
    write_json(out_dir / "report.json", report);
  }
  return report;
}

std::string format_report_table(const nlohmann::json& r) {
  std::ostringstream os;
  auto num = [](const nlohmann::json& j, const char* key) -> std::string {
    if (!j.is_object() || !j.contains(key) || !j.at(key).is_number()) return "-";
    std::ostringstream s;
    s << std::setprecision(4) << j.at(key).get<double>();
    return s.str();
  };
  os << "status: " << r.value("status", std::string("?")) << '\n';
  if (r.contains("failure")) {
    const auto& f = r.at("failure");
    os << "failed stage: " << f.value("stage", "") << "  garment: " << f.value("garment", "") << '\n'
       << "error (" << f.value("kind", "") << "): " << f.value("message", "") << '\n';
  }
  os << '\n' << std::left << std::setw(16) << "stage" << "seconds\n";
  for (const auto& t : r.value("timings", nlohmann::json::array())) {
    os << std::left << std::setw(16) << t.value("stage", "") << num(t, "seconds") << '\n';
  }
  os << '\n'
     << std::left << std::setw(20) << "garment" << std::setw(7) << "layer" << std::setw(10) << "source"
     << std::setw(10) << "outer_it" << std::setw(12) << "final_gap" << std::setw(10) << "admm_it"
     << std::setw(14) << "max_seam_rel" << std::setw(12) << "max_pen" << "fallback\n";
  for (const auto& g : r.value("garments", nlohmann::json::array())) {
    const auto tr = g.value("transfer", nlohmann::json::object());
    const auto pa = g.value("pattern", nlohmann::json::object());
    const auto dr = g.value("drape", nlohmann::json::object());
    const auto rg = g.value("rig", nlohmann::json::object());
    double seam = 0.0;
    bool any_seam = false;
    for (const auto& s : pa.value("seam_lengths", nlohmann::json::array())) {
      if (s.contains("relative_delta")) {
        seam = std::max(seam, s.at("relative_delta").get<double>());
        any_seam = true;
      }
    }
    std::ostringstream seam_s;
    if (any_seam) seam_s << std::setprecision(4) << seam; else seam_s << '-';
    os << std::left << std::setw(20) << g.value("name", "") << std::setw(7) << g.value("layer", 0)
       << std::setw(10) << g.value("source_body", "") << std::setw(10) << num(tr, "outer_iterations")
       << std::setw(12) << num(tr, "final_gap") << std::setw(10) << num(pa, "admm_iterations") << std::setw(14)
       << seam_s.str() << std::setw(12) << num(dr, "max_penetration") << num(rg, "fallback_fraction") << '\n';
  }
  const auto warnings = r.value("warnings", nlohmann::json::array());
  if (!warnings.empty()) {
    os << "\nwarnings:\n";
    for (const auto& w : warnings) os << "  - " << w.get<std::string>() << '\n';
  }
  return os.str();
}

std::string validate_path(const fs::path& path) {
  std::ostringstream os;
  if (fs::is_directory(path) && fs::exists(path / "garment.json")) {
    const GarmentSheet g = read_garment_bundle(path);
    os << "garment bundle '" << g.name << "': " << g.mesh3d.positions.size() << " vertices, "
       << g.mesh3d.triangles.size() << " triangles, " << g.layout2d.panel_count() << " panels, "
       << g.seams.pairs.size() << " seam pairs, layer " << g.layer;
    return os.str();
  }
  if ((fs::is_directory(path) && fs::exists(path / "body.obj")) || path.extension() == ".obj") {
    const BodyAsset b = read_body(path);
    os << "body: " << b.mesh.positions.size() << " vertices, " << b.mesh.triangles.size() << " triangles, "
       << (b.weights ? std::to_string(b.weights->joints.size()) + " joints" : std::string("no rig"));
    return os.str();
  }
  if (fs::is_regular_file(path) && path.extension() == ".json") {
    const OutfitManifest m = read_manifest(path);
    read_body(m.target_body);
    for (const auto& [name, p] : m.source_bodies) read_body(p);
    for (const auto& c : m.colliders) read_body(c);
    for (const auto& g : m.garments) read_garment_bundle(g.bundle);
    os << "manifest: " << m.garments.size() << " garments, " << m.source_bodies.size() << " source bodies";
    return os.str();
  }
  throw IoError(path.string() + " is not a garment bundle, body directory or manifest");
}

} // namespace bolt
