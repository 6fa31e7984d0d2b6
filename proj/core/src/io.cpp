#include "bolt/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "bolt/error.hpp"

namespace fs = std::filesystem;

namespace bolt {

namespace {

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

// "12", "12/3", "12/3/4", "12//4" -> (vertex, texture or 0)
std::pair<long, long> parse_face_ref(const std::string& tok, const fs::path& path, int line) {
  long v = 0, t = 0;
  const auto slash = tok.find('/');
  try {
    v = std::stol(tok.substr(0, slash));
    if (slash != std::string::npos) {
      const auto rest = tok.substr(slash + 1);
      if (!rest.empty() && rest[0] != '/') t = std::stol(rest.substr(0, rest.find('/')));
    }
  } catch (const std::exception&) {
    throw IoError(path.string() + ":" + std::to_string(line) + ": bad face token '" + tok + "'");
  }
  return {v, t};
}

} // namespace

void write_obj(const fs::path& path, const TriMesh3& mesh, const std::vector<Vec2>* uv) {
  if (uv && uv->size() != mesh.positions.size()) {
    throw ValidationError("texture coordinates must be one-to-one with vertices");
  }
  std::ostringstream os;
  os << "# units: cm\n";
  for (const Vec3& p : mesh.positions) {
    os << "v " << fmt_double(p.x()) << ' ' << fmt_double(p.y()) << ' ' << fmt_double(p.z()) << '\n';
  }
  if (uv) {
    for (const Vec2& t : *uv) os << "vt " << fmt_double(t.x()) << ' ' << fmt_double(t.y()) << '\n';
  }
  for (const Tri& f : mesh.triangles) {
    os << 'f';
    for (int i : f) {
      os << ' ' << i + 1;
      if (uv) os << '/' << i + 1;
    }
    os << '\n';
  }
  auto out = open_out(path);
  out << os.str();
  if (!out) throw IoError("failed writing " + path.string());
}

ObjData read_obj(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  ObjData d;
  std::vector<Vec2> vt;
  std::vector<std::array<long, 3>> ftex;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z())) {
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad vertex");
      }
      d.mesh.positions.push_back(p);
    } else if (tag == "vt") {
      Vec2 t;
      if (!(ls >> t.x() >> t.y())) {
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad texture coordinate");
      }
      vt.push_back(t);
    } else if (tag == "f") {
      std::vector<std::string> toks;
      for (std::string tok; ls >> tok;) toks.push_back(tok);
      if (toks.size() != 3) {
        throw IoError(path.string() + ":" + std::to_string(lineno) + ": only triangles are supported");
      }
      Tri f;
      std::array<long, 3> t{};
      for (int i = 0; i < 3; ++i) {
        auto [vi, ti] = parse_face_ref(toks[i], path, lineno);
        if (vi < 0) vi += static_cast<long>(d.mesh.positions.size()) + 1;
        if (ti < 0) ti += static_cast<long>(vt.size()) + 1;
        f[i] = static_cast<int>(vi - 1);
        t[i] = ti - 1;
      }
      d.mesh.triangles.push_back(f);
      ftex.push_back(t);
    } else if (tag == "vn" || tag == "o" || tag == "g" || tag == "s" || tag == "usemtl" ||
               tag == "mtllib") {
      continue;
    } else {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": unsupported record '" + tag + "'");
    }
  }
  const long nv = static_cast<long>(d.mesh.positions.size());
  for (const Tri& f : d.mesh.triangles) {
    for (int i : f) {
      if (i < 0 || i >= nv) throw IoError(path.string() + ": face index out of range");
    }
  }
  if (!vt.empty()) {
    d.uv.assign(d.mesh.positions.size(), Vec2::Zero());
    std::vector<char> seen(d.mesh.positions.size(), 0);
    for (std::size_t t = 0; t < ftex.size(); ++t) {
      for (int i = 0; i < 3; ++i) {
        const long ti = ftex[t][i];
        const int vi = d.mesh.triangles[t][i];
        if (ti < 0 || ti >= static_cast<long>(vt.size())) {
          throw IoError(path.string() + ": texture index missing or out of range");
        }
        if (seen[vi] && d.uv[vi] != vt[ti]) {
          throw IoError(path.string() + ": vertex " + std::to_string(vi) +
                        " has more than one texture coordinate");
        }
        d.uv[vi] = vt[ti];
        seen[vi] = 1;
      }
    }
  }
  return d;
}

void to_json(nlohmann::json& j, const MaterialParams& m) {
  j = {{"k_warp", m.k_warp},
       {"k_weft", m.k_weft},
       {"k_shear_stretch", m.k_shear_stretch},
       {"k_warp_bend", m.k_warp_bend},
       {"k_weft_bend", m.k_weft_bend},
       {"k_shear_bend", m.k_shear_bend},
       {"density", m.density},
       {"thickness", m.thickness},
       {"seam_bend_stiffness", m.seam_bend_stiffness},
       {"seam_bend_damping", m.seam_bend_damping}};
}

void from_json(const nlohmann::json& j, MaterialParams& m) {
  const MaterialParams d;
  m.k_warp = j.value("k_warp", d.k_warp);
  m.k_weft = j.value("k_weft", d.k_weft);
  m.k_shear_stretch = j.value("k_shear_stretch", d.k_shear_stretch);
  m.k_warp_bend = j.value("k_warp_bend", d.k_warp_bend);
  m.k_weft_bend = j.value("k_weft_bend", d.k_weft_bend);
  m.k_shear_bend = j.value("k_shear_bend", d.k_shear_bend);
  m.density = j.value("density", d.density);
  m.thickness = j.value("thickness", d.thickness);
  m.seam_bend_stiffness = j.value("seam_bend_stiffness", d.seam_bend_stiffness);
  m.seam_bend_damping = j.value("seam_bend_damping", d.seam_bend_damping);
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

void write_garment_bundle(const fs::path& dir, const GarmentSheet& g) {
  fs::create_directories(dir);
  write_obj(dir / "garment.obj", g.mesh3d, &g.layout2d.positions2d);
  nlohmann::json panels = nlohmann::json::array();
  const int np = std::max<int>(g.layout2d.panel_count(), static_cast<int>(g.materials.size()));
  for (int p = 0; p < np; ++p) {
    nlohmann::json e = {{"id", p}};
    e["semantic"] = p < static_cast<int>(g.panel_semantics.size()) ? g.panel_semantics[p] : "body";
    if (p < static_cast<int>(g.materials.size())) e["material"] = g.materials[p];
    panels.push_back(std::move(e));
  }
  nlohmann::json seams = nlohmann::json::array();
  for (const auto& [a, b] : g.seams.pairs) seams.push_back({a, b});
  const nlohmann::json j = {{"format", kBundleFormat},
                            {"units", "cm"},
                            {"name", g.name},
                            {"layer", g.layer},
                            {"panels", std::move(panels)},
                            {"panel_id", g.layout2d.panel_id},
                            {"seams", std::move(seams)}};
  write_json(dir / "garment.json", j);
}

GarmentSheet read_garment_bundle(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError(dir.string() + " is not a bundle directory");
  const nlohmann::json j = read_json(dir / "garment.json");
  if (j.value("format", std::string()) != kBundleFormat) {
    throw ValidationError(dir.string() + ": expected format " + kBundleFormat);
  }
  if (j.value("units", std::string("cm")) != "cm") throw ValidationError(dir.string() + ": units must be cm");
  ObjData obj = read_obj(dir / "garment.obj");
  if (obj.uv.size() != obj.mesh.positions.size()) {
    throw ValidationError(dir.string() + ": garment.obj needs one texture coordinate per vertex");
  }
  GarmentSheet g;
  try {
    g.name = j.value("name", dir.filename().string());
    g.layer = j.value("layer", 0);
    g.mesh3d = std::move(obj.mesh);
    g.layout2d.positions2d = std::move(obj.uv);
    g.layout2d.triangles = g.mesh3d.triangles;
    g.layout2d.panel_id = j.at("panel_id").get<std::vector<int>>();
    for (const auto& p : j.at("panels")) {
      const int id = p.at("id").get<int>();
      if (id != static_cast<int>(g.materials.size())) {
        throw ValidationError(dir.string() + ": panels must be listed in id order");
      }
      g.panel_semantics.push_back(p.value("semantic", std::string("body")));
      g.materials.push_back(p.contains("material") ? p.at("material").get<MaterialParams>() : MaterialParams{});
    }
    std::vector<std::pair<int, int>> pairs;
    for (const auto& s : j.value("seams", nlohmann::json::array())) {
      pairs.emplace_back(s.at(0).get<int>(), s.at(1).get<int>());
    }
    if (g.layout2d.panel_id.size() != g.mesh3d.positions.size()) {
      throw ValidationError(dir.string() + ": panel_id must have one entry per vertex");
    }
    g.mesh3d.validate();
    g.seams = build_seam_groups(pairs, g.mesh3d);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(dir.string() + "/garment.json: " + e.what());
  }
  g.validate();
  return g;
}

void write_body(const fs::path& dir, const BodyAsset& body) {
  fs::create_directories(dir);
  write_obj(dir / "body.obj", body.mesh);
  if (body.weights) write_json(dir / "rig.json", *body.weights);
}

BodyAsset read_body(const fs::path& dir) {
  BodyAsset b;
  fs::path obj = dir / "body.obj";
  fs::path rig = dir / "rig.json";
  if (fs::is_regular_file(dir)) {
    obj = dir;
    rig = dir.parent_path() / "rig.json";
  }
  b.mesh = read_obj(obj).mesh;
  b.mesh.validate();
  if (fs::exists(rig)) {
    try {
      b.weights = read_json(rig).get<SkinWeights>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(rig.string() + ": " + e.what());
    }
    b.weights->validate(static_cast<long>(b.mesh.positions.size()));
  }
  return b;
}

void OutfitManifest::validate() const {
  if (target_body.empty()) throw ValidationError("manifest has no target body");
  for (std::size_t i = 0; i < garments.size(); ++i) {
    const GarmentEntry& g = garments[i];
    if (!source_bodies.count(g.source_body)) {
      throw ValidationError("garment " + std::to_string(i) + " (" + g.bundle.string() +
                            ") references undeclared source body '" + g.source_body + "'");
    }
    if (g.layer && *g.layer < 0) throw ValidationError("garment " + std::to_string(i) + " has a negative layer");
  }
}

OutfitManifest read_manifest(const fs::path& path) {
  const nlohmann::json j = read_json(path);
  if (j.value("format", std::string(kManifestFormat)) != kManifestFormat) {
    throw ValidationError(path.string() + ": expected format " + kManifestFormat);
  }
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) {
    const fs::path q(p);
    return (q.is_absolute() ? q : base / q).lexically_normal();
  };
  OutfitManifest m;
  try {
    const nlohmann::json bodies = j.value("source_bodies", nlohmann::json::object());
    for (const auto& [name, p] : bodies.items()) {
      m.source_bodies[name] = resolve(p.get<std::string>());
    }
    m.target_body = resolve(j.at("target_body").get<std::string>());
    for (const auto& g : j.value("garments", nlohmann::json::array())) {
      GarmentEntry e;
      e.bundle = resolve(g.at("bundle").get<std::string>());
      if (g.contains("layer")) e.layer = g.at("layer").get<int>();
      e.source_body = g.value("source_body", std::string());
      if (e.source_body.empty() && m.source_bodies.size() == 1) e.source_body = m.source_bodies.begin()->first;
      e.drop_tags = g.value("drop_tags", std::vector<std::string>{});
      m.garments.push_back(std::move(e));
    }
    for (const auto& c : j.value("colliders", nlohmann::json::array())) {
      m.colliders.push_back(resolve(c.get<std::string>()));
    }
    m.config = j.value("config", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  m.validate();
  return m;
}

void write_manifest(const fs::path& path, const OutfitManifest& m) {
  const fs::path base = fs::absolute(path).parent_path();
  auto rel = [&](const fs::path& p) { return fs::absolute(p).lexically_relative(base).generic_string(); };
  nlohmann::json bodies = nlohmann::json::object();
  for (const auto& [name, p] : m.source_bodies) bodies[name] = rel(p);
  nlohmann::json garments = nlohmann::json::array();
  for (const GarmentEntry& g : m.garments) {
    nlohmann::json e = {{"bundle", rel(g.bundle)}, {"source_body", g.source_body}, {"drop_tags", g.drop_tags}};
    if (g.layer) e["layer"] = *g.layer;
    garments.push_back(std::move(e));
  }
  nlohmann::json colliders = nlohmann::json::array();
  for (const auto& c : m.colliders) colliders.push_back(rel(c));
  write_json(path, {{"format", kManifestFormat},
                    {"source_bodies", std::move(bodies)},
                    {"target_body", rel(m.target_body)},
                    {"garments", std::move(garments)},
                    {"colliders", std::move(colliders)},
                    {"config", m.config}});
}

} // namespace bolt
