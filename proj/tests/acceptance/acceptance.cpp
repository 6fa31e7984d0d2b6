// Prints one PASS/FAIL line per acceptance criterion; exits nonzero if any fail.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "bolt/cloth_sim.hpp"
#include "bolt/field_transfer.hpp"
#include "bolt/io.hpp"
#include "bolt/parallel.hpp"
#include "bolt/pattern_opt.hpp"
#include "bolt/pipeline.hpp"
#include "bolt/rig_transfer.hpp"
#include "bolt/sdf.hpp"

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"

namespace fs = std::filesystem;
using namespace bolt;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bolt_acceptance_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double max_displacement(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, (a[i] - b[i]).norm());
  return m;
}

// 1 -------------------------------------------------------------------------
Outcome identity_transfer() {
  const auto t0 = Clock::now();
  const TriMesh3 body = fixtures::sphere_body();
  const GarmentSheet tube = fixtures::resting_tube(body);
  const TransferResult tr = transfer_garment(tube.mesh3d, body, body, TransferConfig{});
  const double d_transfer = max_displacement(tr.positions, tube.mesh3d.positions);

  const fs::path dir = scratch("identity");
  const fs::path manifest = fixtures::write_outfit(dir / "in", body, {tube});
  PipelineConfig cfg;
  const RunReport rep = run_pipeline(read_manifest(manifest), cfg, dir / "out");
  double d_pipeline = 1e300;
  if (rep.ok) {
    const ObjData out = read_obj(dir / "out" / "garments" / "00_tube" / "garment.obj");
    d_pipeline = max_displacement(out.mesh.positions, tube.mesh3d.positions);
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = rep.ok && d_transfer <= 1e-3 && d_pipeline <= 1e-2 && secs <= 60.0;
  o.detail = "transfer max " + fmt("%.3g", d_transfer) + " cm, pipeline max " + fmt("%.3g", d_pipeline) +
             " cm, " + fmt("%.1f", secs) + " s" + (rep.ok ? "" : ", run failed: " + rep.error_message);
  return o;
}

// 2 -------------------------------------------------------------------------
Outcome pattern_recovery() {
  const auto fx = fixtures::two_panel_layout();
  const TangentBinding binding = bind_tangents(fx.layout, fx.mesh);
  const TargetFrames frames = build_target_frames(binding, fx.mesh, fx.mesh, FrameMode::PreserveFit);
  PatternConfig cfg;
  const BaseQuadratic base = build_base_quadratic(fx.layout, frames.b, cfg.epsilon);
  const auto cons = build_edge_constraints(fx.layout, fx.seams, cfg.internal_seams);
  AdmmReport rep;
  const Eigen::MatrixX2d x = admm_optimize(base, cons, cfg, &rep);
  const Eigen::MatrixX2d x0 = layout_matrix(fx.layout);
  const double err = (x - x0).rowwise().norm().maxCoeff();

  // the same through the full pattern pass on a curved two-panel garment
  const GarmentSheet tube = fixtures::floating_tube(7.0, 0, "tube");
  const PatternResult pr = optimize_pattern(tube, tube.mesh3d, tube.mesh3d, cfg);
  const double err_tube =
      (layout_matrix(pr.layout) - layout_matrix(tube.layout2d)).rowwise().norm().maxCoeff();

  Outcome o;
  o.pass = err <= 1e-3 && rep.iterations <= 500 && err_tube <= 1e-3 && pr.report.admm.iterations <= 500;
  o.detail = "max vertex error " + fmt("%.3g", err) + " cm in " + std::to_string(rep.iterations) +
             " iterations; tube garment " + fmt("%.3g", err_tube) + " cm in " +
             std::to_string(pr.report.admm.iterations);
  return o;
}

// 3 -------------------------------------------------------------------------
Outcome seam_length_consistency() {
  const auto fx = fixtures::two_panel_layout();
  // panel 0 wants to be 1.5x longer along the seam direction
  std::vector<Mat2> b(fx.layout.triangles.size());
  for (std::size_t t = 0; t < b.size(); ++t) {
    const Tri& f = fx.layout.triangles[t];
    Mat2 Dm;
    Dm.col(0) = fx.layout.positions2d[f[1]] - fx.layout.positions2d[f[0]];
    Dm.col(1) = fx.layout.positions2d[f[2]] - fx.layout.positions2d[f[0]];
    Mat2 T = Mat2::Identity();
    if (fx.layout.panel_id[f[0]] == 0) T(1, 1) = 1.5;
    b[t] = (T * Dm).inverse();
  }
  PatternConfig cfg;
  const BaseQuadratic base = build_base_quadratic(fx.layout, b, cfg.epsilon);
  const auto cons = build_edge_constraints(fx.layout, fx.seams, cfg.internal_seams);
  AdmmReport rep;
  const Eigen::MatrixX2d x = admm_optimize(base, cons, cfg, &rep);
  const auto deltas = seam_length_deltas(x, fx.layout, fx.seams);
  double worst = deltas.empty() ? 1e300 : 0.0;
  for (const auto& d : deltas) worst = std::max(worst, d.relative_delta());
  // without the edge terms the two sides differ by the full scaling
  const Eigen::MatrixX2d xb = admm_optimize(base, {}, cfg);
  double base_delta = 0.0;
  for (const auto& d : seam_length_deltas(xb, fx.layout, fx.seams)) base_delta = std::max(base_delta, d.relative_delta());
  Outcome o;
  o.pass = !deltas.empty() && worst <= 0.005;
  o.detail = "sewn length mismatch " + fmt("%.3g", 100 * worst) + "% (frame term alone " +
             fmt("%.3g", 100 * base_delta) + "%), " + std::to_string(rep.iterations) + " iterations";
  return o;
}

// 4 -------------------------------------------------------------------------
Outcome schur_vs_dense() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  double worst = 0.0;
  int max_unknowns = 0;
  for (int inst = 0; inst < 20; ++inst) {
    const int n = 30 + static_cast<int>(rng() % 200);
    const int m = 10 + static_cast<int>(rng() % std::min(70, 300 - n - 9));
    max_unknowns = std::max(max_unknowns, n + m);
    // sparse SPD A = R^T R + I, R with ~4 entries per row
    Eigen::SparseMatrix<double> R(n, n);
    std::vector<Eigen::Triplet<double>> tr;
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < 4; ++k) tr.emplace_back(i, static_cast<int>(rng() % n), U(rng));
    }
    R.setFromTriplets(tr.begin(), tr.end());
    Eigen::SparseMatrix<double> I(n, n);
    I.setIdentity();
    BlockSystem sys;
    sys.A = Eigen::SparseMatrix<double>(R.transpose() * R) + I;
    tr.clear();
    for (int i = 0; i < m; ++i) {
      for (int k = 0; k < 6; ++k) tr.emplace_back(i, static_cast<int>(rng() % n), U(rng));
    }
    sys.B.resize(m, n);
    sys.B.setFromTriplets(tr.begin(), tr.end());
    sys.C = Eigen::VectorXd::Constant(m, 0.01 * 8.0) + 0.05 * Eigen::VectorXd::Random(m).cwiseAbs();
    sys.f = Eigen::VectorXd::Random(n);
    sys.k = Eigen::VectorXd::Random(m);

    const SchurSolution s = solve_schur_cg(sys, 1e-13, 10000);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + m, n + m);
    K.topLeftCorner(n, n) = Eigen::MatrixXd(sys.A);
    K.topRightCorner(n, m) = -Eigen::MatrixXd(sys.B).transpose();
    K.bottomLeftCorner(m, n) = -Eigen::MatrixXd(sys.B);
    K.bottomRightCorner(m, m) = -Eigen::MatrixXd(sys.C.asDiagonal());
    Eigen::VectorXd rhs(n + m);
    rhs << sys.f, -sys.k;
    const Eigen::VectorXd ref = K.fullPivLu().solve(rhs);
    Eigen::VectorXd got(n + m);
    got << s.u, s.p;
    worst = std::max(worst, oracle::relative_error(got, ref));
  }
  Outcome o;
  o.pass = worst <= 1e-6;
  o.detail = "worst relative error " + fmt("%.3g", worst) + " over 20 systems (largest " +
             std::to_string(max_unknowns) + " unknowns)";
  return o;
}

// 5 -------------------------------------------------------------------------
Eigen::VectorXd flatten(const std::vector<Vec3>& x) {
  Eigen::VectorXd v(3 * x.size());
  for (std::size_t i = 0; i < x.size(); ++i) v.segment<3>(3 * i) = x[i];
  return v;
}

void unflatten(const Eigen::VectorXd& v, std::vector<Vec3>& x) {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = v.segment<3>(3 * i);
}

Outcome gradients() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::normal_distribution<double> N(0.0, 1.0);
  double w_stretch = 0, w_bend = 0, w_hinge = 0, w_base = 0, w_edge = 0;

  const GarmentSheet sheet = flat_sheet(4.0, 4.0, 4, 4, Vec3::Zero());
  const GarmentSheet tube = fixtures::floating_tube(5.0, 0, "tube");
  for (int c = 0; c < 50; ++c) {
    ClothState s = make_cloth_state(sheet);
    for (Vec3& p : s.x) p += 0.3 * Vec3(U(rng), U(rng), U(rng));
    const std::size_t nt = s.triangles.size();
    // stretch: total energy vs summed forces
    {
      auto energy = [&](const Eigen::VectorXd& v) {
        ClothState t = s;
        unflatten(v, t.x);
        double e = 0;
        for (std::size_t k = 0; k < nt; ++k) e += stretch_force(t, k).energy;
        return e;
      };
      Eigen::VectorXd g = Eigen::VectorXd::Zero(3 * s.x.size());
      for (std::size_t k = 0; k < nt; ++k) {
        const auto r = stretch_force(s, k);
        for (int i = 0; i < 3; ++i) g.segment<3>(3 * s.triangles[k][i]) -= r.force[i];
      }
      w_stretch = std::max(w_stretch, oracle::relative_error(g, oracle::central_difference(energy, flatten(s.x), 1e-6)));
    }
    // bend: all triangles with full stencils
    {
      s.rest_curvature.assign(nt, Mat2::Zero());
      for (auto& S : s.rest_curvature) S << 0.05 * U(rng), 0.02 * U(rng), 0.02 * U(rng), 0.05 * U(rng);
      for (auto& S : s.rest_curvature) S(1, 0) = S(0, 1);
      auto energy = [&](const Eigen::VectorXd& v) {
        ClothState t = s;
        unflatten(v, t.x);
        double e = 0;
        for (std::size_t k = 0; k < nt; ++k) e += bend_force(t, k).energy;
        return e;
      };
      Eigen::VectorXd g = Eigen::VectorXd::Zero(3 * s.x.size());
      for (std::size_t k = 0; k < nt; ++k) {
        const auto r = bend_force(s, k);
        for (int i = 0; i < 6; ++i) {
          if (r.vertices[i] >= 0) g.segment<3>(3 * r.vertices[i]) -= r.force[i];
        }
      }
      w_bend = std::max(w_bend, oracle::relative_error(g, oracle::central_difference(energy, flatten(s.x), 1e-6)));
    }
    // seam hinge, zero velocity
    {
      ClothState h = make_cloth_state(tube);
      for (Vec3& p : h.x) p += 0.2 * Vec3(U(rng), U(rng), U(rng));
      auto energy = [&](const Eigen::VectorXd& v) {
        ClothState t = h;
        unflatten(v, t.x);
        double e = 0;
        for (const auto& hg : t.hinges) e += seam_bend_force(t, hg).energy;
        return e;
      };
      Eigen::VectorXd g = Eigen::VectorXd::Zero(3 * h.x.size());
      for (const auto& hg : h.hinges) {
        const auto r = seam_bend_force(h, hg);
        for (int i = 0; i < 4; ++i) g.segment<3>(3 * hg.v[i]) -= r.force[i];
      }
      w_hinge = std::max(w_hinge, oracle::relative_error(g, oracle::central_difference(energy, flatten(h.x), 1e-6)));
    }
    // base energy: literal evaluation vs the quadratic form's gradient
    {
      const auto fx = fixtures::two_panel_layout(3, 3, 3.0, 3.0);
      std::vector<Mat2> b(fx.layout.triangles.size());
      for (auto& m : b) m << 1 + 0.3 * U(rng), 0.3 * U(rng), 0.3 * U(rng), 1 + 0.3 * U(rng);
      const BaseQuadratic q = build_base_quadratic(fx.layout, b, 1e-3);
      Eigen::MatrixX2d x = layout_matrix(fx.layout);
      for (Eigen::Index i = 0; i < x.rows(); ++i) x.row(i) += 0.5 * Eigen::RowVector2d(U(rng), U(rng));
      const Eigen::Index n = x.rows();
      auto energy = [&](const Eigen::VectorXd& v) {
        const Eigen::MatrixX2d y = Eigen::Map<const Eigen::MatrixX2d>(v.data(), n, 2);
        return base_energy(y, fx.layout, b, 1e-3);
      };
      const Eigen::MatrixX2d gm = q.gradient(x);
      const Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(gm.data(), 2 * n);
      const Eigen::VectorXd xv = Eigen::Map<const Eigen::VectorXd>(x.data(), 2 * n);
      w_base = std::max(w_base, oracle::relative_error(g, oracle::central_difference(energy, xv, 1e-6)));
    }
    // edge energy with the optimal scale
    {
      const int k = 2 + static_cast<int>(rng() % 4);
      std::vector<Vec2> z(k), r(k);
      std::vector<double> w(k);
      for (int i = 0; i < k; ++i) {
        r[i] = Vec2(N(rng), N(rng));
        z[i] = Vec2(N(rng), N(rng));
        w[i] = 0.5 + std::abs(N(rng));
      }
      const EdgeScaleResult er = edge_scale_and_energy(z, r, w);
      Eigen::VectorXd g(2 * k), zv(2 * k);
      for (int i = 0; i < k; ++i) {
        g.segment<2>(2 * i) = er.gradient[i];
        zv.segment<2>(2 * i) = z[i];
      }
      auto energy = [&](const Eigen::VectorXd& v) {
        std::vector<Vec2> zz(k);
        for (int i = 0; i < k; ++i) zz[i] = v.segment<2>(2 * i);
        return edge_scale_and_energy(zz, r, w).W;
      };
      w_edge = std::max(w_edge, oracle::relative_error(g, oracle::central_difference(energy, zv, 1e-6)));
    }
  }
  const double worst = std::max({w_stretch, w_bend, w_hinge, w_base, w_edge});
  Outcome o;
  o.pass = worst <= 1e-3;
  o.detail = "worst relative error: stretch " + fmt("%.2g", w_stretch) + ", bend " + fmt("%.2g", w_bend) +
             ", seam-bend " + fmt("%.2g", w_hinge) + ", base " + fmt("%.2g", w_base) + ", edge " +
             fmt("%.2g", w_edge);
  return o;
}

// 6 -------------------------------------------------------------------------
Outcome winding_sealing() {
  TubeSpec spec;
  spec.radius = 6.0;
  spec.y_min = 0.0;
  spec.y_max = 20.0;
  spec.segments_per_panel = 12;
  spec.rings = 10;
  const GarmentSheet tube = tube_garment(spec);
  const TriMesh3& m = tube.mesh3d;
  std::vector<Vec3> pts;
  for (int i = 0; i < 100; ++i) pts.push_back(Vec3(0.0, spec.y_min + (i + 0.5) * (spec.y_max - spec.y_min) / 100, 0.0));
  const std::vector<double> batched = winding_numbers_at(m, pts);
  std::mt19937_64 rng(6);
  int disagreements = 0, inside = 0;
  double min_w = 1e300;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double exact = winding_number(pts[i], m);
    const double mc = oracle::monte_carlo_winding(pts[i], m, 4000, rng);
    const bool in_exact = exact > 0.25;
    const bool in_batched = batched[i] > 0.25;
    const bool in_mc = mc > 0.25;
    if (in_exact != in_mc || in_batched != in_mc) ++disagreements;
    inside += in_exact;
    min_w = std::min(min_w, exact);
  }
  Outcome o;
  o.pass = disagreements == 0 && inside == 100;
  o.detail = std::to_string(inside) + "/100 inside, " + std::to_string(disagreements) +
             " disagreements with the Monte-Carlo oracle (lowest winding " + fmt("%.3f", min_w) + ")";
  return o;
}

// 7 -------------------------------------------------------------------------
DrapeItem item_for(const GarmentSheet& g) {
  DrapeItem it;
  it.name = g.name;
  it.layer = g.layer;
  it.garment = g;
  it.rest = g.layout2d;
  return it;
}

Outcome drape_untangling() {
  const auto t0 = Clock::now();
  const TriMesh3 body = fixtures::sphere_body();
  const SimParams sim;
  const double eps = sim.collision.eps_sdf;

  // layer 0 authored at radius 7.0 but placed at 7.6; layer 1 the reverse
  const GarmentSheet inner = fixtures::with_radius(fixtures::floating_tube(7.0, 0, "inner"), 7.6);
  const GarmentSheet outer = fixtures::with_radius(fixtures::floating_tube(7.6, 1, "outer"), 7.0);
  std::vector<DrapeItem> items{item_for(inner), item_for(outer)};
  DrapeParams dp;
  dp.sim = sim;
  dp.grid = drape_grid({body, inner.mesh3d, outer.mesh3d}, 5.0, 128);
  const DrapeResult r = progressive_drape(items, {body}, dp);
  const auto& field = *r.fields[1];
  int ok = 0;
  for (const Vec3& x : r.positions[1]) ok += sample(field, x).value >= -0.05 * eps;
  const double frac = static_cast<double>(ok) / r.positions[1].size();

  // four layers, authored in order
  std::vector<DrapeItem> four;
  std::vector<TriMesh3> all{body};
  const double radii[4] = {7.0, 7.6, 8.2, 8.8};
  for (int l = 0; l < 4; ++l) {
    four.push_back(item_for(fixtures::floating_tube(radii[l], l, "layer" + std::to_string(l))));
    all.push_back(four.back().garment.mesh3d);
  }
  DrapeParams dp4;
  dp4.sim = sim;
  dp4.grid = drape_grid(all, 5.0, 128);
  bool completed = true;
  double worst_pen = 0.0;
  std::string err;
  try {
    const DrapeResult r4 = progressive_drape(four, {body}, dp4);
    for (const auto& s : r4.stats) worst_pen = std::max(worst_pen, s.max_penetration);
  } catch (const std::exception& e) {
    completed = false;
    err = e.what();
  }
  const double secs = seconds_since(t0);
  Outcome o;
  o.pass = frac >= 0.99 && completed && worst_pen <= eps && secs <= 300.0;
  o.detail = fmt("%.1f", 100 * frac) + "% of outer vertices clear; 4-layer " +
             (completed ? "completed, worst penetration " + fmt("%.3g", worst_pen) + " cm" : "failed: " + err) + ", " +
             fmt("%.1f", secs) + " s";
  return o;
}

// 8 -------------------------------------------------------------------------
Outcome rig_pinch() {
  const auto f = fixtures::pinch_fixture();
  const RigTransferResult byn = transfer_by_normal(f.cloth, f.body, f.weights, 15.0);
  const SkinWeights byp = transfer_by_position(f.cloth, f.body, f.weights);
  int normal_wrong = 0, position_wrong = 0;
  for (std::size_t v = 0; v < f.cloth.positions.size(); ++v) {
    normal_wrong += byn.weights.dominant_joint(v) != f.correct_joint;
    position_wrong += byp.dominant_joint(v) != f.correct_joint;
  }
  bool unity = true;
  for (const SkinWeights* w : {&byn.weights, &byp}) {
    try {
      w->validate(static_cast<long>(f.cloth.positions.size()));
    } catch (const std::exception&) {
      unity = false;
    }
  }
  Outcome o;
  o.pass = normal_wrong == 0 && position_wrong >= 1 && unity;
  o.detail = "normal transfer wrong on " + std::to_string(normal_wrong) + "/" + std::to_string(f.cloth.positions.size()) +
             ", positional wrong on " + std::to_string(position_wrong) + ", partition of unity " + (unity ? "holds" : "violated");
  return o;
}

// 9 -------------------------------------------------------------------------
Outcome momentum_audit() {
  ClothState s = make_cloth_state(fixtures::two_cloth_scene());
  const SimParams p;
  double worst = 0.0;
  long contacts = 0;
  for (int f = 0; f < 6; ++f) {
    for (int k = 0; k < p.substeps; ++k) {
      const SubstepStats st = step(s, p.substep_dt(), p, k + 1 == p.substeps);
      contacts += st.cloth.contacts;
      if (st.cloth.impulse_magnitude > 0.0) {
        worst = std::max(worst, st.cloth.momentum_change.norm() / st.cloth.impulse_magnitude);
      }
    }
  }
  Outcome o;
  o.pass = contacts > 0 && worst <= 1e-10;
  o.detail = "worst relative momentum change " + fmt("%.3g", worst) + " over " + std::to_string(contacts) +
             " cloth contacts";
  return o;
}

// 10 ------------------------------------------------------------------------
Outcome determinism() {
  const TriMesh3 body = fixtures::sphere_body();
  const fs::path dir = scratch("determinism");
  const fs::path manifest = fixtures::write_outfit(
      dir / "in", body, {fixtures::floating_tube(7.0, 0, "inner"), fixtures::floating_tube(7.6, 1, "outer")});
  PipelineConfig cfg;
  cfg.threads = 1;
  const OutfitManifest m = read_manifest(manifest);
  const RunReport a = run_pipeline(m, cfg, dir / "a");
  const RunReport b = run_pipeline(m, cfg, dir / "b");
  int files = 0, same = 0;
  if (a.ok && b.ok) {
    for (const auto& e : fs::recursive_directory_iterator(dir / "a")) {
      if (e.path().extension() != ".obj") continue;
      ++files;
      same += slurp(e.path()) == slurp(dir / "b" / fs::relative(e.path(), dir / "a"));
    }
  }
  Outcome o;
  o.pass = a.ok && b.ok && files == 2 && same == files;
  o.detail = std::to_string(same) + "/" + std::to_string(files) + " OBJ outputs byte-identical" +
             (a.ok && b.ok ? "" : " (run failed: " + a.error_message + b.error_message + ")");
  return o;
}

} // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"identity transfer fixed point", identity_transfer},
      {"pattern recovery", pattern_recovery},
      {"seam-length consistency", seam_length_consistency},
      {"Schur-CG vs dense solve", schur_vs_dense},
      {"energy gradients vs finite differences", gradients},
      {"winding-number sealing of an open tube", winding_sealing},
      {"progressive-drape untangling", drape_untangling},
      {"rig transfer pinch fixture", rig_pinch},
      {"cloth-cloth momentum audit", momentum_audit},
      {"pipeline determinism", determinism},
  };
  int only = argc > 1 ? std::atoi(argv[1]) : 0;
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (only && static_cast<int>(i) + 1 != only) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("[%2zu] %-42s %s  %s\n", i + 1, criteria[i].first.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
