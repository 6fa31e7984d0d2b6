#include "bolt/pattern_opt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <Eigen/SVD>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "bolt/error.hpp"
#include "bolt/parallel.hpp"

namespace bolt {

namespace {

Mat2 edge_matrix_2d(const PatternLayout2D& l, const Tri& f) {
  Mat2 E;
  E.col(0) = l.positions2d[f[1]] - l.positions2d[f[0]];
  E.col(1) = l.positions2d[f[2]] - l.positions2d[f[0]];
  return E;
}

Mat32 edge_matrix_3d(const TriMesh3& m, const Tri& f) {
  Mat32 E;
  E.col(0) = m.positions[f[1]] - m.positions[f[0]];
  E.col(1) = m.positions[f[2]] - m.positions[f[0]];
  return E;
}

void require_same_triangulation(const std::vector<Tri>& a, const std::vector<Tri>& b,
                                const char* what) {
  if (a != b) throw ValidationError(std::string(what) + ": triangulations differ");
}

} // namespace

TangentBinding bind_tangents(const PatternLayout2D& layout, const TriMesh3& mesh3d) {
  require_same_triangulation(layout.triangles, mesh3d.triangles, "bind_tangents");
  TangentBinding b;
  b.M.resize(layout.triangles.size());
  for (std::size_t t = 0; t < layout.triangles.size(); ++t) {
    const Mat2 E = edge_matrix_2d(layout, layout.triangles[t]);
    const double det = E.determinant();
    if (std::abs(det) <= 2.0 * kMinTriangleArea) {
      throw ValidationError("2D triangle " + std::to_string(t) + " has a singular edge matrix");
    }
    b.M[t] = E.inverse();
  }
  return b;
}

std::vector<Mat32> tangent_frames(const TangentBinding& binding, const TriMesh3& mesh3d) {
  std::vector<Mat32> F(mesh3d.triangles.size());
  for (std::size_t t = 0; t < F.size(); ++t) {
    F[t] = edge_matrix_3d(mesh3d, mesh3d.triangles[t]) * binding.M[t];
  }
  return F;
}

Polar32 polar_3x2(const Mat32& F, int triangle) {
  Eigen::JacobiSVD<Mat32> svd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec2 s = svd.singularValues();
  if (!(s[1] > 1e-12 * std::max(s[0], 1e-300))) {
    throw NumericalError("tangent frame of triangle " + std::to_string(triangle) +
                         " is rank deficient (crumpled)");
  }
  Polar32 p;
  p.R = svd.matrixU().leftCols<2>() * svd.matrixV().transpose();
  p.S = svd.matrixV() * s.asDiagonal() * svd.matrixV().transpose();
  return p;
}

FrameMode frame_mode_from_string(const std::string& s) {
  if (s == "loose") return FrameMode::Loose;
  if (s == "preserve_fit") return FrameMode::PreserveFit;
  throw ConfigError("unknown frame mode '" + s + "' (expected loose or preserve_fit)");
}

const char* to_string(FrameMode m) { return m == FrameMode::Loose ? "loose" : "preserve_fit"; }

TargetFrames build_target_frames(const TangentBinding& binding, const TriMesh3& source3d,
                                 const TriMesh3& target3d, FrameMode mode) {
  require_same_triangulation(source3d.triangles, target3d.triangles, "build_target_frames");
  const auto Fs = tangent_frames(binding, source3d);
  const auto Ft = tangent_frames(binding, target3d);
  TargetFrames out;
  out.target.resize(Ft.size());
  out.b.resize(Ft.size());
  for (std::size_t t = 0; t < Ft.size(); ++t) {
    const int ti = static_cast<int>(t);
    const Polar32 pt = polar_3x2(Ft[t], ti);
    out.target[t] = mode == FrameMode::Loose ? pt.R : Mat32(pt.R * polar_3x2(Fs[t], ti).S);
    const Mat32 E = edge_matrix_3d(target3d, target3d.triangles[t]);
    out.b[t] = (E.transpose() * E).inverse() * E.transpose() * out.target[t];
  }
  return out;
}

double BaseQuadratic::energy(const Eigen::MatrixX2d& x) const {
  double e = constant;
  for (int r = 0; r < 2; ++r) {
    e += 0.5 * x.col(r).dot(H * x.col(r)) - rhs.col(r).dot(x.col(r));
  }
  return e;
}

Eigen::MatrixX2d BaseQuadratic::gradient(const Eigen::MatrixX2d& x) const {
  Eigen::MatrixX2d g(x.rows(), 2);
  for (int r = 0; r < 2; ++r) g.col(r) = H * x.col(r) - rhs.col(r);
  return g;
}

namespace {

// P_t(x) = X * G for the 2 x 3 vertex matrix X.
Eigen::Matrix<double, 3, 2> edge_selector() {
  Eigen::Matrix<double, 3, 2> G;
  G << -1, -1, 1, 0, 0, 1;
  return G;
}

double rest_area(const PatternLayout2D& rest, std::size_t t) { return rest.signed_area(t); }

} // namespace

BaseQuadratic build_base_quadratic(const PatternLayout2D& rest, const std::vector<Mat2>& b,
                                   double eps) {
  const auto n = static_cast<Eigen::Index>(rest.positions2d.size());
  if (b.size() != rest.triangles.size()) throw ConfigError("one frame binding per triangle required");
  const auto G = edge_selector();
  BaseQuadratic q;
  q.rhs = Eigen::MatrixX2d::Zero(n, 2);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(rest.triangles.size() * 9 + static_cast<std::size_t>(n));
  for (std::size_t t = 0; t < rest.triangles.size(); ++t) {
    const Tri& f = rest.triangles[t];
    const double A = rest_area(rest, t);
    const Eigen::Matrix<double, 3, 2> W = G * b[t];
    const Mat3 Hl = A * W * W.transpose();
    for (int a = 0; a < 3; ++a) {
      for (int c = 0; c < 3; ++c) trips.emplace_back(f[a], f[c], Hl(a, c));
      for (int r = 0; r < 2; ++r) q.rhs(f[a], r) += A * W(a, r);
    }
    q.constant += A; // 1/2 A |I|^2
  }
  for (Eigen::Index v = 0; v < n; ++v) {
    trips.emplace_back(static_cast<int>(v), static_cast<int>(v), eps);
    const Vec2& p0 = rest.positions2d[v];
    q.rhs.row(v) += eps * p0.transpose();
    q.constant += 0.5 * eps * p0.squaredNorm();
  }
  q.H.resize(n, n);
  q.H.setFromTriplets(trips.begin(), trips.end());
  return q;
}

double base_energy(const Eigen::MatrixX2d& x, const PatternLayout2D& rest,
                   const std::vector<Mat2>& b, double eps) {
  double e = 0.0;
  for (std::size_t t = 0; t < rest.triangles.size(); ++t) {
    const Tri& f = rest.triangles[t];
    Mat2 P;
    P.col(0) = (x.row(f[1]) - x.row(f[0])).transpose();
    P.col(1) = (x.row(f[2]) - x.row(f[0])).transpose();
    e += 0.5 * rest_area(rest, t) * (P * b[t] - Mat2::Identity()).squaredNorm();
  }
  for (std::size_t v = 0; v < rest.positions2d.size(); ++v) {
    e += 0.5 * eps * (x.row(static_cast<Eigen::Index>(v)).transpose() - rest.positions2d[v]).squaredNorm();
  }
  return e;
}

EdgeScaleResult edge_scale_and_energy(const std::vector<Vec2>& z, const std::vector<Vec2>& rest,
                                      const std::vector<double>& weights) {
  if (z.size() != rest.size() || z.size() != weights.size()) {
    throw ConfigError("edge_scale_and_energy: mismatched vector counts");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    num += weights[k] * z[k].dot(rest[k]);
    den += weights[k] * rest[k].squaredNorm();
  }
  if (!(den > 0.0)) throw ValidationError("degenerate boundary vertex: rest vectors are zero");
  EdgeScaleResult r;
  r.S = num / den;
  r.gradient.resize(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    const Vec2 d = z[k] - r.S * rest[k];
    r.W += 0.5 * weights[k] * d.squaredNorm();
    r.gradient[k] = weights[k] * d;
  }
  return r;
}

void PatternConfig::validate() const {
  if (!(epsilon > 0.0)) throw ConfigError("pattern: epsilon must be > 0");
  if (!(admm_stiffness > 0.0)) throw ConfigError("pattern: admm_stiffness must be > 0");
  if (!(edge_weight >= 0.0)) throw ConfigError("pattern: edge_weight must be >= 0");
  if (max_iterations < 1 || stall_window < 1) throw ConfigError("pattern: iteration limits must be positive");
  if (!(tolerance > 0.0)) throw ConfigError("pattern: tolerance must be > 0");
}

void to_json(nlohmann::json& j, const PatternConfig& c) {
  j = {{"mode", to_string(c.mode)},       {"epsilon", c.epsilon},
       {"admm_stiffness", c.admm_stiffness}, {"edge_weight", c.edge_weight},
       {"max_iterations", c.max_iterations}, {"tolerance", c.tolerance},
       {"stall_window", c.stall_window},     {"internal_seams", c.internal_seams},
       {"tidy", c.tidy}};
}

void from_json(const nlohmann::json& j, PatternConfig& c) {
  const PatternConfig d;
  c.mode = frame_mode_from_string(j.value("mode", std::string(to_string(d.mode))));
  c.epsilon = j.value("epsilon", d.epsilon);
  c.admm_stiffness = j.value("admm_stiffness", d.admm_stiffness);
  c.edge_weight = j.value("edge_weight", d.edge_weight);
  c.max_iterations = j.value("max_iterations", d.max_iterations);
  c.tolerance = j.value("tolerance", d.tolerance);
  c.stall_window = j.value("stall_window", d.stall_window);
  c.internal_seams = j.value("internal_seams", d.internal_seams);
  c.tidy = j.value("tidy", d.tidy);
}

std::vector<EdgeConstraint> build_edge_constraints(const PatternLayout2D& rest,
                                                   const SeamSpec& seams, bool internal_seams) {
  const std::size_t n = rest.positions2d.size();
  const auto border = border_neighbors(rest.triangles, n);
  std::vector<std::vector<int>> adjacency;
  const bool have_groups = seams.vertex_group.size() == n;
  if (internal_seams && have_groups) adjacency = vertex_adjacency(rest.triangles, n);
  auto on_seam = [&](int v) { return have_groups && seams.vertex_group[v] >= 0; };

  std::vector<EdgeConstraint> out;
  std::map<int, int> group_ids;
  for (std::size_t vi = 0; vi < n; ++vi) {
    const int v = static_cast<int>(vi);
    std::vector<int> nbrs = border[vi];
    if (nbrs.empty() && internal_seams && on_seam(v)) {
      for (int w : adjacency[vi]) {
        if (on_seam(w) && rest.panel_id[w] == rest.panel_id[vi]) nbrs.push_back(w);
      }
    }
    if (nbrs.empty()) continue;
    EdgeConstraint c;
    c.i = v;
    c.j = nbrs[0];
    c.k = nbrs.size() > 1 ? nbrs[1] : nbrs[0];
    c.rest0 = rest.positions2d[c.j] - rest.positions2d[v];
    c.rest1 = rest.positions2d[c.k] - rest.positions2d[v];
    c.L = 0.5 * (c.rest0.norm() + c.rest1.norm());
    if (!(c.L > 0.0)) {
      throw ValidationError("degenerate boundary vertex " + std::to_string(v) +
                            ": zero rest edge vectors");
    }
    const int key = on_seam(v) ? seams.vertex_group[v] : -1 - v;
    const auto [it, fresh] = group_ids.emplace(key, static_cast<int>(group_ids.size()));
    (void)fresh;
    c.group = it->second;
    out.push_back(c);
  }
  return out;
}

namespace {

struct Stacked {
  Vec2 a;
  Vec2 b;
};

Stacked apply_d(const EdgeConstraint& c, const Eigen::MatrixX2d& x) {
  return {(x.row(c.j) - x.row(c.i)).transpose(), (x.row(c.k) - x.row(c.i)).transpose()};
}

// Adds w * D^T s into g (N x 2).
void add_dt(const EdgeConstraint& c, double w, const Stacked& s, Eigen::MatrixX2d& g) {
  g.row(c.j) += w * s.a.transpose();
  g.row(c.k) += w * s.b.transpose();
  g.row(c.i) -= w * (s.a + s.b).transpose();
}

} // namespace

Eigen::MatrixX2d admm_optimize(const BaseQuadratic& base,
                               const std::vector<EdgeConstraint>& cons,
                               const PatternConfig& cfg, AdmmReport* report) {
  AdmmReport local;
  AdmmReport& rep = report ? *report : local;
  rep = AdmmReport{};
  const auto n = base.H.rows();

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> base_solver(base.H);
  if (base_solver.info() != Eigen::Success) throw NumericalError("base quadratic is not SPD");
  Eigen::MatrixX2d x = base_solver.solve(base.rhs);
  if (cons.empty()) {
    rep.converged = true;
    return x;
  }

  const std::size_t m = cons.size();
  std::vector<double> w(m), L(m);
  int groups = 0;
  for (std::size_t i = 0; i < m; ++i) {
    L[i] = cfg.edge_weight * cons[i].L;
    w[i] = cfg.admm_stiffness * cons[i].L;
    groups = std::max(groups, cons[i].group + 1);
  }
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(groups));
  for (std::size_t i = 0; i < m; ++i) members[cons[i].group].push_back(i);

  // K = H + sum w_i D_i^T D_i
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(base.H.nonZeros()) + m * 9);
  for (int k = 0; k < base.H.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(base.H, k); it; ++it) {
      trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    const EdgeConstraint& c = cons[i];
    for (int nb : {c.j, c.k}) {
      trips.emplace_back(nb, nb, w[i]);
      trips.emplace_back(c.i, c.i, w[i]);
      trips.emplace_back(nb, c.i, -w[i]);
      trips.emplace_back(c.i, nb, -w[i]);
    }
  }
  Eigen::SparseMatrix<double> K(n, n);
  K.setFromTriplets(trips.begin(), trips.end());
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(K);
  if (solver.info() != Eigen::Success) throw NumericalError("ADMM system matrix is not SPD");

  std::vector<Stacked> z(m), u(m, Stacked{Vec2::Zero(), Vec2::Zero()}), dx(m);
  auto z_update = [&](const std::vector<Stacked>& v) {
    parallel_for(0, members.size(), [&](std::size_t g) {
      double num = 0.0;
      double den = 0.0;
      for (std::size_t i : members[g]) {
        const double ci = L[i] * w[i] / (L[i] + w[i]);
        num += ci * (v[i].a.dot(cons[i].rest0) + v[i].b.dot(cons[i].rest1));
        den += ci * (cons[i].rest0.squaredNorm() + cons[i].rest1.squaredNorm());
      }
      const double S = den > 0.0 ? num / den : 0.0;
      for (std::size_t i : members[g]) {
        const double s = L[i] + w[i];
        if (s == 0.0) {
          z[i] = v[i];
          continue;
        }
        z[i].a = (L[i] * S * cons[i].rest0 + w[i] * v[i].a) / s;
        z[i].b = (L[i] * S * cons[i].rest1 + w[i] * v[i].b) / s;
      }
    });
  };
  for (std::size_t i = 0; i < m; ++i) dx[i] = apply_d(cons[i], x);
  z_update(dx);

  Eigen::MatrixX2d best = x;
  double best_score = std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    Eigen::MatrixX2d rhs = base.rhs;
    for (std::size_t i = 0; i < m; ++i) {
      add_dt(cons[i], w[i], {z[i].a - u[i].a, z[i].b - u[i].b}, rhs);
    }
    x = solver.solve(rhs);
    if (!x.allFinite()) throw NumericalError("ADMM produced non-finite layout at iteration " + std::to_string(it));
    std::vector<Stacked> v(m);
    for (std::size_t i = 0; i < m; ++i) {
      dx[i] = apply_d(cons[i], x);
      v[i] = {dx[i].a + u[i].a, dx[i].b + u[i].b};
    }
    const std::vector<Stacked> z_prev = z;
    z_update(v);
    double r2 = 0.0, dx2 = 0.0, z2 = 0.0, wz2 = 0.0, merit = 0.0;
    Eigen::MatrixX2d s_vec = Eigen::MatrixX2d::Zero(n, 2);
    Eigen::MatrixX2d u_vec = Eigen::MatrixX2d::Zero(n, 2);
    for (std::size_t i = 0; i < m; ++i) {
      const Stacked diff{dx[i].a - z[i].a, dx[i].b - z[i].b};
      u[i].a += diff.a;
      u[i].b += diff.b;
      r2 += diff.a.squaredNorm() + diff.b.squaredNorm();
      merit += w[i] * (diff.a.squaredNorm() + diff.b.squaredNorm() + (z[i].a - z_prev[i].a).squaredNorm() +
                       (z[i].b - z_prev[i].b).squaredNorm());
      dx2 += dx[i].a.squaredNorm() + dx[i].b.squaredNorm();
      const double zn = z[i].a.squaredNorm() + z[i].b.squaredNorm();
      z2 += zn;
      wz2 += w[i] * w[i] * zn;
      add_dt(cons[i], w[i], {z[i].a - z_prev[i].a, z[i].b - z_prev[i].b}, s_vec);
      add_dt(cons[i], w[i], u[i], u_vec);
    }
    const double r = std::sqrt(r2);
    const double s = s_vec.norm();
    rep.primal_residuals.push_back(r);
    rep.dual_residuals.push_back(s);
    rep.combined_residuals.push_back(std::sqrt(merit));
    rep.iterations = it;
    const double eps_pri = cfg.tolerance * std::max(std::sqrt(dx2), std::sqrt(z2));
    const double eps_dual = cfg.tolerance * std::max(u_vec.norm(), std::sqrt(wz2));
    const double score = std::sqrt(merit);
    if (score < best_score) {
      best_score = score;
      best = x;
      since_best = 0;
    } else if (++since_best >= cfg.stall_window) {
      const std::string msg = "ADMM residual did not decrease for " +
                              std::to_string(cfg.stall_window) +
                              " iterations; returning the best iterate";
      spdlog::warn("{}", msg);
      rep.warnings.push_back(msg);
      return best;
    }
    if (r <= eps_pri && s <= eps_dual) {
      rep.converged = true;
      return x;
    }
  }
  rep.warnings.push_back("ADMM reached the iteration limit before converging");
  spdlog::warn("ADMM stopped at {} iterations without meeting the tolerance", cfg.max_iterations);
  return x;
}

namespace {

std::vector<Eigen::Triplet<double>> cotan_triplets(const PatternLayout2D& rest) {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(rest.triangles.size() * 12);
  for (std::size_t t = 0; t < rest.triangles.size(); ++t) {
    const Tri& f = rest.triangles[t];
    for (int c = 0; c < 3; ++c) {
      const int o = f[c];
      const int a = f[(c + 1) % 3];
      const int b = f[(c + 2) % 3];
      const Vec2 ea = rest.positions2d[a] - rest.positions2d[o];
      const Vec2 eb = rest.positions2d[b] - rest.positions2d[o];
      const double cross = ea.x() * eb.y() - ea.y() * eb.x();
      const double w = 0.5 * ea.dot(eb) / std::abs(cross);
      trips.emplace_back(a, a, w);
      trips.emplace_back(b, b, w);
      trips.emplace_back(a, b, -w);
      trips.emplace_back(b, a, -w);
    }
  }
  return trips;
}

} // namespace

double dirichlet_energy(const Eigen::MatrixX2d& x, const PatternLayout2D& rest) {
  const auto trips = cotan_triplets(rest);
  Eigen::SparseMatrix<double> Lm(x.rows(), x.rows());
  Lm.setFromTriplets(trips.begin(), trips.end());
  double e = 0.0;
  for (int r = 0; r < 2; ++r) e += 0.5 * x.col(r).dot(Lm * x.col(r));
  return e;
}

Eigen::MatrixX2d dirichlet_tidy(const Eigen::MatrixX2d& x, const std::vector<char>& pinned,
                                const PatternLayout2D& rest) {
  const auto n = x.rows();
  std::vector<int> free_index(static_cast<std::size_t>(n), -1);
  int nf = 0;
  for (Eigen::Index v = 0; v < n; ++v) {
    if (!pinned[v]) free_index[v] = nf++;
  }
  if (nf == 0) return x;
  // panels without any pinned vertex keep their layout
  std::vector<char> panel_pinned(static_cast<std::size_t>(rest.panel_count()), 0);
  for (Eigen::Index v = 0; v < n; ++v) {
    if (pinned[v]) panel_pinned[rest.panel_id[v]] = 1;
  }
  std::vector<char> fixed(static_cast<std::size_t>(n));
  for (Eigen::Index v = 0; v < n; ++v) fixed[v] = pinned[v] || !panel_pinned[rest.panel_id[v]];
  nf = 0;
  for (Eigen::Index v = 0; v < n; ++v) free_index[v] = fixed[v] ? -1 : nf++;
  if (nf == 0) return x;

  std::vector<Eigen::Triplet<double>> lii;
  Eigen::MatrixX2d rhs = Eigen::MatrixX2d::Zero(nf, 2);
  for (const auto& tr : cotan_triplets(rest)) {
    const int fr = free_index[tr.row()];
    if (fr < 0) continue;
    const int fc = free_index[tr.col()];
    if (fc >= 0) {
      lii.emplace_back(fr, fc, tr.value());
    } else {
      rhs.row(fr) -= tr.value() * x.row(tr.col());
    }
  }
  Eigen::SparseMatrix<double> A(nf, nf);
  A.setFromTriplets(lii.begin(), lii.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success) throw NumericalError("Dirichlet tidy system is singular");
  const Eigen::MatrixX2d sol = lu.solve(rhs);
  Eigen::MatrixX2d out = x;
  for (Eigen::Index v = 0; v < n; ++v) {
    if (free_index[v] >= 0) out.row(v) = sol.row(free_index[v]);
  }
  return out;
}

double SeamLengthDelta::relative_delta() const {
  const double m = std::max(length_a, length_b);
  return m > 0.0 ? std::abs(length_a - length_b) / m : 0.0;
}

std::vector<SeamLengthDelta> seam_length_deltas(const Eigen::MatrixX2d& x,
                                                const PatternLayout2D& layout,
                                                const SeamSpec& seams) {
  const std::size_t n = layout.positions2d.size();
  std::vector<std::vector<int>> partner(n);
  for (const auto& [a, b] : seams.pairs) {
    partner[a].push_back(b);
    partner[b].push_back(a);
  }
  std::set<std::pair<int, int>> edges;
  for (const Tri& f : layout.triangles) {
    for (int i = 0; i < 3; ++i) {
      const int a = f[i];
      const int b = f[(i + 1) % 3];
      edges.insert({std::min(a, b), std::max(a, b)});
    }
  }
  std::map<std::pair<int, int>, SeamLengthDelta> by_panels;
  for (const auto& [a, b] : edges) {
    for (int pa : partner[a]) {
      for (int pb : partner[b]) {
        if (!edges.count({std::min(pa, pb), std::max(pa, pb)})) continue;
        const int P = layout.panel_id[a];
        const int Q = layout.panel_id[pa];
        if (P >= Q) continue;
        SeamLengthDelta& d = by_panels[{P, Q}];
        d.panel_a = P;
        d.panel_b = Q;
        d.length_a += (x.row(a) - x.row(b)).norm();
        d.length_b += (x.row(pa) - x.row(pb)).norm();
      }
    }
  }
  std::vector<SeamLengthDelta> out;
  for (const auto& [key, d] : by_panels) out.push_back(d);
  return out;
}

void to_json(nlohmann::json& j, const PatternReport& r) {
  nlohmann::json seams = nlohmann::json::array();
  for (const auto& s : r.seams) {
    seams.push_back({{"panel_a", s.panel_a},
                     {"panel_b", s.panel_b},
                     {"length_a", s.length_a},
                     {"length_b", s.length_b},
                     {"relative_delta", s.relative_delta()}});
  }
  j = {{"admm_iterations", r.admm.iterations},
       {"admm_converged", r.admm.converged},
       {"primal_residuals", r.admm.primal_residuals},
       {"dual_residuals", r.admm.dual_residuals},
       {"combined_residuals", r.admm.combined_residuals},
       {"seam_lengths", seams},
       {"flipped_triangles", r.flipped_triangles},
       {"max_vertex_shift", r.max_vertex_shift},
       {"warnings", r.admm.warnings}};
}

Eigen::MatrixX2d layout_matrix(const PatternLayout2D& layout) {
  Eigen::MatrixX2d x(static_cast<Eigen::Index>(layout.positions2d.size()), 2);
  for (std::size_t v = 0; v < layout.positions2d.size(); ++v) {
    x.row(static_cast<Eigen::Index>(v)) = layout.positions2d[v].transpose();
  }
  return x;
}

PatternResult optimize_pattern(const GarmentSheet& garment, const TriMesh3& source3d,
                               const TriMesh3& target3d, const PatternConfig& cfg) {
  cfg.validate();
  const PatternLayout2D& rest = garment.layout2d;
  const TangentBinding binding = bind_tangents(rest, source3d);
  const TargetFrames frames = build_target_frames(binding, source3d, target3d, cfg.mode);
  const BaseQuadratic base = build_base_quadratic(rest, frames.b, cfg.epsilon);
  const auto cons = build_edge_constraints(rest, garment.seams, cfg.internal_seams);

  PatternResult res;
  Eigen::MatrixX2d x = admm_optimize(base, cons, cfg, &res.report.admm);
  if (cfg.tidy) {
    std::vector<char> pinned(rest.positions2d.size(), 0);
    for (const auto& c : cons) pinned[c.i] = 1;
    const auto border = border_neighbors(rest.triangles, rest.positions2d.size());
    for (std::size_t v = 0; v < pinned.size(); ++v) {
      if (!border[v].empty()) pinned[v] = 1;
      if (garment.seams.vertex_group.size() == pinned.size() && garment.seams.vertex_group[v] >= 0) {
        pinned[v] = 1;
      }
    }
    x = dirichlet_tidy(x, pinned, rest);
  }

  res.layout = rest;
  const Eigen::MatrixX2d x0 = layout_matrix(rest);
  for (std::size_t v = 0; v < rest.positions2d.size(); ++v) {
    res.layout.positions2d[v] = x.row(static_cast<Eigen::Index>(v)).transpose();
  }
  res.report.max_vertex_shift = (x - x0).rowwise().norm().maxCoeff();
  res.report.seams = seam_length_deltas(x, rest, garment.seams);
  for (std::size_t t = 0; t < rest.triangles.size(); ++t) {
    if (res.layout.signed_area(t) <= 0.0) res.report.flipped_triangles.push_back(static_cast<int>(t));
  }
  if (!res.report.flipped_triangles.empty()) {
    std::ostringstream os;
    os << "pattern optimization flipped " << res.report.flipped_triangles.size()
       << " triangles (first: " << res.report.flipped_triangles.front() << ")";
    throw NumericalError(os.str());
  }
  return res;
}

void write_pattern_svg(const PatternLayout2D& before, const PatternLayout2D& after,
                       const std::filesystem::path& path) {
  Eigen::AlignedBox2d box;
  box.setEmpty();
  for (const auto& p : before.positions2d) box.extend(p);
  for (const auto& p : after.positions2d) box.extend(p);
  if (box.isEmpty()) box.extend(Vec2::Zero());
  const double margin = 0.05 * std::max(box.sizes().maxCoeff(), 1.0);
  const Vec2 lo = box.min() - Vec2::Constant(margin);
  const Vec2 size = box.sizes() + Vec2::Constant(2.0 * margin);

  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 " << size.x() << ' ' << size.y()
      << "\" width=\"800\" height=\"" << 800.0 * size.y() / size.x() << "\">\n";
  auto outline = [&](const PatternLayout2D& l, const char* color, const char* dash) {
    const auto border = border_neighbors(l.triangles, l.positions2d.size());
    out << "<g stroke=\"" << color << "\" stroke-width=\"" << 0.002 * size.maxCoeff()
        << "\" fill=\"none\"" << dash << ">\n";
    for (std::size_t v = 0; v < border.size(); ++v) {
      for (int w : border[v]) {
        if (static_cast<int>(v) > w) continue;
        const Vec2 a = l.positions2d[v] - lo;
        const Vec2 b = l.positions2d[w] - lo;
        // SVG y axis points down
        out << "<line x1=\"" << a.x() << "\" y1=\"" << size.y() - a.y() << "\" x2=\"" << b.x()
            << "\" y2=\"" << size.y() - b.y() << "\"/>\n";
      }
    }
    out << "</g>\n";
  };
  outline(before, "#888888", " stroke-dasharray=\"1,1\"");
  outline(after, "#1f5fbf", "");
  out << "</svg>\n";
}

} // namespace bolt
