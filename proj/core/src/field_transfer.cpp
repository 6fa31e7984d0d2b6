#include "bolt/field_transfer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include <Eigen/IterativeLinearSolvers>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "bolt/bvh.hpp"
#include "bolt/parallel.hpp"
#include "bolt/sdf.hpp"

namespace bolt {

void TransferConfig::validate() const {
  if (!(viscosity > 0.0)) throw ConfigError("transfer: viscosity must be > 0");
  if (!(compliance > 0.0)) throw ConfigError("transfer: compliance must be > 0");
  if (!(penalty_scale > 0.0)) throw ConfigError("transfer: penalty_scale must be > 0");
  if (quadrature_order < 1 || quadrature_order > 3) {
    throw ConfigError("transfer: quadrature_order must be 1, 2 or 3");
  }
  if (!(cell_size > 0.0)) throw ConfigError("transfer: cell_size must be > 0");
  if (!(band_width >= 2.0 * cell_size)) {
    throw ConfigError("transfer: band_width must be at least twice the cell size");
  }
  if (!(cg_tolerance > 0.0) || !(fixed_point_tolerance > 0.0) || !(gap_threshold > 0.0)) {
    throw ConfigError("transfer: tolerances must be > 0");
  }
  if (cg_max_iterations < 1 || fixed_point_max_iterations < 1 || max_restarts < 0) {
    throw ConfigError("transfer: iteration limits must be positive");
  }
}

void to_json(nlohmann::json& j, const TransferConfig& c) {
  j = {{"viscosity", c.viscosity},
       {"compliance", c.compliance},
       {"penalty_scale", c.penalty_scale},
       {"quadrature_order", c.quadrature_order},
       {"cell_size", c.cell_size},
       {"band_width", c.band_width},
       {"cg_tolerance", c.cg_tolerance},
       {"cg_max_iterations", c.cg_max_iterations},
       {"fixed_point_max_iterations", c.fixed_point_max_iterations},
       {"fixed_point_tolerance", c.fixed_point_tolerance},
       {"gap_threshold", c.gap_threshold},
       {"max_restarts", c.max_restarts}};
}

void from_json(const nlohmann::json& j, TransferConfig& c) {
  const TransferConfig d;
  c.viscosity = j.value("viscosity", d.viscosity);
  c.compliance = j.value("compliance", d.compliance);
  c.penalty_scale = j.value("penalty_scale", d.penalty_scale);
  c.quadrature_order = j.value("quadrature_order", d.quadrature_order);
  c.cell_size = j.value("cell_size", d.cell_size);
  c.band_width = j.value("band_width", d.band_width);
  c.cg_tolerance = j.value("cg_tolerance", d.cg_tolerance);
  c.cg_max_iterations = j.value("cg_max_iterations", d.cg_max_iterations);
  c.fixed_point_max_iterations = j.value("fixed_point_max_iterations", d.fixed_point_max_iterations);
  c.fixed_point_tolerance = j.value("fixed_point_tolerance", d.fixed_point_tolerance);
  c.gap_threshold = j.value("gap_threshold", d.gap_threshold);
  c.max_restarts = j.value("max_restarts", d.max_restarts);
}

std::int64_t lattice_key(const Lattice& c) {
  constexpr std::int64_t bias = 1 << 20;
  return ((std::int64_t{c[0]} + bias) << 42) | ((std::int64_t{c[1]} + bias) << 21) |
         (std::int64_t{c[2]} + bias);
}

int SparseDisplacementGrid::find_cell(const Lattice& c) const {
  const auto it = cell_lookup.find(lattice_key(c));
  return it == cell_lookup.end() ? -1 : it->second;
}

int SparseDisplacementGrid::find_node(const Lattice& n) const {
  const auto it = node_lookup.find(lattice_key(n));
  return it == node_lookup.end() ? -1 : it->second;
}

Vec3 SparseDisplacementGrid::node_position(int n) const {
  return cell_size * Vec3(nodes[n][0], nodes[n][1], nodes[n][2]);
}

Vec3 SparseDisplacementGrid::cell_center(int c) const {
  return cell_size * (Vec3(cells[c][0], cells[c][1], cells[c][2]) + Vec3::Constant(0.5));
}

Lattice SparseDisplacementGrid::cell_of(const Vec3& x) const {
  return {static_cast<int>(std::floor(x.x() / cell_size)),
          static_cast<int>(std::floor(x.y() / cell_size)),
          static_cast<int>(std::floor(x.z() / cell_size))};
}

namespace {

// Trilinear weights of the 8 corners at local coordinates t in [0,1]^3.
std::array<double, 8> corner_weights(const Vec3& t) {
  std::array<double, 8> w{};
  for (int c = 0; c < 8; ++c) {
    w[c] = ((c >> 2 & 1) ? t[0] : 1.0 - t[0]) * ((c >> 1 & 1) ? t[1] : 1.0 - t[1]) *
           ((c & 1) ? t[2] : 1.0 - t[2]);
  }
  return w;
}

// d(phi_c)/dx at local coordinates t, for a cell of size h.
Eigen::Matrix<double, 8, 3> corner_gradients(const Vec3& t, double h) {
  Eigen::Matrix<double, 8, 3> g;
  for (int c = 0; c < 8; ++c) {
    const int b[3] = {c >> 2 & 1, c >> 1 & 1, c & 1};
    for (int d = 0; d < 3; ++d) {
      double v = (b[d] ? 1.0 : -1.0) / h;
      for (int e = 0; e < 3; ++e) {
        if (e != d) v *= b[e] ? t[e] : 1.0 - t[e];
      }
      g(c, d) = v;
    }
  }
  return g;
}

Vec3 local_coords(const SparseDisplacementGrid& g, int cell, const Vec3& x) {
  return x / g.cell_size - Vec3(g.cells[cell][0], g.cells[cell][1], g.cells[cell][2]);
}

std::vector<double> gauss_nodes(int order) {
  switch (order) {
    case 1: return {0.5};
    case 2: return {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
    default: return {0.5 - 0.5 * std::sqrt(0.6), 0.5, 0.5 + 0.5 * std::sqrt(0.6)};
  }
}

std::vector<double> gauss_weights(int order) {
  switch (order) {
    case 1: return {1.0};
    case 2: return {0.5, 0.5};
    default: return {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  }
}

} // namespace

Vec3 SparseDisplacementGrid::sample(const Vec3& x, bool* clamped) const {
  const int c = find_cell(cell_of(x));
  if (c >= 0) {
    if (clamped) *clamped = false;
    const auto w = corner_weights(local_coords(*this, c, x));
    Vec3 out = Vec3::Zero();
    for (int k = 0; k < 8; ++k) out += w[k] * u[cell_nodes[c][k]];
    return out;
  }
  if (clamped) *clamped = true;
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const double d = (node_position(static_cast<int>(n)) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(n);
    }
  }
  return best >= 0 ? u[best] : Vec3::Zero();
}

SparseDisplacementGrid activate_band(const TriMesh3& body, double cell_size, double band_width) {
  if (!(cell_size > 0.0)) throw ConfigError("cell size must be > 0");
  if (!(band_width >= 2.0 * cell_size)) {
    throw ConfigError("band width must be at least twice the cell size");
  }
  if (body.triangles.empty()) throw ConfigError("cannot build a band around an empty body");

  const TriangleBVH bvh(body);
  const Box3 box = body.bounds();
  Lattice lo{}, hi{};
  for (int d = 0; d < 3; ++d) {
    lo[d] = static_cast<int>(std::floor((box.min()[d] - band_width) / cell_size)) - 1;
    hi[d] = static_cast<int>(std::floor((box.max()[d] + band_width) / cell_size)) + 1;
  }
  const int nx = hi[0] - lo[0] + 1;
  std::vector<std::vector<Lattice>> slabs(nx);
  parallel_for(0, nx, [&](std::size_t s) {
    const int i = lo[0] + static_cast<int>(s);
    int hint = -1;
    for (int j = lo[1]; j <= hi[1]; ++j) {
      for (int k = lo[2]; k <= hi[2]; ++k) {
        const Vec3 center = cell_size * (Vec3(i, j, k) + Vec3::Constant(0.5));
        if (geom::squared_distance_point_box(center, box) > band_width * band_width) continue;
        const ClosestPoint cp = closest_point_unsigned(center, body.positions, bvh, hint);
        hint = cp.triangle;
        if (cp.distance <= band_width) slabs[s].push_back({i, j, k});
      }
    }
  });

  SparseDisplacementGrid g;
  g.cell_size = cell_size;
  g.band_width = band_width;
  for (auto& slab : slabs) g.cells.insert(g.cells.end(), slab.begin(), slab.end());
  if (g.cells.empty()) throw ConfigError("band activation produced no cells");
  for (std::size_t c = 0; c < g.cells.size(); ++c) {
    g.cell_lookup.emplace(lattice_key(g.cells[c]), static_cast<int>(c));
  }

  for (const Lattice& c : g.cells) {
    for (int k = 0; k < 8; ++k) {
      g.nodes.push_back({c[0] + (k >> 2 & 1), c[1] + (k >> 1 & 1), c[2] + (k & 1)});
    }
  }
  std::sort(g.nodes.begin(), g.nodes.end());
  g.nodes.erase(std::unique(g.nodes.begin(), g.nodes.end()), g.nodes.end());
  for (std::size_t n = 0; n < g.nodes.size(); ++n) {
    g.node_lookup.emplace(lattice_key(g.nodes[n]), static_cast<int>(n));
  }
  g.cell_nodes.resize(g.cells.size());
  for (std::size_t c = 0; c < g.cells.size(); ++c) {
    const Lattice& l = g.cells[c];
    for (int k = 0; k < 8; ++k) {
      g.cell_nodes[c][k] = g.find_node({l[0] + (k >> 2 & 1), l[1] + (k >> 1 & 1), l[2] + (k & 1)});
    }
  }
  g.u.assign(g.nodes.size(), Vec3::Zero());
  g.p.assign(g.cells.size(), 0.0);

  g.cell_component.assign(g.cells.size(), -1);
  for (std::size_t seed = 0; seed < g.cells.size(); ++seed) {
    if (g.cell_component[seed] >= 0) continue;
    std::queue<int> q;
    q.push(static_cast<int>(seed));
    g.cell_component[seed] = g.components;
    while (!q.empty()) {
      const Lattice c = g.cells[q.front()];
      q.pop();
      for (int d = 0; d < 3; ++d) {
        for (int s : {-1, 1}) {
          Lattice nb = c;
          nb[d] += s;
          const int n = g.find_cell(nb);
          if (n >= 0 && g.cell_component[n] < 0) {
            g.cell_component[n] = g.components;
            q.push(n);
          }
        }
      }
    }
    ++g.components;
  }
  if (g.components > 1) {
    spdlog::warn("active band has {} disconnected components", g.components);
  }
  return g;
}

BoundaryQuadrature build_boundary_quadrature(const SparseDisplacementGrid& grid,
                                             const TriMesh3& source_body,
                                             const TriMesh3& target_body,
                                             const TransferConfig& cfg) {
  if (source_body.positions.size() != target_body.positions.size() ||
      source_body.triangles != target_body.triangles) {
    throw ValidationError("source and target bodies must share vertex count and triangulation");
  }
  std::vector<Vec3> disp(source_body.positions.size());
  for (std::size_t v = 0; v < disp.size(); ++v) {
    disp[v] = target_body.positions[v] - source_body.positions[v];
  }
  const TriangleBVH bvh(source_body);
  const double h = grid.cell_size;

  BoundaryQuadrature quad;
  std::vector<char> touches(grid.cells.size(), 0);
  parallel_for(0, grid.cells.size(), [&](std::size_t c) {
    const Lattice& l = grid.cells[c];
    const Box3 box(h * Vec3(l[0], l[1], l[2]), h * Vec3(l[0] + 1, l[1] + 1, l[2] + 1));
    touches[c] = !triangles_overlapping_box(box, source_body.positions, bvh).empty();
  });
  for (std::size_t c = 0; c < grid.cells.size(); ++c) {
    if (touches[c]) quad.boundary_cells.push_back(static_cast<int>(c));
  }

  const auto gn = gauss_nodes(cfg.quadrature_order);
  const auto gw = gauss_weights(cfg.quadrature_order);
  const double vol = h * h * h;
  for (int c : quad.boundary_cells) {
    const Lattice& l = grid.cells[c];
    for (std::size_t a = 0; a < gn.size(); ++a) {
      for (std::size_t b = 0; b < gn.size(); ++b) {
        for (std::size_t d = 0; d < gn.size(); ++d) {
          QuadraturePoint qp;
          qp.cell = c;
          qp.x = h * Vec3(l[0] + gn[a], l[1] + gn[b], l[2] + gn[d]);
          qp.weight = vol * gw[a] * gw[b] * gw[d];
          quad.points.push_back(qp);
        }
      }
    }
  }

  std::vector<Vec3> xs(quad.points.size());
  for (std::size_t q = 0; q < xs.size(); ++q) xs[q] = quad.points[q].x;
  const std::vector<double> winding = winding_numbers_at(source_body, xs);

  parallel_for(0, quad.points.size(), [&](std::size_t q) {
    QuadraturePoint& qp = quad.points[q];
    const ClosestPoint cp = closest_point_unsigned(qp.x, source_body.positions, bvh);
    qp.projected = cp.point;
    qp.triangle = cp.triangle;
    qp.barycentric = cp.barycentric;
    qp.inside = winding[q] >= 0.5;
    const Tri& f = source_body.triangles[cp.triangle];
    qp.displacement = cp.barycentric[0] * disp[f[0]] + cp.barycentric[1] * disp[f[1]] +
                      cp.barycentric[2] * disp[f[2]];
    qp.eval_point = qp.inside ? qp.x : qp.projected;
    qp.eval_cell = grid.find_cell(grid.cell_of(qp.eval_point));
    if (qp.eval_cell < 0) {
      qp.eval_point = qp.x;
      qp.eval_cell = qp.cell;
    }
  });
  return quad;
}

Eigen::Matrix<double, 24, 24> viscous_element_matrix(double h, double viscosity) {
  Eigen::Matrix<double, 24, 24> K = Eigen::Matrix<double, 24, 24>::Zero();
  const auto gn = gauss_nodes(2);
  const double w = h * h * h / 8.0;
  for (double tx : gn) {
    for (double ty : gn) {
      for (double tz : gn) {
        const auto G = corner_gradients(Vec3(tx, ty, tz), h);
        // D(phi_a e_c):D(phi_b e_d) = (delta_cd grad_a.grad_b + d_d phi_a d_c phi_b) / 2
        for (int a = 0; a < 8; ++a) {
          for (int b = 0; b < 8; ++b) {
            const double dot = G.row(a).dot(G.row(b));
            for (int c = 0; c < 3; ++c) {
              for (int d = 0; d < 3; ++d) {
                const double v = 0.5 * ((c == d ? dot : 0.0) + G(a, d) * G(b, c));
                K(3 * a + c, 3 * b + d) += viscosity * w * v;
              }
            }
          }
        }
      }
    }
  }
  return K;
}

BlockSystem assemble_system(const SparseDisplacementGrid& grid, const BoundaryQuadrature& quad,
                            const TransferConfig& cfg, const Vector& bias) {
  const auto nn = static_cast<Eigen::Index>(grid.node_count());
  const auto nc = static_cast<Eigen::Index>(grid.cell_count());
  if (bias.size() != nc) throw ConfigError("bias length must equal the pressure unknown count");
  if (quad.points.empty()) {
    throw ConfigError("no boundary cells touch the body; widen the band or shrink the cell size");
  }
  std::vector<char> anchored(static_cast<std::size_t>(grid.components), 0);
  for (const QuadraturePoint& qp : quad.points) anchored[grid.cell_component[qp.eval_cell]] = 1;
  for (int comp = 0; comp < grid.components; ++comp) {
    if (!anchored[comp]) {
      throw ConfigError("a band component has no boundary data, so the system is singular; "
                        "widen the band or shrink the cell size");
    }
  }

  const double h = grid.cell_size;
  const auto Ke = viscous_element_matrix(h, cfg.viscosity);
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(grid.cell_count() * 576 + quad.points.size() * 192);
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    const auto& cn = grid.cell_nodes[c];
    for (int a = 0; a < 8; ++a) {
      for (int b = 0; b < 8; ++b) {
        for (int i = 0; i < 3; ++i) {
          for (int j = 0; j < 3; ++j) {
            const double v = Ke(3 * a + i, 3 * b + j);
            if (v != 0.0) trips.emplace_back(3 * cn[a] + i, 3 * cn[b] + j, v);
          }
        }
      }
    }
  }

  BlockSystem sys;
  sys.f = Vector::Zero(3 * nn);
  const double lambda = cfg.penalty();
  for (const QuadraturePoint& qp : quad.points) {
    const auto w = corner_weights(local_coords(grid, qp.eval_cell, qp.eval_point));
    const auto& cn = grid.cell_nodes[qp.eval_cell];
    const double s = lambda * qp.weight;
    for (int a = 0; a < 8; ++a) {
      if (w[a] == 0.0) continue;
      for (int i = 0; i < 3; ++i) sys.f[3 * cn[a] + i] += s * w[a] * qp.displacement[i];
      for (int b = 0; b < 8; ++b) {
        if (w[b] == 0.0) continue;
        for (int i = 0; i < 3; ++i) trips.emplace_back(3 * cn[a] + i, 3 * cn[b] + i, s * w[a] * w[b]);
      }
    }
  }
  sys.A.resize(3 * nn, 3 * nn);
  sys.A.setFromTriplets(trips.begin(), trips.end());
  // summation order differs between (i, j) and (j, i); make A exactly symmetric
  sys.A = 0.5 * (sys.A + SparseMatrix(sys.A.transpose()));

  // integral of div u over a cell is vol * div at the center
  std::vector<Eigen::Triplet<double>> btrips;
  btrips.reserve(grid.cell_count() * 24);
  const double q = h * h / 4.0;
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    for (int a = 0; a < 8; ++a) {
      for (int d = 0; d < 3; ++d) {
        const int bit = a >> (2 - d) & 1;
        btrips.emplace_back(static_cast<int>(c), 3 * grid.cell_nodes[c][a] + d, bit ? q : -q);
      }
    }
  }
  sys.B.resize(nc, 3 * nn);
  sys.B.setFromTriplets(btrips.begin(), btrips.end());
  sys.C = Vector::Constant(nc, cfg.compliance * h * h * h);
  sys.k = bias;
  return sys;
}

SchurSolution solve_schur_cg(const BlockSystem& sys, double tolerance, int max_iterations,
                             const Vector& warm_start) {
  if ((sys.C.array() <= 0.0).any()) throw ConfigError("compliance diagonal must be positive");
  const Vector cinv = sys.C.cwiseInverse();
  const SparseMatrix M = sys.A + SparseMatrix(sys.B.transpose() * cinv.asDiagonal() * sys.B);
  const Vector rhs = sys.f + sys.B.transpose() * cinv.cwiseProduct(sys.k);

  SchurSolution out;
  if (rhs.squaredNorm() == 0.0) {
    out.u = Vector::Zero(sys.A.rows());
    out.p = cinv.cwiseProduct(sys.k - sys.B * out.u);
    return out;
  }
  Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper,
                           Eigen::DiagonalPreconditioner<double>>
      cg;
  cg.setTolerance(tolerance);
  cg.setMaxIterations(max_iterations);
  cg.compute(M);
  if (warm_start.size() == rhs.size()) {
    out.u = cg.solveWithGuess(rhs, warm_start);
  } else {
    out.u = cg.solve(rhs);
  }
  out.iterations = static_cast<int>(cg.iterations());
  out.residual = cg.error();
  if (cg.info() != Eigen::Success || !(out.residual <= tolerance)) {
    std::ostringstream os;
    os << "Schur CG did not converge in " << max_iterations
       << " iterations (relative residual " << out.residual << ")";
    throw NumericalError(os.str());
  }
  out.p = cinv.cwiseProduct(sys.k - sys.B * out.u);
  return out;
}

namespace {

Mat3 center_gradient(const SparseDisplacementGrid& grid, const Vector& u, std::size_t c) {
  const auto G = corner_gradients(Vec3::Constant(0.5), grid.cell_size);
  Mat3 grad = Mat3::Zero(); // grad(i, j) = d u_i / d x_j
  for (int a = 0; a < 8; ++a) {
    const int n = grid.cell_nodes[c][a];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) grad(i, j) += u[3 * n + i] * G(a, j);
    }
  }
  return grad;
}

} // namespace

std::vector<double> cell_jacobians(const SparseDisplacementGrid& grid, const Vector& u) {
  std::vector<double> J(grid.cell_count());
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    J[c] = (Mat3::Identity() + center_gradient(grid, u, c)).determinant();
  }
  return J;
}

Vector volume_bias(const SparseDisplacementGrid& grid, const Vector& u) {
  const double vol = std::pow(grid.cell_size, 3);
  Vector k = Vector::Zero(static_cast<Eigen::Index>(grid.cell_count()));
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    const Mat3 g = center_gradient(grid, u, c);
    const double J = (Mat3::Identity() + g).determinant();
    if (J < 1.0) k[static_cast<Eigen::Index>(c)] = vol * ((1.0 - J) + g.trace());
  }
  return k;
}

FixedPointResult fixed_point_solve(const SparseDisplacementGrid& grid,
                                   const BoundaryQuadrature& quad, const TransferConfig& cfg) {
  FixedPointResult out;
  Vector bias = Vector::Zero(static_cast<Eigen::Index>(grid.cell_count()));
  BlockSystem sys = assemble_system(grid, quad, cfg, bias);
  Vector u_prev = Vector::Zero(sys.A.rows());
  for (int it = 1; it <= cfg.fixed_point_max_iterations; ++it) {
    sys.k = bias;
    SchurSolution sol = solve_schur_cg(sys, cfg.cg_tolerance, cfg.cg_max_iterations, u_prev);
    if (!sol.u.allFinite() || !sol.p.allFinite()) {
      throw NumericalError("displacement field became non-finite in fixed-point iteration " +
                           std::to_string(it));
    }
    out.cg_iterations.push_back(sol.iterations);
    out.iterations = it;
    out.last_update = (sol.u - u_prev).cwiseAbs().maxCoeff();
    const Vector next_bias = volume_bias(grid, sol.u);
    u_prev = sol.u;
    out.u = std::move(sol.u);
    out.p = std::move(sol.p);
    // bias frozen up to CG noise: the next solve would reproduce this one
    const bool same_bias = (next_bias - bias).cwiseAbs().maxCoeff() <= 1e-8 * std::pow(grid.cell_size, 3);
    if (same_bias || out.last_update < cfg.fixed_point_tolerance) {
      out.converged = true;
      break;
    }
    bias = next_bias;
  }
  if (!out.converged) {
    spdlog::warn("fixed-point loop stopped after {} iterations (last update {:.3g} cm)",
                 out.iterations, out.last_update);
  }
  return out;
}

void to_json(nlohmann::json& j, const TransferReport& r) {
  j = {{"outer_iterations", r.outer_iterations},
       {"gap_history", r.gap_history},
       {"cg_iterations", r.cg_iterations},
       {"fixed_point_iterations", r.fixed_point_iterations},
       {"final_gap", r.final_gap},
       {"band_width", r.band_width_used},
       {"clamped_samples", r.clamped_samples},
       {"warnings", r.warnings}};
}

TransferResult transfer_garment(const TriMesh3& garment, const TriMesh3& source_body,
                                const TriMesh3& target_body, const TransferConfig& cfg_in) {
  cfg_in.validate();
  if (source_body.positions.size() != target_body.positions.size() ||
      source_body.triangles != target_body.triangles) {
    throw ValidationError("source and target bodies must share vertex count and triangulation");
  }
  TransferConfig cfg = cfg_in;
  TransferResult res;

  // every garment vertex must sit in an active cell
  {
    const TriangleBVH bvh(source_body);
    double far = 0.0;
    int hint = -1;
    for (const Vec3& p : garment.positions) {
      const auto cp = closest_point_unsigned(p, source_body.positions, bvh, hint);
      hint = cp.triangle;
      far = std::max(far, cp.distance);
    }
    const double needed = far + cfg.cell_size * std::sqrt(3.0);
    if (needed > cfg.band_width) {
      std::ostringstream os;
      os << "garment reaches " << far << " cm from the body; band widened from "
         << cfg.band_width << " to " << needed << " cm";
      spdlog::warn("{}", os.str());
      res.report.warnings.push_back(os.str());
      cfg.band_width = needed;
    }
  }
  res.report.band_width_used = cfg.band_width;

  res.positions = garment.positions;
  TriMesh3 body = source_body;
  double gap = 0.0;

  for (int outer = 1; outer <= cfg.max_restarts + 1; ++outer) {
    SparseDisplacementGrid grid = activate_band(body, cfg.cell_size, cfg.band_width);
    const BoundaryQuadrature quad = build_boundary_quadrature(grid, body, target_body, cfg);
    const FixedPointResult fp = fixed_point_solve(grid, quad, cfg);
    for (std::size_t n = 0; n < grid.node_count(); ++n) {
      grid.u[n] = fp.u.segment<3>(3 * static_cast<Eigen::Index>(n));
    }
    res.report.cg_iterations.insert(res.report.cg_iterations.end(), fp.cg_iterations.begin(),
                                    fp.cg_iterations.end());
    res.report.fixed_point_iterations.push_back(fp.iterations);

    std::vector<Vec3> gdisp(res.positions.size());
    std::vector<char> gclamp(res.positions.size(), 0);
    parallel_for(0, res.positions.size(), [&](std::size_t v) {
      bool c = false;
      gdisp[v] = grid.sample(res.positions[v], &c);
      gclamp[v] = c;
    });
    std::vector<Vec3> bdisp(body.positions.size());
    parallel_for(0, body.positions.size(),
                 [&](std::size_t v) { bdisp[v] = grid.sample(body.positions[v]); });
    std::size_t clamped = 0;
    for (std::size_t v = 0; v < res.positions.size(); ++v) {
      res.positions[v] += gdisp[v];
      clamped += gclamp[v];
    }
    if (clamped > 0) {
      const std::string msg = std::to_string(clamped) +
                              " garment vertices fell outside the active band and used the "
                              "nearest node's displacement";
      spdlog::warn("{}", msg);
      res.report.warnings.push_back(msg);
      res.report.clamped_samples += clamped;
    }
    gap = 0.0;
    for (std::size_t v = 0; v < body.positions.size(); ++v) {
      body.positions[v] += bdisp[v];
      gap = std::max(gap, (body.positions[v] - target_body.positions[v]).norm());
    }
    res.report.outer_iterations = outer;
    res.report.gap_history.push_back(gap);
    spdlog::debug("transfer outer iteration {}: gap {:.4g} cm", outer, gap);
    if (gap <= cfg.gap_threshold) break;
    const auto& hist = res.report.gap_history;
    if (hist.size() >= 2 && !(hist.back() < hist[hist.size() - 2])) {
      std::ostringstream os;
      os << "transfer stalled: body gap history";
      for (double g : hist) os << ' ' << g;
      throw TransferStalledError(os.str(), hist);
    }
  }
  if (gap > cfg.gap_threshold) {
    std::ostringstream os;
    os << "body gap " << gap << " cm still above threshold after " << cfg.max_restarts
       << " restarts";
    spdlog::warn("{}", os.str());
    res.report.warnings.push_back(os.str());
  }
  res.report.final_gap = gap;
  res.displaced_body = std::move(body);
  return res;
}

} // namespace bolt
