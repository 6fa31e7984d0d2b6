#include <cmath>
#include <random>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "bolt/error.hpp"
#include "bolt/field_transfer.hpp"
#include "bolt/primitives.hpp"

#include "oracles.hpp"

using namespace bolt;

namespace {

TransferConfig small_config(double cell, double band) {
  TransferConfig c;
  c.cell_size = cell;
  c.band_width = band;
  c.cg_tolerance = 1e-10;
  return c;
}

TriMesh3 moved(const TriMesh3& m, const std::function<Vec3(const Vec3&)>& f) {
  TriMesh3 out = m;
  for (Vec3& p : out.positions) p = f(p);
  return out;
}

// Gradient of the trilinear interpolant of 8 nodal vectors; node n has
// offset ((n >> 2) & 1, (n >> 1) & 1, n & 1).
Eigen::Matrix3d trilinear_gradient(const Eigen::Matrix<double, 24, 1>& u, const Vec3& xi, double h) {
  Eigen::Matrix3d G = Eigen::Matrix3d::Zero();
  for (int n = 0; n < 8; ++n) {
    const int bx = (n >> 2) & 1, by = (n >> 1) & 1, bz = n & 1;
    const double wx = bx ? xi.x() : 1 - xi.x();
    const double wy = by ? xi.y() : 1 - xi.y();
    const double wz = bz ? xi.z() : 1 - xi.z();
    const Vec3 dN((bx ? 1 : -1) * wy * wz, wx * (by ? 1 : -1) * wz, wx * wy * (bz ? 1 : -1));
    G += u.segment<3>(3 * n) * dN.transpose() / h;
  }
  return G;
}

} // namespace

TEST_CASE("band activation on a unit sphere matches a dense scan") {
  const TriMesh3 s = icosphere(1.0, 2);
  const SparseDisplacementGrid g = activate_band(s, 0.5, 1.0);
  for (std::size_t c = 0; c < g.cell_count(); ++c) CHECK(oracle::brute_force_distance(g.cell_center(c), s) <= 1.0 + 1e-12);
  std::size_t dense = 0;
  for (int i = -16; i < 16; ++i) {
    for (int j = -16; j < 16; ++j) {
      for (int k = -16; k < 16; ++k) {
        const Vec3 c = 0.5 * (Vec3(i, j, k) + Vec3::Constant(0.5));
        if (c.norm() > 3.0) continue; // cannot be within 1.0 of a unit sphere
        dense += oracle::brute_force_distance(c, s) <= 1.0;
      }
    }
  }
  CHECK(g.cell_count() == dense);
  CHECK(g.u.size() == g.node_count());
  CHECK(g.p.size() == g.cell_count());
}

TEST_CASE("band narrower than two cells is rejected") {
  CHECK_THROWS_AS(activate_band(icosphere(1.0, 1), 0.5, 0.4), ConfigError);
}

TEST_CASE("prescribed boundary displacements") {
  const TriMesh3 s = icosphere(1.0, 2);
  const TransferConfig cfg = small_config(0.5, 1.0);
  const SparseDisplacementGrid g = activate_band(s, cfg.cell_size, cfg.band_width);

  const BoundaryQuadrature id = build_boundary_quadrature(g, s, s, cfg);
  REQUIRE(!id.points.empty());
  for (const auto& q : id.points) {
    CHECK(q.displacement.norm() == 0.0);
    CHECK(q.barycentric.minCoeff() >= -1e-12);
    CHECK(std::abs(q.barycentric.sum() - 1.0) < 1e-12);
  }
  const BoundaryQuadrature tr = build_boundary_quadrature(g, s, moved(s, [](const Vec3& p) -> Vec3 { return p + Vec3(1, 0, 0); }), cfg);
  for (const auto& q : tr.points) CHECK((q.displacement - Vec3(1, 0, 0)).norm() < 1e-12);
  const BoundaryQuadrature sc = build_boundary_quadrature(g, s, moved(s, [](const Vec3& p) -> Vec3 { return 1.5 * p; }), cfg);
  for (const auto& q : sc.points) CHECK((q.displacement - 0.5 * q.projected).norm() < 1e-9);

  TriMesh3 other = s;
  other.triangles.pop_back();
  CHECK_THROWS_AS(build_boundary_quadrature(g, s, other, cfg), ValidationError);
}

TEST_CASE("viscous element matrix matches a quadrature of the strain energy") {
  const double h = 0.7, nu = 1.3;
  const auto K = viscous_element_matrix(h, nu);
  CHECK((K - K.transpose()).cwiseAbs().maxCoeff() == 0.0);
  // 3-point Gauss rule is exact for the element's polynomial degree
  const double gp[3] = {0.5 - std::sqrt(0.15), 0.5, 0.5 + std::sqrt(0.15)};
  const double gw[3] = {5.0 / 18, 8.0 / 18, 5.0 / 18};
  auto energy = [&](const Eigen::VectorXd& u) {
    double e = 0.0;
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        for (int c = 0; c < 3; ++c) {
          const Eigen::Matrix3d G = trilinear_gradient(u, Vec3(gp[a], gp[b], gp[c]), h);
          const Eigen::Matrix3d D = 0.5 * (G + G.transpose());
          e += gw[a] * gw[b] * gw[c] * h * h * h * 0.5 * nu * D.squaredNorm();
        }
      }
    }
    return e;
  };
  std::mt19937_64 rng(21);
  std::normal_distribution<double> N(0, 1);
  for (int t = 0; t < 5; ++t) {
    Eigen::VectorXd u(24);
    for (auto& v : u) v = N(rng);
    const Eigen::VectorXd g = oracle::central_difference(energy, u, 1e-5);
    CHECK(oracle::relative_error(K * u, g) < 1e-6);
  }
}

TEST_CASE("assembled system properties") {
  const TriMesh3 s = icosphere(1.0, 1);
  const TransferConfig cfg = small_config(0.6, 1.2);
  const SparseDisplacementGrid g = activate_band(s, cfg.cell_size, cfg.band_width);
  const BoundaryQuadrature q = build_boundary_quadrature(g, s, s, cfg);
  const Vector bias = Vector::Zero(static_cast<Eigen::Index>(g.cell_count()));
  const BlockSystem sys = assemble_system(g, q, cfg, bias);
  CHECK(Eigen::MatrixXd(sys.A - Eigen::SparseMatrix<double>(sys.A.transpose())).cwiseAbs().maxCoeff() == 0.0);
  CHECK(sys.f.cwiseAbs().maxCoeff() == 0.0);
  CHECK(sys.C.minCoeff() > 0.0);
  const SchurSolution sol = solve_schur_cg(sys, 1e-10, 1000);
  CHECK(sol.u.cwiseAbs().maxCoeff() == 0.0);
  CHECK(sol.p.cwiseAbs().maxCoeff() == 0.0);
  CHECK(sol.iterations == 0);

  // Schur complement is SPD
  const Eigen::SparseMatrix<double> Cinv = sys.C.cwiseInverse().asDiagonal().toDenseMatrix().sparseView();
  const Eigen::SparseMatrix<double> M = sys.A + Eigen::SparseMatrix<double>(sys.B.transpose()) * Cinv * sys.B;
  std::mt19937_64 rng(22);
  std::normal_distribution<double> N(0, 1);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd x(M.rows());
    for (auto& v : x) v = N(rng);
    CHECK(x.dot(M * x) > 0.0);
  }
}

TEST_CASE("one-unknown-pair Schur solve against a hand inversion") {
  BlockSystem sys;
  Eigen::MatrixXd A(2, 2);
  A << 4.0, 1.0, 1.0, 3.0;
  sys.A = A.sparseView();
  Eigen::MatrixXd B(1, 2);
  B << 1.0, -2.0;
  sys.B = B.sparseView();
  sys.C = Eigen::VectorXd::Constant(1, 0.5);
  sys.f = Eigen::Vector2d(1.0, 2.0);
  sys.k = Eigen::VectorXd::Constant(1, 0.3);
  // S = A + B^T B / c
  const double s00 = 4.0 + 1.0 / 0.5, s01 = 1.0 - 2.0 / 0.5, s11 = 3.0 + 4.0 / 0.5;
  const double r0 = 1.0 + 1.0 * 0.3 / 0.5, r1 = 2.0 - 2.0 * 0.3 / 0.5;
  const double det = s00 * s11 - s01 * s01;
  const Eigen::Vector2d u((s11 * r0 - s01 * r1) / det, (s00 * r1 - s01 * r0) / det);
  const double p = (0.3 - (u[0] - 2.0 * u[1])) / 0.5;
  const SchurSolution sol = solve_schur_cg(sys, 1e-14, 100);
  CHECK((sol.u - u).norm() < 1e-12);
  CHECK(std::abs(sol.p[0] - p) < 1e-12);
  // and the block equations hold
  CHECK((A * sol.u - B.transpose() * sol.p - sys.f).norm() < 1e-12);
  CHECK(std::abs((B * sol.u)(0) + 0.5 * sol.p[0] - 0.3) < 1e-12);
}

TEST_CASE("CG failure reports the residual") {
  BlockSystem sys;
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(50, 50);
  for (int i = 0; i < 50; ++i) A(i, i) = 1.0 + i * i;
  sys.A = A.sparseView();
  sys.B.resize(1, 50);
  sys.C = Eigen::VectorXd::Ones(1);
  sys.f = Eigen::VectorXd::Random(50);
  sys.k = Eigen::VectorXd::Zero(1);
  CHECK_THROWS_WITH_AS(solve_schur_cg(sys, 1e-300, 1), doctest::Contains("residual"), Error);
}

TEST_CASE("fixed-point behaviour under rigid, shrinking and expanding data") {
  const TriMesh3 s = icosphere(2.0, 2);
  const TransferConfig cfg = small_config(0.5, 1.0);
  const SparseDisplacementGrid g = activate_band(s, cfg.cell_size, cfg.band_width);

  const auto rigid = fixed_point_solve(g, build_boundary_quadrature(g, s, moved(s, [](const Vec3& p) -> Vec3 { return p + Vec3(0.3, -0.2, 0.1); }), cfg), cfg);
  CHECK(rigid.iterations == 1);
  for (std::size_t n = 0; n < g.node_count(); ++n) CHECK((rigid.u.segment<3>(3 * n) - Vec3(0.3, -0.2, 0.1)).norm() < 1e-6);
  for (double J : cell_jacobians(g, rigid.u)) CHECK(std::abs(J - 1.0) < 1e-6);
  CHECK(volume_bias(g, rigid.u).cwiseAbs().maxCoeff() < 1e-9);

  const auto shrink = fixed_point_solve(g, build_boundary_quadrature(g, s, moved(s, [](const Vec3& p) -> Vec3 { return 0.9 * p; }), cfg), cfg);
  const auto J = cell_jacobians(g, shrink.u);
  CHECK(*std::min_element(J.begin(), J.end()) < 1.0);
  CHECK(volume_bias(g, shrink.u).maxCoeff() > 0.0);

  // With a stiff divergence term the linear response to an expanding surface is
  // nearly divergence free, which squeezes the shell inside the sphere. A softer
  // compliance keeps every cell expanding, so the unilateral term stays off.
  TransferConfig soft = cfg;
  soft.compliance = 1.0;
  const BoundaryQuadrature qe = build_boundary_quadrature(g, s, moved(s, [](const Vec3& p) -> Vec3 { return 1.1 * p; }), soft);
  const BlockSystem lin = assemble_system(g, qe, soft, Vector::Zero(static_cast<Eigen::Index>(g.cell_count())));
  const SchurSolution one = solve_schur_cg(lin, soft.cg_tolerance, soft.cg_max_iterations);
  for (double j : cell_jacobians(g, one.u)) REQUIRE(j >= 1.0);
  CHECK(volume_bias(g, one.u).cwiseAbs().maxCoeff() == 0.0);
  const auto expand = fixed_point_solve(g, qe, soft);
  CHECK(expand.iterations == 1);
  CHECK((expand.u - one.u).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("identity transfer leaves the garment in place") {
  const TriMesh3 body = icosphere(5.0, 3);
  TubeSpec spec;
  spec.radius = 6.5;
  spec.y_min = -2.0;
  spec.y_max = 2.0;
  const TriMesh3 garment = tube_garment(spec).mesh3d;
  const TransferResult r = transfer_garment(garment, body, body, small_config(1.0, 4.0));
  double worst = 0.0;
  for (std::size_t i = 0; i < garment.positions.size(); ++i) worst = std::max(worst, (r.positions[i] - garment.positions[i]).norm());
  CHECK(worst < 1e-6);
}

TEST_CASE("rigid translation moves the garment by the same vector") {
  const TriMesh3 body = icosphere(5.0, 3);
  TubeSpec spec;
  spec.radius = 6.5;
  spec.y_min = -2.0;
  spec.y_max = 2.0;
  const TriMesh3 garment = tube_garment(spec).mesh3d;
  const Vec3 t(0.8, -0.4, 0.3);
  const TransferResult r = transfer_garment(garment, body, moved(body, [&](const Vec3& p) -> Vec3 { return p + t; }), small_config(1.0, 4.0));
  double worst = 0.0;
  for (std::size_t i = 0; i < garment.positions.size(); ++i) worst = std::max(worst, (r.positions[i] - garment.positions[i] - t).norm());
  CHECK(worst < 1e-3);
}

TEST_CASE("sphere to ellipsoid converges within the restart budget") {
  const TriMesh3 body = icosphere(5.0, 3);
  const TriMesh3 target = moved(body, [](const Vec3& p) -> Vec3 { return Vec3(1.4 * p.x(), 0.8 * p.y(), p.z()); });
  TubeSpec spec;
  spec.radius = 6.0;
  spec.y_min = -1.5;
  spec.y_max = 1.5;
  const TriMesh3 garment = tube_garment(spec).mesh3d;
  TransferConfig cfg = small_config(1.0, 4.0);
  cfg.cg_tolerance = 1e-6;
  const TransferResult r = transfer_garment(garment, body, target, cfg);
  CHECK(r.report.outer_iterations <= cfg.max_restarts + 1);
  CHECK(r.report.final_gap < cfg.gap_threshold);
  const auto& h = r.report.gap_history;
  for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i] <= h[i - 1]);
  // the garment follows the widening: vertices on the x axis move outward
  for (std::size_t i = 0; i < garment.positions.size(); ++i) {
    if (std::abs(garment.positions[i].z()) < 1e-9 && garment.positions[i].x() > 0) CHECK(r.positions[i].x() > garment.positions[i].x());
  }
}

TEST_CASE("transfer config validation") {
  TransferConfig c;
  CHECK_NOTHROW(c.validate());
  c.compliance = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TransferConfig{};
  c.viscosity = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  nlohmann::json j = TransferConfig{};
  CHECK(j.at("compliance").get<double>() == 0.01);
}
