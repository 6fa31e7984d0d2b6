#pragma once

#include <array>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/SparseCore>
#include <nlohmann/json_fwd.hpp>

#include "bolt/error.hpp"
#include "bolt/mesh.hpp"
#include "bolt/types.hpp"

namespace bolt {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;

struct TransferConfig {
  double viscosity = 1.0;
  double compliance = 0.01;
  /// Boundary penalty is penalty_scale * viscosity / cell_size.
  double penalty_scale = 1e3;
  /// Gauss points per axis in each boundary cell (1, 2 or 3).
  int quadrature_order = 2;
  double cell_size = 2.0;
  double band_width = 12.0;
  double cg_tolerance = 1e-6;
  int cg_max_iterations = 20000;
  int fixed_point_max_iterations = 20;
  double fixed_point_tolerance = 1e-4;
  double gap_threshold = 0.5;
  int max_restarts = 5;

  double penalty() const { return penalty_scale * viscosity / cell_size; }
  void validate() const;
};

void to_json(nlohmann::json& j, const TransferConfig& c);
void from_json(const nlohmann::json& j, TransferConfig& c);

using Lattice = std::array<int, 3>;

/// Active cells of a regular lattice aligned at the world origin. Cell (i,j,k)
/// spans [i,i+1]x[j,j+1]x[k,k+1] times cell_size; its corners are the nodes.
struct SparseDisplacementGrid {
  double cell_size = 0.0;
  double band_width = 0.0;
  std::vector<Lattice> cells; // lexicographic order
  std::vector<Lattice> nodes; // lexicographic order
  /// Corner node indices per cell; corner c has offset (c>>2&1, c>>1&1, c&1).
  std::vector<std::array<int, 8>> cell_nodes;
  std::vector<Vec3> u;      // per node
  std::vector<double> p;    // per cell
  std::vector<int> cell_component; // 6-connected component id per cell
  int components = 0;

  int find_cell(const Lattice& c) const;
  int find_node(const Lattice& n) const;
  Vec3 node_position(int n) const;
  Vec3 cell_center(int c) const;
  /// Cell containing a world point (floor division).
  Lattice cell_of(const Vec3& x) const;
  std::size_t node_count() const { return nodes.size(); }
  std::size_t cell_count() const { return cells.size(); }

  /// Trilinear interpolation of u; outside the active set the nearest active
  /// node's value is used and `clamped` is set.
  Vec3 sample(const Vec3& x, bool* clamped = nullptr) const;

  std::unordered_map<std::int64_t, int> cell_lookup;
  std::unordered_map<std::int64_t, int> node_lookup;
};

std::int64_t lattice_key(const Lattice& c);

/// Active set: every cell whose center is within band_width of the body.
SparseDisplacementGrid activate_band(const TriMesh3& body, double cell_size, double band_width);

struct QuadraturePoint {
  int cell = -1;           // boundary cell the point was generated in
  Vec3 x;                  // Gauss point
  Vec3 projected;          // closest body point
  int triangle = -1;
  Vec3 barycentric;
  bool inside = false;     // Gauss point lies inside the body
  int eval_cell = -1;      // cell where the penalty is evaluated
  Vec3 eval_point;         // x when inside, the projection otherwise
  Vec3 displacement;       // prescribed value
  double weight = 0.0;
};

struct BoundaryQuadrature {
  std::vector<int> boundary_cells;
  std::vector<QuadraturePoint> points;
};

/// Per-vertex displacement target - source is interpolated at the projected
/// points of every cell that intersects the source body.
BoundaryQuadrature build_boundary_quadrature(const SparseDisplacementGrid& grid,
                                             const TriMesh3& source_body,
                                             const TriMesh3& target_body,
                                             const TransferConfig& cfg);

/// Saddle system [A, -B^T; -B, -C] [u; p] = [f; -k], C diagonal.
struct BlockSystem {
  SparseMatrix A;
  SparseMatrix B;
  Vector C;
  Vector f;
  Vector k;
};

/// u unknowns are node-major (3*node + axis); one pressure per cell. `bias`
/// holds one value per cell (volume units).
BlockSystem assemble_system(const SparseDisplacementGrid& grid, const BoundaryQuadrature& quad,
                            const TransferConfig& cfg, const Vector& bias);

/// 24x24 element matrix of nu * int D(u):D(v) over one cube cell.
Eigen::Matrix<double, 24, 24> viscous_element_matrix(double cell_size, double viscosity);

struct SchurSolution {
  Vector u;
  Vector p;
  int iterations = 0;
  double residual = 0.0;
};

/// Solves (A + B^T C^-1 B) u = f + B^T C^-1 k with Jacobi-preconditioned CG and
/// recovers p = C^-1 (k - B u). `warm_start` may be empty.
SchurSolution solve_schur_cg(const BlockSystem& sys, double tolerance, int max_iterations,
                             const Vector& warm_start = Vector());

/// Per-cell J = det(I + grad u) at the cell center.
std::vector<double> cell_jacobians(const SparseDisplacementGrid& grid, const Vector& u);

/// Unilateral bias per cell: vol * ((1 - J) + div u) where J < 1, else 0.
Vector volume_bias(const SparseDisplacementGrid& grid, const Vector& u);

struct FixedPointResult {
  Vector u;
  Vector p;
  int iterations = 0;
  std::vector<int> cg_iterations;
  double last_update = 0.0;
  bool converged = false;
};

FixedPointResult fixed_point_solve(const SparseDisplacementGrid& grid,
                                   const BoundaryQuadrature& quad, const TransferConfig& cfg);

struct TransferReport {
  int outer_iterations = 0;
  std::vector<double> gap_history;
  std::vector<int> cg_iterations;
  std::vector<int> fixed_point_iterations;
  double final_gap = 0.0;
  double band_width_used = 0.0;
  std::size_t clamped_samples = 0;
  std::vector<std::string> warnings;
};

void to_json(nlohmann::json& j, const TransferReport& r);

struct TransferResult {
  std::vector<Vec3> positions;
  TriMesh3 displaced_body;
  TransferReport report;
};

class TransferStalledError : public Error {
public:
  TransferStalledError(const std::string& message, std::vector<double> history)
      : Error(ErrorKind::Stalled, message), history_(std::move(history)) {}
  const std::vector<double>& gap_history() const { return history_; }

private:
  std::vector<double> history_;
};

/// Outer restart loop: solve, advect garment and body, repeat from the
/// displaced body until the body gap is below the threshold.
TransferResult transfer_garment(const TriMesh3& garment, const TriMesh3& source_body,
                                const TriMesh3& target_body, const TransferConfig& cfg);

} // namespace bolt
