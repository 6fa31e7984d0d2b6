#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/SparseCore>
#include <nlohmann/json_fwd.hpp>

#include "bolt/mesh.hpp"
#include "bolt/types.hpp"

namespace bolt {

/// Per triangle: M = inverse of the 2D edge matrix [q1 - q0, q2 - q0].
struct TangentBinding {
  std::vector<Mat2> M;
};

TangentBinding bind_tangents(const PatternLayout2D& layout, const TriMesh3& mesh3d);

/// Warp/weft tangents in 3D, one 3x2 matrix per triangle: E3 * M.
std::vector<Mat32> tangent_frames(const TangentBinding& binding, const TriMesh3& mesh3d);

struct Polar32 {
  Mat32 R;
  Mat2 S;
};

/// F = R S with orthonormal R columns and symmetric PSD S. Throws
/// NumericalError for rank-deficient F; `triangle` is used in the message.
Polar32 polar_3x2(const Mat32& F, int triangle = -1);

enum class FrameMode { Loose, PreserveFit };

FrameMode frame_mode_from_string(const std::string& s);
const char* to_string(FrameMode m);

struct TargetFrames {
  /// Desired 3D frame per triangle (R_target or R_target * S_ref).
  std::vector<Mat32> target;
  /// 2x2 binding b_t = (E^T E)^-1 E^T target, E the target 3D edge matrix.
  std::vector<Mat2> b;
};

TargetFrames build_target_frames(const TangentBinding& binding, const TriMesh3& source3d,
                                 const TriMesh3& target3d, FrameMode mode);

/// E(x) = 1/2 sum_r x_r^T H x_r - rhs_r^T x_r + constant over the two
/// coordinate columns of the N x 2 layout matrix.
struct BaseQuadratic {
  Eigen::SparseMatrix<double> H;
  Eigen::MatrixX2d rhs;
  double constant = 0.0;

  double energy(const Eigen::MatrixX2d& x) const;
  Eigen::MatrixX2d gradient(const Eigen::MatrixX2d& x) const;
};

/// Frame term 1/2 sum_t A_t |P_t(x) b_t - I|^2 plus 1/2 eps sum_v |p_v - p0_v|^2,
/// with P_t(x) the 2D edge matrix and A_t the rest 2D area.
BaseQuadratic build_base_quadratic(const PatternLayout2D& rest, const std::vector<Mat2>& b,
                                   double eps);

/// Literal evaluation of the same energy (no quadratic form).
double base_energy(const Eigen::MatrixX2d& x, const PatternLayout2D& rest,
                   const std::vector<Mat2>& b, double eps);

struct EdgeScaleResult {
  double S = 1.0;
  double W = 0.0;
  /// dW/dz for each stacked vector, evaluated at the optimal S.
  std::vector<Vec2> gradient;
};

/// W = 1/2 L sum_k |z_k - S r_k|^2 with S the least-squares scale. Several
/// vertices tied into one scale group pass all their vectors at once; weights
/// give each vector's L.
EdgeScaleResult edge_scale_and_energy(const std::vector<Vec2>& z, const std::vector<Vec2>& rest,
                                      const std::vector<double>& weights);

struct PatternConfig {
  FrameMode mode = FrameMode::PreserveFit;
  double epsilon = 1e-8;
  /// ADMM penalty w_i = admm_stiffness * L_i.
  double admm_stiffness = 10.0;
  /// Multiplies L_i in the edge energy. Large values make sewn edges agree in
  /// length; the mismatch falls roughly as 1 / edge_weight.
  double edge_weight = 300.0;
  int max_iterations = 500;
  double tolerance = 1e-6;
  int stall_window = 50;
  bool internal_seams = true;
  bool tidy = true;

  void validate() const;
};

void to_json(nlohmann::json& j, const PatternConfig& c);
void from_json(const nlohmann::json& j, PatternConfig& c);

/// One edge-energy constraint: vertex i with neighbors j and k (j == k for
/// single-neighbor ends).
struct EdgeConstraint {
  int i = -1;
  int j = -1;
  int k = -1;
  Vec2 rest0;
  Vec2 rest1;
  double L = 0.0;
  int group = -1;
};

/// Border vertices of every panel, plus seam vertices away from borders when
/// `internal_seams` is set. Seam-tied vertices share a scale group.
std::vector<EdgeConstraint> build_edge_constraints(const PatternLayout2D& rest,
                                                   const SeamSpec& seams, bool internal_seams);

struct AdmmReport {
  int iterations = 0;
  bool converged = false;
  std::vector<double> primal_residuals;
  std::vector<double> dual_residuals;
  /// sqrt(sum w_i (|D_i x - z_i|^2 + |z_i - z_i_prev|^2)); non-increasing for
  /// exact ADMM on this convex problem, so it drives the stall check.
  std::vector<double> combined_residuals;
  std::vector<std::string> warnings;
};

/// Returns the optimized N x 2 layout. x0 of the ADMM loop is the base
/// quadratic's minimizer.
Eigen::MatrixX2d admm_optimize(const BaseQuadratic& base,
                               const std::vector<EdgeConstraint>& constraints,
                               const PatternConfig& cfg, AdmmReport* report = nullptr);

/// Harmonic fill of unpinned vertices using the cotangent Laplacian of `rest`.
Eigen::MatrixX2d dirichlet_tidy(const Eigen::MatrixX2d& x, const std::vector<char>& pinned,
                                const PatternLayout2D& rest);

/// Sum over triangles of the cotangent-weighted Dirichlet energy of x on rest.
double dirichlet_energy(const Eigen::MatrixX2d& x, const PatternLayout2D& rest);

struct SeamLengthDelta {
  int panel_a = -1;
  int panel_b = -1;
  double length_a = 0.0;
  double length_b = 0.0;
  double relative_delta() const;
};

/// Total 2D length of each sewn polyline pair: edges (a, b) whose endpoints
/// are paired with the endpoints of an edge in another panel.
std::vector<SeamLengthDelta> seam_length_deltas(const Eigen::MatrixX2d& x,
                                                const PatternLayout2D& layout,
                                                const SeamSpec& seams);

struct PatternReport {
  AdmmReport admm;
  std::vector<SeamLengthDelta> seams;
  std::vector<int> flipped_triangles;
  double max_vertex_shift = 0.0;
};

void to_json(nlohmann::json& j, const PatternReport& r);

struct PatternResult {
  PatternLayout2D layout;
  PatternReport report;
};

/// Full pattern pass for a garment whose 3D mesh moved from source3d to
/// target3d. Throws NumericalError if any final 2D triangle is flipped.
PatternResult optimize_pattern(const GarmentSheet& garment, const TriMesh3& source3d,
                               const TriMesh3& target3d, const PatternConfig& cfg);

Eigen::MatrixX2d layout_matrix(const PatternLayout2D& layout);

/// Before/after panel outlines.
void write_pattern_svg(const PatternLayout2D& before, const PatternLayout2D& after,
                       const std::filesystem::path& path);

} // namespace bolt
