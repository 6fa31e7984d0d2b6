#include <memory>

#include <benchmark/benchmark.h>

#include "bolt/bvh.hpp"
#include "bolt/cloth_sim.hpp"
#include "bolt/field_transfer.hpp"
#include "bolt/primitives.hpp"
#include "bolt/sdf.hpp"

using namespace bolt;

namespace {

GridSpec grid_around(const TriMesh3& m, int nodes) { return grid_for_bounds(m.bounds(), 5.0, nodes); }

} // namespace

static void BM_BuildSdf(benchmark::State& state) {
  const TriMesh3 body = icosphere(10.0, 3);
  const GridSpec grid = grid_around(body, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_sdf(body, grid));
  state.SetLabel(std::to_string(body.triangles.size()) + " tris");
}
BENCHMARK(BM_BuildSdf)->Arg(16)->Arg(32)->Arg(48)->Unit(benchmark::kMillisecond);

static void BM_ClosestPointBvh(benchmark::State& state) {
  const TriMesh3 body = icosphere(10.0, static_cast<int>(state.range(0)));
  const TriangleBVH bvh(body.positions, body.triangles);
  const TriMesh3 probes = icosphere(12.0, 3);
  for (auto _ : state) {
    for (const Vec3& q : probes.positions) benchmark::DoNotOptimize(closest_point_unsigned(q, body.positions, bvh));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(probes.positions.size()));
}
BENCHMARK(BM_ClosestPointBvh)->DenseRange(2, 5);

// signed query adds an exact winding number, linear in the triangle count
static void BM_ClosestPointSigned(benchmark::State& state) {
  const TriMesh3 body = icosphere(10.0, static_cast<int>(state.range(0)));
  const TriangleBVH bvh(body.positions, body.triangles);
  const TriMesh3 probes = icosphere(12.0, 2);
  for (auto _ : state) {
    for (const Vec3& q : probes.positions) benchmark::DoNotOptimize(closest_point_on_mesh(q, body, bvh));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(probes.positions.size()));
}
BENCHMARK(BM_ClosestPointSigned)->DenseRange(2, 4);

static void BM_SchurCg(benchmark::State& state) {
  TransferConfig cfg;
  cfg.cell_size = state.range(0) / 10.0;
  const TriMesh3 source = icosphere(10.0, 3);
  TriMesh3 target = source;
  for (Vec3& p : target.positions) p.x() *= 1.1;
  const SparseDisplacementGrid grid = activate_band(source, cfg.cell_size, cfg.band_width);
  const BoundaryQuadrature quad = build_boundary_quadrature(grid, source, target, cfg);
  const BlockSystem sys = assemble_system(grid, quad, cfg, Vector::Zero(grid.cells.size()));
  int iters = 0;
  for (auto _ : state) {
    const SchurSolution s = solve_schur_cg(sys, cfg.cg_tolerance, cfg.cg_max_iterations);
    iters = s.iterations;
    benchmark::DoNotOptimize(s.u.data());
  }
  state.counters["dofs"] = static_cast<double>(sys.A.rows());
  state.counters["cg_iters"] = iters;
}
BENCHMARK(BM_SchurCg)->Arg(20)->Arg(15)->Unit(benchmark::kMillisecond);

static void BM_ClothSubstep(benchmark::State& state) {
  const TriMesh3 body = icosphere(10.0, 3);
  TubeSpec spec;
  spec.radius = 10.5;
  spec.y_min = 4.0;
  spec.y_max = 8.0;
  spec.segments_per_panel = static_cast<int>(state.range(0));
  spec.rings = 8;
  ClothState s = make_cloth_state(tube_garment(spec));
  s.sdf = std::make_shared<SampledSDF>(build_sdf(body, grid_around(body, 48)));
  const SimParams p;
  const double dt = p.frame_dt / p.substeps;
  const ClothState start = s;
  int n = 0;
  for (auto _ : state) {
    // restart before the cloth drifts far from the body
    if (++n % 64 == 0) s = start;
    benchmark::DoNotOptimize(step(s, dt, p, false));
  }
  state.SetLabel(std::to_string(s.x.size()) + " verts");
}
BENCHMARK(BM_ClothSubstep)->Arg(16)->Arg(32);
BENCHMARK_MAIN();
