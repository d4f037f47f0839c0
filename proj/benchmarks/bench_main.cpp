#include <benchmark/benchmark.h>

#include "rwdesat/analysis.hpp"
#include "rwdesat/sim.hpp"

namespace {

using namespace rwdesat;

State fig4_state(const SpacecraftParams& p) {
  State x;
  x << -0.006, 0.009, -0.023, 0.0, -p.n, 0.0, -5.0, 23.5, -4.4, 24.3;
  return x;
}

void BM_EomRhs(benchmark::State& st) {
  const SpacecraftParams p;
  const State x = fig4_state(p);
  const Input u(0.1, -0.2, 0.05, 0.0);
  for (auto _ : st) benchmark::DoNotOptimize(eom_rhs(x, u, p));
}
BENCHMARK(BM_EomRhs);

void BM_Rk4ControlPeriod(benchmark::State& st) {
  const SpacecraftParams p;
  const Input u(0.1, -0.2, 0.05, 0.0);
  for (auto _ : st) {
    State x = fig4_state(p);
    for (int s = 0; s < 10; ++s) x = rk4_step(x, u, 1.0, p);
    benchmark::DoNotOptimize(x);
  }
}
BENCHMARK(BM_Rk4ControlPeriod);

void BM_Synthesize(benchmark::State& st) {
  const SpacecraftParams p;
  const MpcConfig cfg;
  for (auto _ : st) benchmark::DoNotOptimize(synthesize(p, Reference(-1, 1), cfg));
}
BENCHMARK(BM_Synthesize)->Unit(benchmark::kMillisecond);

void BM_PgSolve(benchmark::State& st) {
  const SpacecraftParams p;
  const MpcConfig cfg;
  const Synthesis syn = synthesize(p, Reference(-1, 1), cfg);
  const CondensedQp qp = condense(syn.model, cfg, syn.P);
  const Vec10 x0 = fig4_state(p) - equilibrium(Reference(-1, 1), p);
  const Vector warm = Vector::Zero(4 * cfg.horizon);
  const int l = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(pg_solve(qp, x0, warm, l, cfg.u_max));
}
BENCHMARK(BM_PgSolve)->Arg(1)->Arg(6)->Arg(10);

void BM_Admissible(benchmark::State& st) {
  const SpacecraftParams p;
  const MpcConfig mpc;
  const Reference r(-1, 1);
  const Synthesis syn = synthesize(p, r, mpc);
  const Mat10 P_F = solve_dlyap(syn.Acl, Matrix::Identity(10, 10));
  const State x = fig4_state(p);
  const Reference v = initial_reference(x);
  TdmpcController c(syn, mpc);
  const Vector U = c.solve(Vec10(x - equilibrium(v, p)), 6);
  RgConfig cfg;
  cfg.prediction = st.range(0) ? PredictionModel::kNonlinear : PredictionModel::kLinear;
  // Level 0 never admits an early exit, so the full N_RG prediction runs.
  const double level = st.range(1) ? 0.0 : 499.0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(admissible({x, v, U, cfg.n_rg, level}, syn, P_F, ConstraintSet{}, cfg, mpc.horizon, p));
  }
}
// Args: (nonlinear prediction, full-length prediction).
BENCHMARK(BM_Admissible)->Args({0, 0})->Args({0, 1})->Args({1, 0})->Args({1, 1})->Unit(benchmark::kMicrosecond);

void BM_DocIndex(benchmark::State& st) {
  const SpacecraftParams p;
  const ContinuousLinearModel m = linearize_analytic(p, Reference::Zero());
  for (auto _ : st) benchmark::DoNotOptimize(doc_index(m.A, m.B, 3600.0));
}
BENCHMARK(BM_DocIndex)->Unit(benchmark::kMicrosecond);

void BM_ClosedLoopOrbit(benchmark::State& st) {
  ScenarioConfig sc = default_scenario();
  sc.controller = st.range(0) ? ControllerKind::kRgTdmpc : ControllerKind::kTdmpc;
  sc.duration_orbits = 1.0;
  for (auto _ : st) benchmark::DoNotOptimize(run_closed_loop(sc));
}
BENCHMARK(BM_ClosedLoopOrbit)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
