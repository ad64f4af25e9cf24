// Serial reference vs OpenMP kernels. Arg 0 selects the path (0 serial, 1 parallel).

#include <benchmark/benchmark.h>

#include <memory>

#include "qhydro/eigensolver.hpp"
#include "qhydro/evolution.hpp"
#include "qhydro/sde.hpp"

using namespace qhydro;

namespace {

struct Fixture {
  PhysicalParams params = PhysicalParams::oscillator();
  std::shared_ptr<const Grid> grid = std::make_shared<const Grid>(Grid::polar(400, 64, 8.0));
  EigenstateSpec spec = solve_radial(params, 1.0, RadialMesh{400, 8.0}, 0);
  MadelungState state = eigenstate_density(spec, grid);
  VelocityFields fields = stationary_fields(spec, 1.0, grid, params);
  DriftField drift = DriftField::from(*grid, fields, Direction::forward);
  Grid cells = Grid::polar(20, 8, 4.0);
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

Exec exec_of(const benchmark::State& st) { return st.range(0) == 0 ? Exec::serial : Exec::parallel; }

void BM_StepEnsemble(benchmark::State& st) {
  const Fixture& f = fixture();
  Ensemble e = sample_ensemble(f.state, 100000, 1, Exec::parallel);
  std::uint64_t step = 0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(
        step_ensemble(e, f.drift, f.params.nu(), 1e-3, Direction::forward, 1, step++, exec_of(st)));
  }
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(e.size()));
}
BENCHMARK(BM_StepEnsemble)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_EstimateDensity(benchmark::State& st) {
  const Fixture& f = fixture();
  const Ensemble e = sample_ensemble(f.state, 1000000, 2, Exec::parallel);
  for (auto _ : st) benchmark::DoNotOptimize(estimate_density(e, f.cells, exec_of(st)));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(e.size()));
}
BENCHMARK(BM_EstimateDensity)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_SampleEnsemble(benchmark::State& st) {
  const Fixture& f = fixture();
  for (auto _ : st) benchmark::DoNotOptimize(sample_ensemble(f.state, 100000, 3, exec_of(st)));
}
BENCHMARK(BM_SampleEnsemble)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_PropagatorStep(benchmark::State& st) {
  const Fixture& f = fixture();
  const PolarPropagator prop(f.grid, f.params, 1e-3, exec_of(st));
  ComplexField psi = eigenstate_psi(f.spec, *f.grid, 1);
  for (auto _ : st) prop.step(psi);
}
BENCHMARK(BM_PropagatorStep)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
