#include <benchmark/benchmark.h>

#include "ddhinf/datagen.hpp"
#include "ddhinf/matlin.hpp"
#include "ddhinf/mhc.hpp"
#include "ddhinf/plant.hpp"
#include "ddhinf/rng.hpp"
#include "ddhinf/synth.hpp"

namespace {

using namespace ddhinf;

const PlantModel& bench_plant() {
  static const PlantModel plant = PlantModel::example44();
  return plant;
}

const SynthesisSpec& bench_spec() {
  static const SynthesisSpec spec = [] {
    const PlantModel& plant = bench_plant();
    const DataSet data = excite(plant, 100, 1.0, 1e-2, 7);
    const ConsistencyForm form =
        consistency_form(data, noise_model_pointwise(1e-2, 100, plant.n()));
    Vector x0(3);
    x0 << 0.95, 0.0, 0.0;
    return SynthesisSpec::from_plant(plant, form, x0, 1e-2, 10.0, true);
  }();
  return spec;
}

SymMatrix random_spd(Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix G(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) G(i, j) = rng.gaussian();
  return SymMatrix(Matrix(G * G.transpose() + Matrix::Identity(n, n)));
}

void BM_psd_margin(benchmark::State& state) {
  const SymMatrix S = random_spd(state.range(0), 11);
  for (auto _ : state) benchmark::DoNotOptimize(psd_margin(S));
}
BENCHMARK(BM_psd_margin)->Arg(4)->Arg(11);

void BM_schur_reduce(benchmark::State& state) {
  const SymMatrix S = random_spd(11, 12);
  for (auto _ : state) benchmark::DoNotOptimize(schur_reduce(S, 3));
}
BENCHMARK(BM_schur_reduce);

void BM_membership(benchmark::State& state) {
  const ConsistencyForm& form = bench_spec().form;
  const PlantModel& plant = bench_plant();
  for (auto _ : state) benchmark::DoNotOptimize(membership(form, plant.A, plant.B));
}
BENCHMARK(BM_membership);

void BM_hinf_norm(benchmark::State& state) {
  Matrix A(3, 3);
  A << 0.5, 0.1, 0.0, -0.2, 0.6, 0.05, 0.0, 0.1, 0.4;
  const Matrix C = Matrix::Identity(1, 3);
  for (auto _ : state) benchmark::DoNotOptimize(hinf_norm(A, C));
}
BENCHMARK(BM_hinf_norm);

void BM_delta_update(benchmark::State& state) {
  Rng rng(31);
  const Vector x = rng.gaussian_vec(3);
  const SymMatrix P = random_spd(3, 32);
  const SymMatrix Pm = random_spd(3, 33);
  double delta = 0.0;
  for (auto _ : state) benchmark::DoNotOptimize(delta = delta_update(delta, x, P, Pm));
}
BENCHMARK(BM_delta_update);

void BM_static_solve(benchmark::State& state) {
  const SynthesisSpec& spec = bench_spec();
  for (auto _ : state) {
    Program prog = build_static(spec);
    const SolverReport rep = solve(prog);
    benchmark::DoNotOptimize(rep.objective);
  }
}
BENCHMARK(BM_static_solve)->Unit(benchmark::kMillisecond);

void BM_mh_step(benchmark::State& state) {
  const SynthesisSpec& spec = bench_spec();
  LoopState warm = init(spec, spec.x0, 1e-2, 10.0);
  Vector x = spec.x0;
  mhc_step(warm, x);
  const StepResult s = step(bench_plant(), x, warm.prev_ctrl.K * x, Vector::Zero(3));
  warm.sigma = sigma_update(warm.sigma, 0.0).value;
  x = s.x_next;
  for (auto _ : state) {
    LoopState st = warm;
    benchmark::DoNotOptimize(mhc_step(st, x));
  }
}
BENCHMARK(BM_mh_step)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
