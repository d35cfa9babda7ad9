// Serial reference vs OpenMP kernels on one default-size layer, plus the full
// solve and a path batch. Thread count follows OMP_NUM_THREADS / SKOFBSDE_THREADS.

#include <vector>

#include <benchmark/benchmark.h>

#include "skofbsde/coeffs.hpp"
#include "skofbsde/fbsde.hpp"
#include "skofbsde/field.hpp"
#include "skofbsde/kernels.hpp"
#include "skofbsde/parallel.hpp"
#include "skofbsde/rng.hpp"

using namespace skofbsde;
namespace k = skofbsde::kernels;

namespace {

const k::LayerShape kShape{257, 129, 12.0 / 256, 1.05 / 128};

std::vector<double> layer(std::uint64_t seed) {
  std::vector<double> v(kShape.size());
  NormalStream rng(seed);
  for (double& x : v) x = rng.next_normal();
  return v;
}

template <bool Par>
void BM_coupling(benchmark::State& st) {
  const auto w = layer(1);
  std::vector<double> c(kShape.size());
  for (auto _ : st) {
    if constexpr (Par) benchmark::DoNotOptimize(k::parallel::coupling_coefficient(kShape, w, 4.0, c));
    else benchmark::DoNotOptimize(k::serial::coupling_coefficient(kShape, w, 4.0, c));
  }
}

template <bool Par>
void BM_transport(benchmark::State& st) {
  const auto prev = layer(2), c = layer(3);
  std::vector<double> rhs(kShape.size());
  for (auto _ : st) {
    if constexpr (Par) k::parallel::transport_rhs(kShape, prev, c, 1e-3, rhs);
    else k::serial::transport_rhs(kShape, prev, c, 1e-3, rhs);
    benchmark::DoNotOptimize(rhs.data());
  }
}

template <bool Par>
void BM_diffusion(benchmark::State& st) {
  const k::DiffusionFactor f(kShape.nx1, 1.0 / 256, kShape.dx1);
  const auto src = layer(4);
  std::vector<double> rhs(kShape.size());
  for (auto _ : st) {
    rhs = src;
    if constexpr (Par) k::parallel::diffusion_solve(kShape, f, rhs);
    else k::serial::diffusion_solve(kShape, f, rhs);
    benchmark::DoNotOptimize(rhs.data());
  }
}

template <bool Par>
void BM_solve_field(benchmark::State& st) {
  const auto g = make_g(TargetMeasure::uniform(0, 1));
  ProcessCoefficients c(0, TimeFunction::constant(0.25), TimeFunction::constant(1), 1.0, 2.0);
  SolverConfig cfg;
  cfg.nt = 128;
  cfg.nx1 = 129;
  cfg.nx2 = 65;
  for (auto _ : st) {
    auto f = solve_field(g.map, c.delta_map(), cfg, c.delta_prime_sup(), Par);
    benchmark::DoNotOptimize(f.u.data());
  }
}

template <bool Par>
void BM_path_batch(benchmark::State& st) {
  const auto g = make_g(TargetMeasure::uniform(0, 1));
  ProcessCoefficients c(0, TimeFunction::constant(0.25), TimeFunction::constant(1), 1.0, 2.0);
  SolverConfig cfg;
  cfg.nt = 128;
  cfg.nx1 = 129;
  cfg.nx2 = 65;
  const auto f = solve_field(g.map, c.delta_map(), cfg, c.delta_prime_sup());
  BatchSpec spec;
  spec.n_paths = 256;
  spec.n_steps = 1024;
  for (auto _ : st) {
    auto s = simulate_batch(f, g.map, c.delta_map(), spec, Par);
    benchmark::DoNotOptimize(s.data());
  }
}

}  // namespace

BENCHMARK(BM_coupling<false>)->Name("coupling/serial");
BENCHMARK(BM_coupling<true>)->Name("coupling/parallel");
BENCHMARK(BM_transport<false>)->Name("transport_rhs/serial");
BENCHMARK(BM_transport<true>)->Name("transport_rhs/parallel");
BENCHMARK(BM_diffusion<false>)->Name("diffusion_solve/serial");
BENCHMARK(BM_diffusion<true>)->Name("diffusion_solve/parallel");
BENCHMARK(BM_solve_field<false>)->Name("solve_field/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_solve_field<true>)->Name("solve_field/parallel")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_path_batch<false>)->Name("path_batch/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_path_batch<true>)->Name("path_batch/parallel")->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  configure_workers_from_env();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
