// Serial reference kernels against their OpenMP versions, plus one full
// fourth-order step on a Cayley tree.

#include <benchmark/benchmark.h>

#include "spindiff/effective.hpp"
#include "spindiff/evolution.hpp"

using namespace spindiff;

namespace {

StateVector bench_state(int n) { return random_bath_state(n, 0, 7); }

template <KernelBackend B>
void BM_FlipFlop(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  auto psi = bench_state(n);
  for (auto _ : st) {
    kernels::apply_flip_flop(B, {psi.data(), static_cast<std::size_t>(psi.size())}, n, 0, n - 1, 1e-3);
    benchmark::ClobberMemory();
  }
  st.SetItemsProcessed(st.iterations() * psi.size());
}

template <KernelBackend B>
void BM_RotationX(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  auto psi = bench_state(n);
  for (auto _ : st) {
    kernels::apply_rotation_x(B, {psi.data(), static_cast<std::size_t>(psi.size())}, n, n / 2, 1e-3);
    benchmark::ClobberMemory();
  }
  st.SetItemsProcessed(st.iterations() * psi.size());
}

template <KernelBackend B>
void BM_Polarization(benchmark::State& st) {
  const int n = static_cast<int>(st.range(0));
  const auto psi = bench_state(n);
  for (auto _ : st)
    benchmark::DoNotOptimize(
        kernels::polarization(B, {psi.data(), static_cast<std::size_t>(psi.size())}, n, 0));
  st.SetItemsProcessed(st.iterations() * psi.size());
}

template <KernelBackend B>
void BM_CayleyStep(benchmark::State& st) {
  const auto tree = st.range(0) == 22 ? cayley_tree({1, 3, 6, 12}, default_cayley_couplings())
                                      : cayley_tree({1, 3, 6}, {default_cayley_couplings()[0],
                                                                default_cayley_couplings()[1]});
  const auto s = build_network(tree.network);
  TrotterPlan plan(s, {2e-7, false, B});
  auto psi = bench_state(s.size());
  for (auto _ : st) {
    plan.step(psi, 2e-7);
    benchmark::ClobberMemory();
  }
}

}  // namespace

BENCHMARK(BM_FlipFlop<KernelBackend::serial>)->Arg(16)->Arg(20)->Arg(22);
BENCHMARK(BM_FlipFlop<KernelBackend::openmp>)->Arg(16)->Arg(20)->Arg(22)->UseRealTime();
BENCHMARK(BM_RotationX<KernelBackend::serial>)->Arg(16)->Arg(20)->Arg(22);
BENCHMARK(BM_RotationX<KernelBackend::openmp>)->Arg(16)->Arg(20)->Arg(22)->UseRealTime();
BENCHMARK(BM_Polarization<KernelBackend::serial>)->Arg(16)->Arg(20)->Arg(22);
BENCHMARK(BM_Polarization<KernelBackend::openmp>)->Arg(16)->Arg(20)->Arg(22)->UseRealTime();
BENCHMARK(BM_CayleyStep<KernelBackend::serial>)->Arg(10)->Arg(22)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CayleyStep<KernelBackend::openmp>)->Arg(10)->Arg(22)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
