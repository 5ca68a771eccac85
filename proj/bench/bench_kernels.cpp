// Serial reference kernels against their OpenMP versions, plus one
// end-to-end Gramian assembly.

#include <benchmark/benchmark.h>

#include <random>

#include "stokesheat/hilbert_ops.hpp"
#include "stokesheat/kernels.hpp"

using namespace stokesheat;

namespace {

template <class T>
Matrix<T> random_spd(std::size_t n) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix<T> v(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) v(i, j) = T(u(rng));
  auto a = kernels::serial::gram_rows(v);
  for (std::size_t i = 0; i < n; ++i) a(i, i) += T(n);
  return a;
}

template <class T>
Matrix<T> random_rect(std::size_t rows, std::size_t cols) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix<T> v(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) v(i, j) = T(u(rng));
  return v;
}

template <class T, bool Parallel>
void BM_Jacobi(benchmark::State& state) {
  const auto a = random_spd<T>(static_cast<std::size_t>(state.range(0)));
  kernels::JacobiOptions opts;
  opts.want_vectors = false;
  for (auto _ : state) {
    auto r = Parallel ? kernels::jacobi_eigen(a, opts) : kernels::serial::jacobi_eigen(a, opts);
    benchmark::DoNotOptimize(r.values.data());
  }
}

template <class T, bool Parallel>
void BM_GramRows(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto v = random_rect<T>(n, 4 * n);
  for (auto _ : state) {
    auto g = Parallel ? kernels::gram_rows(v) : kernels::serial::gram_rows(v);
    benchmark::DoNotOptimize(g.data());
  }
}

void BM_ObsGramian(benchmark::State& state) {
  const auto basis = assemble_basis(static_cast<double>(state.range(0)),
                                    default_k_max(static_cast<double>(state.range(0))));
  const ObservationRegion region(0, 3.141592653589793, 0.3, 0.7);
  for (auto _ : state) {
    auto g = obs_gramian(basis, region);
    benchmark::DoNotOptimize(g.m.data());
  }
  state.counters["modes"] = static_cast<double>(basis.size());
}

}  // namespace

BENCHMARK(BM_Jacobi<double, false>)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Jacobi<double, true>)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Jacobi<Wide, false>)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Jacobi<Wide, true>)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramRows<double, false>)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramRows<double, true>)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramRows<Wide, false>)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GramRows<Wide, true>)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ObsGramian)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
