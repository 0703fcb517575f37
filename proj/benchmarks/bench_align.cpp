#include <benchmark/benchmark.h>

#include "dwe/align.hpp"
#include "dwe/linalg.hpp"
#include "dwe/synth.hpp"

namespace {

dwe::EmbeddingMatrix gaussian_matrix(std::uint64_t seed, std::size_t rows, std::size_t dim) {
  dwe::synth::Rng rng(seed);
  std::vector<float> values(rows * dim);
  for (auto& v : values) v = static_cast<float>(rng.gaussian());
  return dwe::EmbeddingMatrix(rows, dim, std::move(values));
}

void BM_Svd(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto m = dwe::linalg::to_matrix(gaussian_matrix(1, d, d));
  for (auto _ : state) {
    auto r = dwe::linalg::svd(m);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_Svd)->Arg(50)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_MatmulT(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto a = gaussian_matrix(2, rows, 300);
  const auto b = gaussian_matrix(3, rows, 300);
  for (auto _ : state) {
    auto m = dwe::linalg::matmul_t(a, b);
    benchmark::DoNotOptimize(m);
  }
}
BENCHMARK(BM_MatmulT)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Procrustes(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto dim = static_cast<std::size_t>(state.range(1));
  const auto a = gaussian_matrix(4, rows, dim);
  const auto b = gaussian_matrix(5, rows, dim);
  for (auto _ : state) {
    auto fit = dwe::procrustes(a, b);
    benchmark::DoNotOptimize(fit);
  }
}
BENCHMARK(BM_Procrustes)->Args({1000, 50})->Args({10000, 300})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
