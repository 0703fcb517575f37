#include <benchmark/benchmark.h>

#include <random>

#include "dwe/query.hpp"
#include "dwe/synth.hpp"

namespace {

dwe::EpochEmbedding make(std::size_t rows, std::size_t dim) {
  dwe::synth::Rng rng(17);
  std::vector<std::string> words;
  std::vector<float> values(rows * dim);
  for (std::size_t i = 0; i < rows; ++i) words.push_back("w" + std::to_string(i));
  for (auto& v : values) v = static_cast<float>(rng.gaussian());
  return dwe::EpochEmbedding({1900}, dwe::Vocabulary(std::move(words)),
                             dwe::EmbeddingMatrix(rows, dim, std::move(values)));
}

void BM_SimilarByVector(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto dim = static_cast<std::size_t>(state.range(1));
  const auto e = make(rows, dim);
  const auto q = e.matrix().row(0);
  for (auto _ : state) {
    auto result = dwe::similar_by_vector(e, q, 10);
    benchmark::DoNotOptimize(result);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}
BENCHMARK(BM_SimilarByVector)->Args({10000, 300})->Args({100000, 300})->Unit(benchmark::kMillisecond);

void BM_KnnOracle(benchmark::State& state) {
  const auto e = make(static_cast<std::size_t>(state.range(0)), 64);
  const auto q = e.matrix().row(0);
  for (auto _ : state) {
    auto result = dwe::synth::knn_oracle(e, q, 10);
    benchmark::DoNotOptimize(result);
  }
}
BENCHMARK(BM_KnnOracle)->Arg(2000)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
