// OpenMP kernels against their serial references on N x K tables.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "gla/kernels.hpp"

namespace {

gla::LogitTable random_table(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 3.0);
  std::vector<double> v(n * k);
  for (double& x : v) x = g(rng);
  return gla::LogitTable(n, k, std::move(v));
}

std::vector<int> labels_for(std::size_t n, std::size_t k) {
  std::vector<int> y(n);
  for (std::size_t r = 0; r < n; ++r) y[r] = static_cast<int>(r % k);
  return y;
}

void args(benchmark::internal::Benchmark* b) {
  for (long n : {10000L, 100000L, 1000000L}) {
    for (long k : {10L, 100L}) {
      if (n * k <= 20000000L) b->Args({n, k});
    }
  }
  b->Unit(benchmark::kMillisecond);
}

template <auto Fn>
void BM_softmax(benchmark::State& state) {
  const auto t = random_table(static_cast<std::size_t>(state.range(0)),
                              static_cast<std::size_t>(state.range(1)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(t));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void BM_class_means(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto probs = gla::kernels::serial::softmax_rows(random_table(n, k, 2));
  const auto y = labels_for(n, k);
  std::vector<std::size_t> counts;
  for (auto _ : state) benchmark::DoNotOptimize(Fn(probs, k, y, counts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void BM_combine(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto k = static_cast<std::size_t>(state.range(1));
  const auto a = random_table(n, k, 3);
  const auto b = random_table(n, k, 4);
  const std::vector<double> sa(k, -1.0);
  const std::vector<double> sb(k, -2.0);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(a, sa, 1.0, b, sb, 1.0, {}));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Fn>
void BM_argmax(benchmark::State& state) {
  const auto t = random_table(static_cast<std::size_t>(state.range(0)),
                              static_cast<std::size_t>(state.range(1)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(t));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_softmax<gla::kernels::softmax_rows>)->Name("softmax/omp")->Apply(args);
BENCHMARK(BM_softmax<gla::kernels::serial::softmax_rows>)->Name("softmax/serial")->Apply(args);
BENCHMARK(BM_class_means<gla::kernels::class_mean_columns>)->Name("class_means/omp")->Apply(args);
BENCHMARK(BM_class_means<gla::kernels::serial::class_mean_columns>)
    ->Name("class_means/serial")
    ->Apply(args);
BENCHMARK(BM_combine<gla::kernels::weighted_debiased_sum>)->Name("combine/omp")->Apply(args);
BENCHMARK(BM_combine<gla::kernels::serial::weighted_debiased_sum>)
    ->Name("combine/serial")
    ->Apply(args);
BENCHMARK(BM_argmax<gla::kernels::argmax_rows>)->Name("argmax/omp")->Apply(args);
BENCHMARK(BM_argmax<gla::kernels::serial::argmax_rows>)->Name("argmax/serial")->Apply(args);

BENCHMARK_MAIN();
