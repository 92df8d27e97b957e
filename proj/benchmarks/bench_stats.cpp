#include <benchmark/benchmark.h>

#include <vector>

#include "explearn/stats.hpp"

using namespace explearn;

namespace {

std::pair<std::vector<double>, std::vector<double>> paired_samples(
    std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.uniform();
    y[i] = rng.uniform() + 0.1;
  }
  return {x, y};
}

}  // namespace

static void WilcoxonExact(benchmark::State& state) {
  auto [x, y] = paired_samples(static_cast<std::size_t>(state.range(0)), 7);
  stats::TestOptions opts;
  opts.force_method = stats::Method::exact;
  for (auto _ : state) {
    auto r = stats::wilcoxon_signed_rank(x, y, opts);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(WilcoxonExact)->Arg(10)->Arg(20);

static void WilcoxonApprox(benchmark::State& state) {
  auto [x, y] = paired_samples(static_cast<std::size_t>(state.range(0)), 9);
  for (auto _ : state) {
    auto r = stats::wilcoxon_signed_rank(x, y);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(WilcoxonApprox)->Arg(100)->Arg(1000);

static void MannWhitneyExact(benchmark::State& state) {
  auto [x, y] = paired_samples(static_cast<std::size_t>(state.range(0)), 11);
  stats::TestOptions opts;
  opts.force_method = stats::Method::exact;
  for (auto _ : state) {
    auto r = stats::mann_whitney_u(x, y, opts);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(MannWhitneyExact)->Arg(6)->Arg(10);

static void MannWhitneyApprox(benchmark::State& state) {
  auto [x, y] = paired_samples(static_cast<std::size_t>(state.range(0)), 13);
  for (auto _ : state) {
    auto r = stats::mann_whitney_u(x, y);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(MannWhitneyApprox)->Arg(100)->Arg(1000);

static void PreferenceSeries(benchmark::State& state) {
  Rng rng(3);
  std::vector<std::vector<std::string>> labels;
  for (int i = 0; i < state.range(0); ++i) {
    labels.push_back({rng.bernoulli(0.5) ? "A" : "B"});
  }
  for (auto _ : state) {
    auto s = stats::preference_series(labels, "A", 5);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(PreferenceSeries)->Arg(200)->Arg(2000);
