#include <benchmark/benchmark.h>

#include "explearn/learners.hpp"

using namespace explearn;

namespace {

ActionSpace bandit_space(std::size_t k) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < k; ++i) ids.push_back("arm" + std::to_string(i));
  return ActionSpace::discrete(ids);
}

// one teacher-forced predict+observe step per iteration
void drive(benchmark::State& state, const char* id, const ActionSpace& space,
           bool subset) {
  auto learner = learners::make_learner(id);
  learner->init(space, learners::default_config(id), 42);
  Rng rng(7);
  const std::size_t k = subset ? space.subset_size : 1;
  for (auto _ : state) {
    auto pred = learner->predict(k);
    benchmark::DoNotOptimize(pred);
    Step s;
    if (subset) {
      std::vector<std::string> items;
      for (const auto& [idx, score] : pred.ranked) items.push_back(idx);
      s.items = std::move(items);
      s.reward = rng.uniform() * 3.0;
    } else {
      s.action = space.actions[rng.uniform_index(space.actions.size())];
      s.reward = rng.bernoulli(0.3) ? 1.0 : 0.0;
      s.state = rng.bernoulli(0.5) ? "s0" : "s1";
    }
    learner->observe(s);
  }
}

}  // namespace

static void GreedyStep(benchmark::State& state) {
  drive(state, "greedy", bandit_space(5), false);
}
BENCHMARK(GreedyStep);

static void BushMostellerStep(benchmark::State& state) {
  drive(state, "bush_mosteller", bandit_space(22), false);
}
BENCHMARK(BushMostellerStep);

static void QLearnStep(benchmark::State& state) {
  drive(state, "qlearn", bandit_space(4), false);
}
BENCHMARK(QLearnStep);

static void MortalStep(benchmark::State& state) {
  drive(state, "mortal", bandit_space(5), false);
}
BENCHMARK(MortalStep);

// C(22, 3) = 1540 subsets, the weather-dataset scale
static void CombinatorialStep(benchmark::State& state) {
  std::vector<std::string> universe;
  for (int i = 0; i < 22; ++i) universe.push_back("attr" + std::to_string(i));
  drive(state, "cmab", ActionSpace::subset(universe, 3), true);
}
BENCHMARK(CombinatorialStep);
