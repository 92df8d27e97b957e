#include <benchmark/benchmark.h>

#include "explearn/cli.hpp"
#include "explearn/eval.hpp"
#include "explearn/sim.hpp"

using namespace explearn;

namespace {

std::vector<env::Trace> bandit_traces(std::size_t users, std::size_t horizon) {
  sim::SimScenario scn;
  scn.kind = sim::ScenarioKind::switching_bandit;
  scn.arms = {{"A", 0.9, 0.1}, {"B", 0.1, 0.9}, {"C", 0.2, 0.2},
              {"D", 0.2, 0.2}};
  scn.users = users;
  scn.horizon = horizon;
  scn.seed = 5;
  return cli::traces_for_study(sim::simulate(scn), Study::immens, {});
}

}  // namespace

static void GridSearchEGreedy(benchmark::State& state) {
  auto traces = bandit_traces(1, static_cast<std::size_t>(state.range(0)));
  const auto grid = eval::default_grid("egreedy");
  for (auto _ : state) {
    auto best = eval::grid_search(traces[0], traces[0].steps.size() / 2,
                                  "egreedy", grid, 3);
    benchmark::DoNotOptimize(best);
  }
}
BENCHMARK(GridSearchEGreedy)->Arg(100)->Arg(400);

static void RunEvalCell(benchmark::State& state) {
  auto traces = bandit_traces(2, 200);
  eval::EvalPlan plan;
  plan.algorithms = {"greedy", "egreedy"};
  plan.thresholds = {0.2, 0.5, 0.8};
  plan.seed = 17;
  plan.workers = 1;
  for (auto _ : state) {
    auto report = eval::run_eval(traces, plan);
    benchmark::DoNotOptimize(report);
  }
}
BENCHMARK(RunEvalCell);

BENCHMARK_MAIN();
