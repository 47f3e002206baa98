#include <benchmark/benchmark.h>

#include <numeric>

#include "hpfl/kernels.hpp"
#include "hpfl/synthetic.hpp"

using namespace hpfl;

namespace {

struct Fixture {
  TaskGroups tasks;
  ParamVector w;
  std::vector<int> all;

  explicit Fixture(int edges) {
    SyntheticTaskConfig cfg;
    cfg.model = "mlp";
    cfg.hidden = 16;
    cfg.samples_min = 200;
    cfg.samples_max = 200;
    tasks = make_tasks(cfg, std::vector<int>(static_cast<std::size_t>(edges), 8), 7);
    w = initial_model(model_dim(cfg), 11, 0.1);
    all.resize(static_cast<std::size_t>(edges));
    std::iota(all.begin(), all.end(), 0);
  }
};

void meta_grads(benchmark::State& state, ExecPolicy policy) {
  const Fixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(compute_meta_grads(f.tasks, f.all, f.w, 0.03, policy));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 8);
}

void evaluation(benchmark::State& state, ExecPolicy policy) {
  const Fixture f(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(f.tasks, f.w, 0.03, 0.03, policy));
  state.SetItemsProcessed(state.iterations() * state.range(0) * 8);
}

}  // namespace

// Wall time, since the parallel variants spread work over threads.
BENCHMARK_CAPTURE(meta_grads, serial, ExecPolicy::serial)->Arg(5)->Arg(20)->UseRealTime();
BENCHMARK_CAPTURE(meta_grads, parallel, ExecPolicy::parallel)->Arg(5)->Arg(20)->UseRealTime();
BENCHMARK_CAPTURE(evaluation, serial, ExecPolicy::serial)->Arg(5)->Arg(20)->UseRealTime();
BENCHMARK_CAPTURE(evaluation, parallel, ExecPolicy::parallel)->Arg(5)->Arg(20)->UseRealTime();

BENCHMARK_MAIN();
