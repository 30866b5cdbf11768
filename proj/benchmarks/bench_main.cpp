#include <benchmark/benchmark.h>

#include <vector>

#include "skillscale/metrics.hpp"
#include "skillscale/mlp.hpp"
#include "skillscale/rng.hpp"
#include "skillscale/scaling.hpp"

namespace {

using namespace skillscale;

// One SGD step at the desk width and batch.
void BM_MlpTrainStep(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  const auto dist = make_skill_distribution(0.6, 5);
  const auto spec = make_task_spec(5, 32, 3, 0);
  const auto data = sample_dataset(dist, spec, 5.0, 512, 0);
  TrainConfig cfg;
  MlpModel model = init_mlp(5, 32, width, 0.01, 0);
  MlpModel grads = model.zeros_like();
  OptimizerState opt;
  std::vector<double> scratch;
  std::int64_t step = 0;
  for (auto _ : state) {
    const double loss = accumulate_loss_and_grads(model, data.samples, grads, scratch);
    benchmark::DoNotOptimize(loss);
    train_step(model, opt, grads, cfg, 0.05, step++);
  }
  state.SetItemsProcessed(state.iterations() * data.size());
}
BENCHMARK(BM_MlpTrainStep)->Arg(256)->Arg(1000)->Unit(benchmark::kMicrosecond);

void BM_SkillStrength(benchmark::State& state) {
  const auto spec = make_task_spec(5, 32, 3, 0);
  const MlpModel model = init_mlp(5, 32, 256, 0.01, 0);
  EvalConfig eval;
  eval.n_eval = state.range(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(measure_strengths(model, spec, eval));
  }
}
BENCHMARK(BM_SkillStrength)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);

void BM_TheoryCurve(benchmark::State& state) {
  TheoryParams tp;
  tp.n_s = static_cast<int>(state.range(0));
  tp.N = tp.n_s;
  const auto grid = log_grid(1.0, 1e8, 100);
  for (auto _ : state) {
    benchmark::DoNotOptimize(theory_curve(Law::time, tp, grid));
  }
}
BENCHMARK(BM_TheoryCurve)->Arg(1000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_TimePrefactor(benchmark::State& state) {
  TheoryParams tp;
  for (auto _ : state) {
    benchmark::DoNotOptimize(theory_prefactor(Law::time, tp));
  }
}
BENCHMARK(BM_TimePrefactor)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
