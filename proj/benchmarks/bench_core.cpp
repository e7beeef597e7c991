#include <benchmark/benchmark.h>

#include "celo/fpu.hpp"
#include "celo/metrics.hpp"
#include "celo/optimizer.hpp"
#include "celo/pes.hpp"
#include "celo/runner.hpp"

using namespace celo;

namespace {

TaskInstance bench_task() {
  TaskInstance task;
  task.id = "bench";
  task.data = std::make_shared<Dataset>(synthesize_dataset(10, 64, 2048, RngStream(1), 1.2));
  task.net = make_mlp_spec({64, 32, 10}, Act::ReLU);
  task.batch_size = 64;
  return task;
}

void BM_MlpForwardBackward(benchmark::State& state) {
  const TaskInstance task = bench_task();
  const ParamSet theta = init_params(task.net, RngStream(2));
  const Batch batch = sample_batch(task, RngStream(3));
  for (auto _ : state) {
    LossGrad lg = loss_and_grad(task, theta, batch);
    benchmark::DoNotOptimize(lg.loss);
  }
}
BENCHMARK(BM_MlpForwardBackward);

void BM_CeloUpdate(benchmark::State& state) {
  const TaskInstance task = bench_task();
  ParamSet theta = init_params(task.net, RngStream(2));
  const CeloParams phi = make_celo_params(CeloConfig{}, RngStream(4));
  CeloState opt_state = init_state(theta, 2000, phi.config.lstm_hidden);
  const Batch batch = sample_batch(task, RngStream(3));
  const LossGrad lg = loss_and_grad(task, theta, batch);
  for (auto _ : state) {
    celo_update(phi, CeloVariant::Full, theta, lg.grads, lg.loss, opt_state);
    benchmark::DoNotOptimize(theta);
  }
}
BENCHMARK(BM_CeloUpdate);

void BM_PerParamFeatures(benchmark::State& state) {
  const TaskInstance task = bench_task();
  const ParamSet theta = init_params(task.net, RngStream(2));
  CeloState opt_state = init_state(theta, 2000);
  const Batch batch = sample_batch(task, RngStream(3));
  const LossGrad lg = loss_and_grad(task, theta, batch);
  update_accumulators(opt_state, lg.grads, lg.loss);
  for (auto _ : state) {
    const Tensor f =
        per_param_features(opt_state, 0, theta.entry(0).tensor, lg.grads.entry(0).tensor);
    benchmark::DoNotOptimize(f.data());
  }
}
BENCHMARK(BM_PerParamFeatures);

void BM_PesTruncation(benchmark::State& state) {
  const std::vector<TaskInstance> suite = {bench_task()};
  PesConfig config;
  config.truncation = 10;
  config.pairs = 2;
  config.unroll_min = 100;
  config.unroll_max = 200;
  config.workers = 1;
  const CeloParams phi = make_celo_params(CeloConfig{}, RngStream(5));
  MetaState meta = make_meta_state(phi, StageId::UpdateRule, config);
  const RngStream root(6);
  for (auto _ : state) {
    PesEstimate est = pes_truncation(phi, meta, suite, config, root);
    benchmark::DoNotOptimize(est.mean_meta_loss);
  }
}
BENCHMARK(BM_PesTruncation)->Unit(benchmark::kMillisecond);

void BM_Iqm(benchmark::State& state) {
  RngStream rng(7);
  ScoreMatrix m;
  m.optimizer_id = "bench";
  m.trials = 10;
  for (int t = 0; t < 20; ++t) m.task_ids.push_back("t" + std::to_string(t));
  m.scores.resize(200);
  for (double& s : m.scores) s = 2.0 * rng.next_double();
  for (auto _ : state) {
    benchmark::DoNotOptimize(iqm(m));
  }
}
BENCHMARK(BM_Iqm);

}  // namespace

int main(int argc, char** argv) {
  celo::flush_denormals_to_zero();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
