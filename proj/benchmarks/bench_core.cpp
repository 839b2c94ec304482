#include <benchmark/benchmark.h>

#include "rmgd/bandit.hpp"
#include "rmgd/data.hpp"
#include "rmgd/model.hpp"
#include "rmgd/optim.hpp"
#include "rmgd/regret.hpp"
#include "rmgd/trainer.hpp"

using namespace rmgd;

namespace {

bandit::ArmSet arms_of(std::int64_t k) {
  std::vector<std::int64_t> sizes;
  for (std::int64_t i = 0; i < k; ++i) sizes.push_back(std::int64_t{16} << i);
  return bandit::ArmSet(sizes);
}

void BM_BanditSampleUpdate(benchmark::State& state) {
  auto s = bandit::init_uniform(arms_of(state.range(0)), 0.05, 1);
  int y = 0;
  for (auto _ : state) {
    const auto arm = bandit::sample_arm(s);
    s = bandit::update(std::move(s), bandit::Cost{y ^= 1, arm});
    benchmark::DoNotOptimize(s.probs.data());
  }
}
BENCHMARK(BM_BanditSampleUpdate)->Arg(6)->Arg(32);

void BM_MlpLossAndGrad(benchmark::State& state) {
  const auto ds = data::make_blobs(5, 400, 20, 1.5, 1);
  const model::ModelSpec spec{model::ModelKind::kMlp, 20, 32, 5, 1e-4};
  const auto params = model::init_params(spec, 1);
  const auto plan = data::make_plan(ds.m(), 1);
  const auto batch = data::gather(ds.train, data::batch_indices(plan, state.range(0)).front());
  std::vector<double> grad;
  for (auto _ : state) benchmark::DoNotOptimize(model::loss_and_grad(spec, params, batch, grad));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpLossAndGrad)->Arg(16)->Arg(128)->Arg(512);

void BM_Epoch(benchmark::State& state) {
  const auto ds = data::make_blobs(5, 400, 20, 1.5, 1);
  const model::ModelSpec spec{model::ModelKind::kMlp, 20, 32, 5, 0.0};
  const auto params = model::init_params(spec, 1);
  optim::OptimizerConfig cfg;
  cfg.kind = optim::OptimizerKind::kAdam;
  const auto opt = optim::make_state(cfg, params.size());
  const auto plan = data::make_plan(ds.m(), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(trainer::run_epoch(spec, params, opt, state.range(0), 1e-3, ds, plan).val_loss);
  }
}
BENCHMARK(BM_Epoch)->Arg(8)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_RegretSimulation(benchmark::State& state) {
  const auto env = regret::CostEnvironment::stochastic({0.2, 0.6, 0.6, 0.6, 0.6, 0.6}, state.range(0));
  regret::SimulationOptions opts;
  opts.keep_trace = false;
  for (auto _ : state) benchmark::DoNotOptimize(regret::run_bandit(env, 0.01, 3, 1, opts).mean_regret);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RegretSimulation)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
