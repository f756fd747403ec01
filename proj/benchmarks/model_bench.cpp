#include <benchmark/benchmark.h>

#include <random>

#include "erisk/model.hpp"

namespace {

using erisk::model::Example;

std::vector<Example> batch(std::size_t n) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<Example> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].label = static_cast<int>(i % 2);
    out[i].x.resize(static_cast<Eigen::Index>(erisk::model::kInputDim));
    for (Eigen::Index k = 0; k < out[i].x.size(); ++k) out[i].x[k] = g(rng);
  }
  return out;
}

void BM_Forward(benchmark::State& state) {
  const auto h = erisk::model::init_head(1, static_cast<int>(state.range(0)));
  const auto b = batch(1);
  for (auto _ : state) benchmark::DoNotOptimize(erisk::model::forward(h, b[0].x));
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(2);

void BM_LossAndGrad(benchmark::State& state) {
  const auto h = erisk::model::init_head(1, 2);
  const auto b = batch(static_cast<std::size_t>(state.range(0)));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(erisk::model::loss_and_grad(h, b, erisk::model::Mode::train(++seed)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LossAndGrad)->Arg(1)->Arg(8)->Arg(32);

void BM_TrainEpoch(benchmark::State& state) {
  const auto b = batch(200);
  erisk::model::TrainConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(erisk::model::train_head(b, cfg, 2));
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

}  // namespace
