#include <random>

#include <benchmark/benchmark.h>

#include "emoscale/gaussian_features.hpp"
#include "emoscale/model.hpp"
#include "emoscale/nn_layers.hpp"
#include "emoscale/training.hpp"

using namespace emoscale;

namespace {

Tensor noise(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> v(rows * cols);
    for (auto& x : v) x = n(rng);
    return Tensor::from({rows, cols}, std::move(v));
}

}  // namespace

static void BM_Matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Tensor a = noise(n, n, 1), b = noise(n, n, 2);
    NoGradGuard guard;
    for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(128)->Arg(256);

static void BM_Attention(benchmark::State& state) {
    const auto len = static_cast<std::size_t>(state.range(0));
    std::mt19937_64 rng(3);
    auto params = init_attention(rng, 32, 2);
    Tensor x = noise(len, 32, 4);
    NoGradGuard guard;
    for (auto _ : state) benchmark::DoNotOptimize(multi_head_self_attention(x, params));
}
BENCHMARK(BM_Attention)->Arg(32)->Arg(128)->Arg(512);

static void BM_GaussianEncode(benchmark::State& state) {
    auto proj = sample_projection(5, 8, static_cast<std::size_t>(state.range(0)), 1.0);
    Tensor x = noise(128, 8, 6);
    for (auto _ : state) benchmark::DoNotOptimize(encode_sequence(x, proj));
}
BENCHMARK(BM_GaussianEncode)->Arg(32)->Arg(1024);

static void BM_DeskInference(benchmark::State& state) {
    auto params = init_model(ModelConfig::desk());
    Tensor x = noise(128, 8, 7);
    for (auto _ : state) benchmark::DoNotOptimize(predict(x, params));
}
BENCHMARK(BM_DeskInference)->Unit(benchmark::kMillisecond);

static void BM_DeskTrainStep(benchmark::State& state) {
    auto params = init_model(ModelConfig::desk());
    auto named = params.named_parameters();
    std::vector<Sample> batch(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < batch.size(); ++i) batch[i].window = noise(128, 8, 10 + i);
    std::vector<std::vector<double>> grads;
    AdamWState opt = AdamWState::for_parameters(named);
    for (auto _ : state) {
        benchmark::DoNotOptimize(batch_gradients(batch, params, named, grads));
        adamw_step(named, grads, opt);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DeskTrainStep)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
