// Serial reference vs OpenMP kernels on MNIST-sized and larger layers.
//
//   ./bench_kernels --benchmark_filter=conv
//   OMP_NUM_THREADS=4 ./bench_kernels

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "cnnbp/kernels.hpp"

namespace k = cnn::kernels;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) {
        x = dist(gen);
    }
    return v;
}

// Square single-channel image of side state.range(0), 5x5 kernels.
k::ConvDims conv_dims(const benchmark::State& state) {
    k::ConvDims d;
    d.channels = 1;
    d.in_h = d.in_w = static_cast<std::size_t>(state.range(0));
    d.filters = static_cast<std::size_t>(state.range(1));
    d.k_h = d.k_w = 5;
    d.stride = 1;
    d.out_h = d.in_h - d.k_h + 1;
    d.out_w = d.in_w - d.k_w + 1;
    return d;
}

template <auto Fn>
void conv_forward(benchmark::State& state) {
    const k::ConvDims d = conv_dims(state);
    const auto in = random_values(d.channels * d.in_h * d.in_w, 1);
    const auto w = random_values(d.filters * d.channels * d.k_h * d.k_w, 2);
    const auto b = random_values(d.filters, 3);
    std::vector<double> out(d.filters * d.out_h * d.out_w);
    for (auto _ : state) {
        Fn(d, in, w, b, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(out.size() * d.k_h * d.k_w));
}

template <auto Fn>
void conv_weight_grad(benchmark::State& state) {
    const k::ConvDims d = conv_dims(state);
    const auto in = random_values(d.channels * d.in_h * d.in_w, 1);
    const auto g = random_values(d.filters * d.out_h * d.out_w, 4);
    std::vector<double> gw(d.filters * d.channels * d.k_h * d.k_w);
    std::vector<double> gb(d.filters);
    for (auto _ : state) {
        Fn(d, g, in, gw, gb);
        benchmark::DoNotOptimize(gw.data());
    }
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(g.size() * d.k_h * d.k_w));
}

template <auto Fn>
void matvec(benchmark::State& state) {
    const auto rows = static_cast<std::size_t>(state.range(0));
    const auto cols = static_cast<std::size_t>(state.range(1));
    const auto w = random_values(rows * cols, 5);
    const auto x = random_values(cols, 6);
    std::vector<double> y(rows);
    for (auto _ : state) {
        Fn(rows, cols, w, x, y);
        benchmark::DoNotOptimize(y.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows * cols));
}

void conv_args(benchmark::internal::Benchmark* b) {
    b->Args({28, 8})->Args({64, 16})->Args({128, 32});
}

void matvec_args(benchmark::internal::Benchmark* b) {
    b->Args({64, 1152})->Args({512, 4096})->Args({2048, 8192});
}

} // namespace

BENCHMARK(conv_forward<k::serial::conv_forward>)->Name("conv_forward/serial")->Apply(conv_args);
BENCHMARK(conv_forward<k::parallel::conv_forward>)->Name("conv_forward/parallel")->Apply(conv_args)->UseRealTime();
BENCHMARK(conv_weight_grad<k::serial::conv_weight_grad>)->Name("conv_weight_grad/serial")->Apply(conv_args);
BENCHMARK(conv_weight_grad<k::parallel::conv_weight_grad>)->Name("conv_weight_grad/parallel")->Apply(conv_args)->UseRealTime();
BENCHMARK(matvec<k::serial::matvec>)->Name("matvec/serial")->Apply(matvec_args);
BENCHMARK(matvec<k::parallel::matvec>)->Name("matvec/parallel")->Apply(matvec_args)->UseRealTime();

BENCHMARK_MAIN();
