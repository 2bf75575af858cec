#include <benchmark/benchmark.h>

#include <cmath>

#include "fgs/tensor.hpp"
#include "fgs/transfer.hpp"

using namespace fgs;

namespace {

Vec random_vec(std::size_t n, std::uint64_t seed) {
    SeededRng rng(seed);
    return sample_standard_normal(rng, n);
}

Payload random_attention(int side, std::uint64_t seed) {
    const int n = side * side;
    SeededRng rng(seed);
    Vec d(static_cast<std::size_t>(n) * n);
    for (double& v : d) v = std::exp(rng.normal());
    Payload p = Payload::attention(n, side, side, d);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += p.row(i)[j];
        for (int j = 0; j < n; ++j) p.row(i)[j] /= s;
    }
    return p;
}

template <void (*Fn)(const double*, const double*, double*, int, int, int)>
void BM_Matmul(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Vec a = random_vec(std::size_t(n) * n, 1), b = random_vec(std::size_t(n) * n, 2);
    Vec c(std::size_t(n) * n);
    for (auto _ : state) {
        Fn(a.data(), b.data(), c.data(), n, n, n);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(state.iterations() * std::int64_t(n) * n * n);
}

template <Grid (*Fn)(const Grid&, const Kernel2D&)>
void BM_Convolve(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const Grid g(n, n, random_vec(std::size_t(n) * n, 3));
    const auto k = Kernel2D::outer(gaussian_kernel(2.0, 6));
    for (auto _ : state) benchmark::DoNotOptimize(Fn(g, k));
}

template <Payload (*Fn)(const Payload&, const PerturbKind&, SeededRng&)>
void BM_PerturbBlur(benchmark::State& state) {
    const auto p = random_attention(static_cast<int>(state.range(0)), 4);
    SeededRng rng(5);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(p, PerturbKind::blur(5.0), rng));
}

template <Payload (*Fn)(const Payload&, const PerturbKind&, SeededRng&)>
void BM_PerturbNoise(benchmark::State& state) {
    const auto p = random_attention(static_cast<int>(state.range(0)), 6);
    SeededRng rng(7);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(p, PerturbKind::noise(0.1), rng));
}

} // namespace

BENCHMARK(BM_Matmul<matmul>)->Name("matmul/parallel")->Arg(64)->Arg(256);
BENCHMARK(BM_Matmul<matmul_reference>)->Name("matmul/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_Matmul<matmul_bt>)->Name("matmul_bt/parallel")->Arg(64)->Arg(256);
BENCHMARK(BM_Matmul<matmul_bt_reference>)->Name("matmul_bt/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_Convolve<convolve>)->Name("convolve/parallel")->Arg(64)->Arg(256);
BENCHMARK(BM_Convolve<convolve_reference>)->Name("convolve/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_PerturbBlur<perturb>)->Name("perturb_blur/parallel")->Arg(16);
BENCHMARK(BM_PerturbBlur<perturb_reference>)->Name("perturb_blur/serial")->Arg(16);
BENCHMARK(BM_PerturbNoise<perturb>)->Name("perturb_noise/parallel")->Arg(16);
BENCHMARK(BM_PerturbNoise<perturb_reference>)->Name("perturb_noise/serial")->Arg(16);

BENCHMARK_MAIN();
