// Serial reference kernels against their OpenMP counterparts, plus the full
// analysis. Arg is the square image side.

#include <benchmark/benchmark.h>

#include <random>

#include "physem/analysis.hpp"
#include "physem/kernels.hpp"

using namespace physem;

namespace {

ImagePlane noise_plane(int side) {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> value(0, 255);
    ImagePlane p(side, side);
    for (auto& v : p.pixels()) v = static_cast<std::uint8_t>(value(rng));
    return p;
}

/// Left half 50, right half 200, light noise.
ImagePlane halves_plane(int side) {
    std::mt19937 rng(11);
    std::uniform_int_distribution<int> noise(-5, 5);
    ImagePlane p(side, side);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) p.at(x, y) = static_cast<std::uint8_t>((x < side / 2 ? 50 : 200) + noise(rng));
    return p;
}

template <ImagePlane (*Fn)(const ImagePlane&)>
void BM_Squeeze(benchmark::State& state) {
    const ImagePlane p = noise_plane(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(Fn(p));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.size()));
}

template <std::vector<std::size_t> (*Fn)(std::span<const std::uint8_t>, std::span<const double>, double)>
void BM_Deviants(benchmark::State& state) {
    const ImagePlane p = noise_plane(static_cast<int>(state.range(0)));
    const std::vector<double> reference(p.size(), 128.0);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(p.pixels(), reference, 100.0));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.size()));
}

template <std::vector<RegionStats> (*Fn)(std::span<const RegionId>, std::span<const std::uint8_t>, RegionId)>
void BM_Accumulate(benchmark::State& state) {
    const ImagePlane p = noise_plane(static_cast<int>(state.range(0)));
    std::vector<RegionId> labels(p.size());
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<RegionId>(1 + i % 64);
    for (auto _ : state) benchmark::DoNotOptimize(Fn(labels, p.pixels(), 64));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.size()));
}

void BM_Analyze(benchmark::State& state) {
    const ImagePlane p = halves_plane(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(analyze(p));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(p.size()));
}

}  // namespace

BENCHMARK(BM_Squeeze<kernels::serial::squeeze>)->Name("squeeze/serial")->Arg(512)->Arg(2048);
BENCHMARK(BM_Squeeze<kernels::squeeze>)->Name("squeeze/omp")->Arg(512)->Arg(2048);
BENCHMARK(BM_Deviants<kernels::serial::deviants>)->Name("deviants/serial")->Arg(512)->Arg(2048);
BENCHMARK(BM_Deviants<kernels::deviants>)->Name("deviants/omp")->Arg(512)->Arg(2048);
BENCHMARK(BM_Accumulate<kernels::serial::accumulate>)->Name("accumulate/serial")->Arg(512)->Arg(2048);
BENCHMARK(BM_Accumulate<kernels::accumulate>)->Name("accumulate/omp")->Arg(512)->Arg(2048);
BENCHMARK(BM_Analyze)->Name("analyze")->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
