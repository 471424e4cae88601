#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>
#include <vector>

#include "imgk/kernels.hpp"

using imgk::Matrix;

namespace {

Matrix random_points(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Matrix m(n, d);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
}

std::vector<int> random_labels(Eigen::Index n, int k, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % static_cast<std::size_t>(k));
    std::shuffle(labels.begin(), labels.end(), rng);
    return labels;
}

template <void (*Fn)(const Matrix&, Matrix&)>
void BM_pairwise(benchmark::State& state) {
    const Matrix pts = random_points(state.range(0), 100, 1);
    Matrix out;
    for (auto _ : state) {
        Fn(pts, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}

template <void (*Fn)(const Matrix&, const Matrix&, std::span<int>, std::span<double>)>
void BM_assign(benchmark::State& state) {
    const Matrix pts = random_points(state.range(0), 100, 2);
    const Matrix cents = random_points(state.range(1), 100, 3);
    std::vector<int> labels(static_cast<std::size_t>(pts.rows()));
    std::vector<double> dist(labels.size());
    for (auto _ : state) {
        Fn(pts, cents, labels, dist);
        benchmark::DoNotOptimize(labels.data());
    }
}

template <void (*Fn)(const Matrix&, std::span<const int>, int, std::span<double>)>
void BM_silhouette_direct(benchmark::State& state) {
    const Matrix pts = random_points(state.range(0), 100, 4);
    const auto labels = random_labels(pts.rows(), 20, 5);
    std::vector<double> out(labels.size());
    for (auto _ : state) {
        Fn(pts, labels, 20, out);
        benchmark::DoNotOptimize(out.data());
    }
}

template <void (*Fn)(const Matrix&, std::span<const int>, int, std::span<double>)>
void BM_silhouette_cached(benchmark::State& state) {
    const Matrix pts = random_points(state.range(0), 100, 6);
    Matrix dist;
    imgk::kernels::serial::pairwise_distances(pts, dist);
    const auto labels = random_labels(pts.rows(), 20, 7);
    std::vector<double> out(labels.size());
    for (auto _ : state) {
        Fn(dist, labels, 20, out);
        benchmark::DoNotOptimize(out.data());
    }
}

}  // namespace

namespace ks = imgk::kernels::serial;
namespace ko = imgk::kernels::omp;

BENCHMARK(BM_pairwise<ks::pairwise_distances>)->Name("pairwise/serial")->Arg(392)->Arg(1960);
BENCHMARK(BM_pairwise<ko::pairwise_distances>)->Name("pairwise/omp")->Arg(392)->Arg(1960)->UseRealTime();
BENCHMARK(BM_assign<ks::assign_nearest>)->Name("assign/serial")->Args({1960, 50})->Args({1960, 300});
BENCHMARK(BM_assign<ko::assign_nearest>)->Name("assign/omp")->Args({1960, 50})->Args({1960, 300})->UseRealTime();
BENCHMARK(BM_silhouette_direct<ks::silhouette_samples_direct>)->Name("silhouette_direct/serial")->Arg(392)->Arg(1960);
BENCHMARK(BM_silhouette_direct<ko::silhouette_samples_direct>)
    ->Name("silhouette_direct/omp")
    ->Arg(392)
    ->Arg(1960)
    ->UseRealTime();
BENCHMARK(BM_silhouette_cached<ks::silhouette_samples>)->Name("silhouette_cached/serial")->Arg(392)->Arg(1960);
BENCHMARK(BM_silhouette_cached<ko::silhouette_samples>)->Name("silhouette_cached/omp")->Arg(392)->Arg(1960)->UseRealTime();

BENCHMARK_MAIN();
