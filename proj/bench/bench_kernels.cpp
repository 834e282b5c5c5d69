// Serial reference kernels against their OpenMP versions.
// Thread count follows OMP_NUM_THREADS.

#include "layoutforge/kernels.hpp"

#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>

using namespace layoutforge;

namespace {

std::vector<Vec3> cloud(std::size_t n) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  std::vector<Vec3> pts(n);
  for (Vec3& p : pts) p = Vec3(u(rng), u(rng), 0.5 * (u(rng) + 3));
  return pts;
}

std::vector<Plane> planes(int n) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::vector<Plane> out;
  for (int i = 0; i < n; ++i) out.push_back({Vec3(g(rng), g(rng), g(rng)).normalized(), g(rng)});
  return out;
}

PatchFeatureMap feature_map(int side, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> g;
  PatchFeatureMap m;
  m.rows = m.cols = side;
  m.dim = dim;
  m.data.resize(static_cast<std::size_t>(side) * side * dim);
  for (float& x : m.data) x = g(rng);
  m.finalize();
  return m;
}

std::vector<PatchFeatureMap> template_set(int views) {
  std::vector<PatchFeatureMap> out;
  for (int v = 0; v < views; ++v) out.push_back(feature_map(16, 64, 100 + v));
  return out;
}

std::vector<std::vector<CellKey>> cell_sets(int objects) {
  std::mt19937_64 rng(3);
  std::vector<std::vector<CellKey>> out;
  for (int o = 0; o < objects; ++o) {
    const int x0 = static_cast<int>(rng() % 80), y0 = static_cast<int>(rng() % 80);
    std::vector<CellKey> cells;
    for (int i = 0; i < 12; ++i) {
      for (int j = 0; j < 12; ++j) {
        for (int k = 0; k < 16; ++k) cells.push_back(pack_cell(x0 + i, y0 + j, k));
      }
    }
    std::sort(cells.begin(), cells.end());
    out.push_back(std::move(cells));
  }
  return out;
}

template <bool Parallel>
void BM_PlaneInliers(benchmark::State& st) {
  const auto pts = cloud(static_cast<std::size_t>(st.range(0)));
  const auto pl = planes(64);
  for (auto _ : st) {
    auto r = Parallel ? kernels::count_plane_inliers(pts, pl, 0.02) : kernels::serial::count_plane_inliers(pts, pl, 0.02);
    benchmark::DoNotOptimize(r);
  }
  st.SetItemsProcessed(st.iterations() * st.range(0) * 64);
}

template <bool Parallel>
void BM_MutualNN(benchmark::State& st) {
  const auto a = feature_map(static_cast<int>(st.range(0)), 128, 7);
  const auto b = feature_map(static_cast<int>(st.range(0)), 128, 8);
  for (auto _ : st) {
    auto r = Parallel ? kernels::mutual_nearest_neighbors(a, b, 0.5) : kernels::serial::mutual_nearest_neighbors(a, b, 0.5);
    benchmark::DoNotOptimize(r);
  }
}

template <bool Parallel>
void BM_ViewSimilarities(benchmark::State& st) {
  const auto views = template_set(static_cast<int>(st.range(0)));
  const auto q = feature_map(16, 64, 9);
  for (auto _ : st) {
    auto r = Parallel ? kernels::view_similarities(views, q, 0.5) : kernels::serial::view_similarities(views, q, 0.5);
    benchmark::DoNotOptimize(r);
  }
}

template <bool Parallel>
void BM_OverlappingPairs(benchmark::State& st) {
  const auto sets = cell_sets(static_cast<int>(st.range(0)));
  for (auto _ : st) {
    auto r = Parallel ? kernels::overlapping_pairs(sets) : kernels::serial::overlapping_pairs(sets);
    benchmark::DoNotOptimize(r);
  }
}

}  // namespace

BENCHMARK(BM_PlaneInliers<false>)->Name("plane_inliers/serial")->Arg(1 << 14)->Arg(1 << 17);
BENCHMARK(BM_PlaneInliers<true>)->Name("plane_inliers/omp")->Arg(1 << 14)->Arg(1 << 17);
BENCHMARK(BM_MutualNN<false>)->Name("mutual_nn/serial")->Arg(16)->Arg(32);
BENCHMARK(BM_MutualNN<true>)->Name("mutual_nn/omp")->Arg(16)->Arg(32);
BENCHMARK(BM_ViewSimilarities<false>)->Name("view_similarities/serial")->Arg(42)->Arg(162);
BENCHMARK(BM_ViewSimilarities<true>)->Name("view_similarities/omp")->Arg(42)->Arg(162);
BENCHMARK(BM_OverlappingPairs<false>)->Name("overlapping_pairs/serial")->Arg(16)->Arg(64);
BENCHMARK(BM_OverlappingPairs<true>)->Name("overlapping_pairs/omp")->Arg(16)->Arg(64);

BENCHMARK_MAIN();
