#include <benchmark/benchmark.h>

#include "posefuse/render.hpp"
#include "posefuse/synth.hpp"

namespace {

using namespace posefuse;

CameraPose bench_camera(int size) {
  CameraIntrinsics k;
  k.width = k.height = size;
  k.fx = k.fy = 0.5 * size / std::tan(0.5 * 50.0 * M_PI / 180.0);
  k.cx = k.cy = 0.5 * (size - 1);
  return sample_hemisphere_cameras(1, 2.5, k, 3, "bench_").poses[0];
}

void BM_RenderOccupancy(benchmark::State& state) {
  const SplatCloud cloud = gen_object(1, static_cast<int>(state.range(0)));
  const CameraPose cam = bench_camera(static_cast<int>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_occupancy(cloud, cam));
  }
}
BENCHMARK(BM_RenderOccupancy)
    ->Args({500, 64})
    ->Args({2000, 128})
    ->Args({2000, 256})
    ->Unit(benchmark::kMillisecond);

void BM_RenderRgb(benchmark::State& state) {
  const SplatCloud cloud = gen_object(1, static_cast<int>(state.range(0)));
  const CameraPose cam = bench_camera(static_cast<int>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(render_rgb(cloud, cam));
  }
}
BENCHMARK(BM_RenderRgb)->Args({2000, 128})->Unit(benchmark::kMillisecond);

void BM_PhotometricBackward(benchmark::State& state) {
  const SplatCloud cloud = gen_object(1, static_cast<int>(state.range(0)));
  const CameraPose cam = bench_camera(static_cast<int>(state.range(1)));
  const RgbImage ref = render_rgb(cloud, cam);
  const SilhouetteMask mask = threshold_mask(render_occupancy(cloud, cam), 0.5);
  RenderOptions opts;
  for (auto _ : state) {
    SplatGradients grads(cloud.splats.size());
    benchmark::DoNotOptimize(
        photometric_loss_backward(cloud, cam, ref, mask, opts, grads));
  }
}
BENCHMARK(BM_PhotometricBackward)->Args({2000, 128})->Unit(benchmark::kMillisecond);

}  // namespace
