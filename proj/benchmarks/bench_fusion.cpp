#include <benchmark/benchmark.h>

#include "posefuse/fusion.hpp"
#include "posefuse/synth.hpp"

namespace {

using namespace posefuse;

// One silhouette-consensus search: the pipeline's dominant cost.
void BM_SilhouetteConsensusFusion(benchmark::State& state) {
  const int n_corr = static_cast<int>(state.range(0));
  const int n_ref = static_cast<int>(state.range(1));

  const SplatCloud model = gen_object(2, 1000);
  CameraIntrinsics k;
  k.width = k.height = 128;
  k.fx = k.fy = 0.5 * 128 / std::tan(0.5 * 50.0 * M_PI / 180.0);
  k.cx = k.cy = 0.5 * 127;
  const PoseSet cams = sample_hemisphere_cameras(n_corr + n_ref, 2.5, k, 5, "c_");

  Sim3 gauge;
  gauge.scale = 1.4;
  gauge.rotation = Eigen::Quaterniond(
      Eigen::AngleAxisd(0.8, Eigen::Vector3d(1, 1, 0).normalized()));
  gauge.translation = Eigen::Vector3d(0.4, -0.2, 0.1);

  PoseSet tgt, ref_true;
  tgt.label = "tgt";
  ref_true.label = "ref";
  for (int i = 0; i < n_corr; ++i) tgt.poses.push_back(cams.poses[i]);
  for (int i = n_corr; i < n_corr + n_ref; ++i)
    ref_true.poses.push_back(cams.poses[i]);
  std::map<std::string, SilhouetteMask> masks;
  for (const auto& cam : ref_true.poses)
    masks[cam.id] = threshold_mask(render_occupancy(model, cam), 0.5);
  const PoseSet src = sim3_apply_set(gauge, tgt);
  const PoseSet ref_file = sim3_apply_set(gauge, ref_true);

  FusionOptions opts;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        silhouette_consensus_fusion(src, tgt, ref_file, model, masks, opts));
  }
}
BENCHMARK(BM_SilhouetteConsensusFusion)
    ->Args({6, 10})
    ->Args({15, 15})
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
