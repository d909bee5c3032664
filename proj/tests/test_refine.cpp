#include "posefuse/refine.hpp"

#include <gtest/gtest.h>

#include "posefuse/io.hpp"
#include "posefuse/rng.hpp"
#include "posefuse/synth.hpp"

using namespace posefuse;

namespace {

Eigen::Matrix<double, 7, 1> default_fd_steps() {
  Eigen::Matrix<double, 7, 1> steps;
  steps << 1e-3, 1e-3, 1e-3, 1e-3, 1e-3, 1e-3, 1e-3;
  return steps;
}

Sim3 seeded_sim3(std::uint64_t seed) {
  Rng rng(seed);
  Sim3 t;
  t.scale = std::exp(rng.uniform(-0.4, 0.4));
  t.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(
      rng.uniform(0.1, 2.0),
      Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized()));
  t.translation = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
  return t;
}

}  // namespace

TEST(Sim3FdGradient, ConstantLossHasZeroGradient) {
  const auto grad = sim3_fd_gradient([](const Sim3&) { return 3.5; },
                                     seeded_sim3(51), default_fd_steps());
  EXPECT_LT(grad.norm(), 1e-9);
}

// Quadratic oracle: L(T) = ||T(p0) - q0||^2 has the closed-form gradient
// (2 r x e, 2 e, 2 e.r) with r = s R p0 and e = T(p0) - q0.
TEST(Sim3FdGradient, MatchesAnalyticQuadratic) {
  const Eigen::Vector3d p0(0.7, -0.3, 1.2);
  const Eigen::Vector3d q0(-0.5, 0.8, 0.1);
  const auto loss = [&](const Sim3& t) { return (t.apply(p0) - q0).squaredNorm(); };

  for (std::uint64_t seed : {52, 53, 54, 55}) {
    const Sim3 at = seeded_sim3(seed);
    const auto grad = sim3_fd_gradient(loss, at, default_fd_steps());

    const Eigen::Vector3d r = at.scale * (at.rotation * p0);
    const Eigen::Vector3d e = at.apply(p0) - q0;
    Eigen::Matrix<double, 7, 1> expected;
    expected.head<3>() = 2.0 * r.cross(e);
    expected.segment<3>(3) = 2.0 * e;
    expected[6] = 2.0 * e.dot(r);

    EXPECT_LT((grad - expected).norm() / expected.norm(), 1e-4) << "seed " << seed;
  }
}

TEST(Sim3FdGradient, VanishesAtMinimum) {
  const Eigen::Vector3d p0(0.4, 0.2, -0.9);
  const Sim3 at = seeded_sim3(56);
  const Eigen::Vector3d q0 = at.apply(p0);  // minimum at `at`
  const auto grad = sim3_fd_gradient(
      [&](const Sim3& t) { return (t.apply(p0) - q0).squaredNorm(); }, at,
      default_fd_steps());
  EXPECT_LT(grad.norm(), 1e-6);
}

TEST(Sim3FdGradient, NonFiniteLossThrows) {
  EXPECT_THROW(
      sim3_fd_gradient(
          [](const Sim3& t) {
            return t.translation.x() > 0 ? std::numeric_limits<double>::infinity()
                                         : 0.0;
          },
          Sim3::identity(), default_fd_steps()),
      NonFiniteLoss);
}

TEST(MinimizeSim3, SolvesQuadraticToTolerance) {
  // Three-point registration-style quadratic with a unique Sim3 minimum.
  const Sim3 truth = seeded_sim3(57);
  std::vector<Eigen::Vector3d> pts = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0.5, 0.5, -0.5}};
  const auto loss = [&](const Sim3& t) {
    double sum = 0.0;
    for (const auto& p : pts) sum += (t.apply(p) - truth.apply(p)).squaredNorm();
    return sum / pts.size();
  };
  RefineConfig cfg;
  cfg.max_iters = 400;
  cfg.step_rot_rad = 0.1;
  cfg.step_trans_frac = 0.1;
  cfg.step_log_scale = 0.1;
  auto [best, trace] = minimize_sim3(loss, Sim3::identity(), cfg, 1.0);
  EXPECT_LT(loss(best), 1e-8);

  // Accepted losses are non-increasing.
  for (std::size_t i = 1; i < trace.losses.size(); ++i)
    EXPECT_LE(trace.losses[i], trace.losses[i - 1] + 1e-15);
}

namespace {

struct RefineFixture {
  Dataset ds;
  std::map<std::string, SilhouetteMask> masks;
  std::map<std::string, RgbImage> images;
  Sim3 gt;  // aux file frame -> main frame
  std::filesystem::path dir;

  ~RefineFixture() { std::filesystem::remove_all(dir); }
};

RefineFixture make_refine_fixture(std::uint64_t seed) {
  RefineFixture f;
  f.dir = std::filesystem::temp_directory_path() /
          ("posefuse_refine_" + std::to_string(seed));
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.n_splats = 300;
  cfg.views_per_pose = 12;
  cfg.image_size = 64;
  cfg.noiseless = true;
  f.ds = make_dataset(cfg, f.dir);
  for (const auto& cam : f.ds.poses[1].cameras.poses) {
    f.masks[cam.id] = load_pgm(f.ds.poses[1].mask_paths.at(cam.id));
    f.images[cam.id] = load_ppm(f.ds.poses[1].image_paths.at(cam.id));
  }
  f.gt = f.ds.aux_to_main[1];
  return f;
}

Sim3 perturb(const Sim3& t, double rot_deg, double trans, std::uint64_t seed) {
  Rng rng(seed);
  Sim3 d;
  d.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(
      rot_deg * M_PI / 180.0,
      Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized()));
  d.translation =
      trans * Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized();
  return sim3_compose(d, t);
}

}  // namespace

TEST(RefineSilhouette, StationaryAtGroundTruth) {
  const RefineFixture f = make_refine_fixture(58);
  RefineConfig cfg;
  cfg.max_iters = 5;
  auto [result, trace] =
      refine_silhouette(f.ds.poses[1].cameras, f.ds.model_main, f.masks, f.gt, cfg);
  EXPECT_LT(sim3_rotation_angle(result, f.gt) * 180.0 / M_PI, 1e-3);
  EXPECT_LT((result.translation - f.gt.translation).norm(), 1e-3);
  EXPECT_LE(trace.losses.back(), trace.losses.front());
}

TEST(RefineSilhouette, RecoversFromPerturbedInit) {
  const RefineFixture f = make_refine_fixture(59);
  const Sim3 init = perturb(f.gt, 2.0, 0.02 * f.ds.diameter, 60);
  RefineConfig cfg;
  cfg.max_iters = 150;
  auto [result, trace] =
      refine_silhouette(f.ds.poses[1].cameras, f.ds.model_main, f.masks, init, cfg);

  // Final per-axis angular error below 0.1 degrees on noiseless data.
  const PoseSet est = sim3_apply_set(result, f.ds.poses[1].cameras);
  const PoseSet gt = f.ds.gt_aligned(1);
  for (const auto& p : est.poses) {
    const double err =
        p.rotation.angularDistance(gt.find(p.id)->rotation) * 180.0 / M_PI;
    EXPECT_LT(err, 0.1);
  }
  // Monotone accepted losses.
  for (std::size_t i = 1; i < trace.losses.size(); ++i)
    EXPECT_LE(trace.losses[i], trace.losses[i - 1] + 1e-15);
}

TEST(RefineSilhouette, SingleIterationAtOptimumReturnsInit) {
  const RefineFixture f = make_refine_fixture(61);
  // A constant loss cannot accept any step: stall, init returned.
  RefineConfig cfg;
  cfg.max_iters = 1;
  auto [result, trace] = minimize_sim3([](const Sim3&) { return 1.0; },
                                       f.gt, cfg, f.ds.diameter);
  EXPECT_TRUE(trace.stalled);
  EXPECT_EQ(result.scale, f.gt.scale);
  EXPECT_EQ(result.translation, f.gt.translation);
}

TEST(RefinePhotometric, StationaryAtGroundTruthAndModelUntouched) {
  const RefineFixture f = make_refine_fixture(62);
  const SplatCloud before = f.ds.model_main;
  RefineConfig cfg;
  cfg.max_iters = 5;
  auto [result, trace] = refine_photometric(f.ds.poses[1].cameras, f.ds.model_main,
                                            f.images, f.masks, f.gt, cfg);
  EXPECT_LT(sim3_rotation_angle(result, f.gt) * 180.0 / M_PI, 5e-3);

  // Model immutability, bit for bit.
  ASSERT_EQ(before.splats.size(), f.ds.model_main.splats.size());
  for (std::size_t i = 0; i < before.splats.size(); ++i) {
    EXPECT_EQ(before.splats[i].position, f.ds.model_main.splats[i].position);
    EXPECT_EQ(before.splats[i].sigma, f.ds.model_main.splats[i].sigma);
    EXPECT_EQ(before.splats[i].color, f.ds.model_main.splats[i].color);
    EXPECT_EQ(before.splats[i].opacity, f.ds.model_main.splats[i].opacity);
  }
}

TEST(LocalRefine, TwoStageImprovesOverGlobalInit) {
  const RefineFixture f = make_refine_fixture(63);
  const Sim3 init = perturb(f.gt, 1.5, 0.015 * f.ds.diameter, 64);
  RefineConfig cfg;
  cfg.max_iters = 120;
  const LocalRefineResult res = local_refine(
      f.ds.poses[1].cameras, f.ds.model_main, f.images, f.masks, init, cfg, cfg);

  const double err_init = sim3_rotation_angle(init, f.gt) * 180.0 / M_PI;
  const double err_final = sim3_rotation_angle(res.transform, f.gt) * 180.0 / M_PI;
  EXPECT_LT(err_final, err_init);
  EXPECT_LT(err_final, 0.1);

  // Group-level constraint: one transform, relative geometry preserved.
  const PoseSet moved = sim3_apply_set(res.transform, f.ds.poses[1].cameras);
  const auto& orig = f.ds.poses[1].cameras.poses;
  const double d_orig = (orig[0].center - orig[1].center).norm();
  const double d_moved = (moved.poses[0].center - moved.poses[1].center).norm();
  EXPECT_NEAR(d_moved / d_orig, res.transform.scale, 1e-9);
  const Eigen::Quaterniond rel_orig = orig[0].rotation.conjugate() * orig[1].rotation;
  const Eigen::Quaterniond rel_moved =
      moved.poses[0].rotation.conjugate() * moved.poses[1].rotation;
  EXPECT_NEAR(rel_orig.angularDistance(rel_moved), 0.0, 1e-9);
}

TEST(RefinePhotometric, FlatLossStallsAndKeepsInit) {
  const RefineFixture f = make_refine_fixture(65);
  // Constant-color fully opaque model rendered into its own references:
  // the photometric loss is already at its floor.
  SplatCloud flat = f.ds.model_main;
  for (auto& s : flat.splats) {
    s.color = Eigen::Vector3d(0.4, 0.4, 0.4);
    s.opacity = 1.0;
  }
  std::map<std::string, RgbImage> images;
  std::map<std::string, SilhouetteMask> masks;
  PoseSet aux = f.ds.gt_aligned(1);
  for (const auto& cam : aux.poses) {
    images[cam.id] = render_rgb(flat, cam);
    masks[cam.id] = threshold_mask(render_occupancy(flat, cam), 0.5);
  }
  RefineConfig cfg;
  cfg.max_iters = 3;
  auto [result, trace] =
      refine_photometric(aux, flat, images, masks, Sim3::identity(), cfg);
  EXPECT_TRUE(trace.stalled);
  EXPECT_EQ(result.translation, Eigen::Vector3d(0, 0, 0));
  EXPECT_EQ(result.scale, 1.0);
}
