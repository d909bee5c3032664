#include "posefuse/geometry.hpp"

#include <gtest/gtest.h>

#include "posefuse/rng.hpp"

using namespace posefuse;

namespace {

CameraIntrinsics test_intrinsics() {
  CameraIntrinsics k;
  k.fx = k.fy = 100.0;
  k.cx = k.cy = 31.5;
  k.width = k.height = 64;
  return k;
}

CameraPose make_pose(const std::string& id, const Eigen::Quaterniond& q,
                     const Eigen::Vector3d& c) {
  CameraPose p;
  p.id = id;
  p.rotation = q.normalized();
  p.center = c;
  p.intrinsics = test_intrinsics();
  return p;
}

Sim3 random_sim3(Rng& rng, bool rigid = false) {
  Sim3 t;
  t.scale = rigid ? 1.0 : std::exp(rng.uniform(-0.6, 0.6));
  const Eigen::Vector3d axis =
      Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized();
  t.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(rng.uniform(0.0, M_PI), axis));
  t.translation = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
  return t;
}

}  // namespace

TEST(Sim3, ComposeIdentity) {
  Rng rng(11);
  const Sim3 t = random_sim3(rng);
  const Sim3 left = sim3_compose(Sim3::identity(), t);
  const Sim3 right = sim3_compose(t, Sim3::identity());
  const Eigen::Vector3d p(0.3, -1.2, 2.0);
  EXPECT_LT((left.apply(p) - t.apply(p)).norm(), 1e-12);
  EXPECT_LT((right.apply(p) - t.apply(p)).norm(), 1e-12);
}

TEST(Sim3, ComposeWithInverseIsIdentity) {
  Rng rng(12);
  for (int i = 0; i < 100; ++i) {
    const Sim3 t = random_sim3(rng);
    const Sim3 id = sim3_compose(t, sim3_invert(t));
    const Eigen::Vector3d p(rng.normal(), rng.normal(), rng.normal());
    EXPECT_LT((id.apply(p) - p).norm(), 1e-9);
  }
}

// a=(s=2, R=90deg about z, t=(1,0,0)), b=(s=1, R=id, t=(0,1,0));
// (a o b)(0,0,0) = a(0,1,0) = (-2,0,0)+(1,0,0) = (-1,0,0).
TEST(Sim3, ComposeHandComputed) {
  Sim3 a;
  a.scale = 2.0;
  a.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitZ()));
  a.translation = Eigen::Vector3d(1, 0, 0);
  Sim3 b;
  b.translation = Eigen::Vector3d(0, 1, 0);

  const Sim3 ab = sim3_compose(a, b);
  const Eigen::Vector3d via_compose = ab.apply(Eigen::Vector3d::Zero());
  const Eigen::Vector3d via_direct = a.apply(b.apply(Eigen::Vector3d::Zero()));
  EXPECT_LT((via_compose - Eigen::Vector3d(-1, 0, 0)).norm(), 1e-12);
  EXPECT_LT((via_compose - via_direct).norm(), 1e-12);
}

TEST(Sim3, InvertPureScale) {
  Sim3 t;
  t.scale = 2.0;
  const Sim3 inv = sim3_invert(t);
  EXPECT_NEAR(inv.scale, 0.5, 1e-15);
  EXPECT_LT(inv.translation.norm(), 1e-15);
}

TEST(Sim3, InvertRoundTripProperty) {
  Rng rng(13);
  for (int i = 0; i < 1000; ++i) {
    const Sim3 t = random_sim3(rng);
    const Sim3 inv = sim3_invert(t);
    Eigen::Vector3d p(rng.uniform(-1e3, 1e3), rng.uniform(-1e3, 1e3),
                      rng.uniform(-1e3, 1e3));
    p = p.cwiseMin(1e3).cwiseMax(-1e3);
    EXPECT_LT((inv.apply(t.apply(p)) - p).norm() / std::max(1.0, p.norm()), 1e-9);
  }
}

TEST(Sim3, GroupLaws) {
  Rng rng(14);
  const Eigen::Vector3d p(0.4, 0.2, -0.7);
  for (int i = 0; i < 200; ++i) {
    const Sim3 a = random_sim3(rng);
    const Sim3 b = random_sim3(rng);
    const Sim3 c = random_sim3(rng);
    const Sim3 ab_c = sim3_compose(sim3_compose(a, b), c);
    const Sim3 a_bc = sim3_compose(a, sim3_compose(b, c));
    EXPECT_LT((ab_c.apply(p) - a_bc.apply(p)).norm(), 1e-9);

    const Sim3 left_inv = sim3_compose(sim3_invert(a), a);
    EXPECT_LT((left_inv.apply(p) - p).norm(), 1e-9);
  }
}

TEST(ApplyPose, IdentityLeavesPoseUnchanged) {
  const CameraPose p = make_pose("a", Eigen::Quaterniond(1, 0, 0, 0), {1, 2, 3});
  const CameraPose q = sim3_apply_pose(Sim3::identity(), p);
  EXPECT_LT((q.center - p.center).norm(), 1e-15);
  EXPECT_NEAR(q.rotation.angularDistance(p.rotation), 0.0, 1e-15);
}

TEST(ApplyPose, PureScaleMovesOnlyCenters) {
  Sim3 t;
  t.scale = 2.0;
  const CameraPose p = make_pose("a", Eigen::Quaterniond(1, 0, 0, 0), {1, 1, 1});
  const CameraPose q = sim3_apply_pose(t, p);
  EXPECT_LT((q.center - Eigen::Vector3d(2, 2, 2)).norm(), 1e-15);
  EXPECT_NEAR(q.rotation.angularDistance(p.rotation), 0.0, 1e-15);
}

TEST(ApplyPose, RotationAboutForwardAxisKeepsForward) {
  Sim3 t;
  t.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(M_PI / 2, Eigen::Vector3d::UnitZ()));
  const CameraPose p = make_pose("a", Eigen::Quaterniond(1, 0, 0, 0), {1, 0, 0});
  const CameraPose q = sim3_apply_pose(t, p);
  // forward was +z; rotating about z keeps it.
  EXPECT_LT((q.forward() - Eigen::Vector3d(0, 0, 1)).norm(), 1e-12);
  EXPECT_LT((q.center - Eigen::Vector3d(0, 1, 0)).norm(), 1e-12);
}

TEST(ApplyPose, PreservesOrthonormality) {
  Rng rng(15);
  for (int i = 0; i < 100; ++i) {
    const Sim3 t = random_sim3(rng);
    Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    q.normalize();
    const CameraPose p = make_pose("a", q, {rng.normal(), rng.normal(), rng.normal()});
    const CameraPose moved = sim3_apply_pose(t, p);
    EXPECT_NEAR(moved.rotation.norm(), 1.0, 1e-9);
    EXPECT_NEAR(moved.forward().norm(), 1.0, 1e-9);
    EXPECT_NEAR(moved.forward().dot(moved.up()), 0.0, 1e-9);
  }
}

TEST(AlignPosePair, IdenticalPosesGiveIdentity) {
  const CameraPose p = make_pose("a", Eigen::Quaterniond(1, 0, 0, 0), {1, 2, 3});
  const Sim3 t = align_pose_pair(p, p);
  EXPECT_NEAR(t.scale, 1.0, 1e-15);
  EXPECT_LT(t.translation.norm(), 1e-12);
  EXPECT_NEAR(t.rotation.angularDistance(Eigen::Quaterniond::Identity()), 0.0, 1e-12);
}

// src forward (0,0,1), tgt forward (1,0,0), centers at the origin, both ups
// (0,1,0): the result must map forward onto forward and keep the center.
TEST(AlignPosePair, QuarterTurn) {
  // rotation with forward +z, up +y: R = [x-> (1,0,0)? derived from quaternion]
  // Build via matrix columns: c3 = f, c2 = -u, c1 = f x u.
  auto pose_from_fu = [](const std::string& id, const Eigen::Vector3d& f,
                         const Eigen::Vector3d& u, const Eigen::Vector3d& c) {
    Eigen::Matrix3d r;
    r.col(0) = f.cross(u);
    r.col(1) = -u;
    r.col(2) = f;
    CameraPose p;
    p.id = id;
    p.rotation = Eigen::Quaterniond(r).normalized();
    p.center = c;
    p.intrinsics = test_intrinsics();
    return p;
  };
  const CameraPose src = pose_from_fu("s", {0, 0, 1}, {0, 1, 0}, {0, 0, 0});
  const CameraPose tgt = pose_from_fu("t", {1, 0, 0}, {0, 1, 0}, {0, 0, 0});

  const Sim3 t = align_pose_pair(src, tgt);
  EXPECT_NEAR(t.scale, 1.0, 1e-15);
  const CameraPose moved = sim3_apply_pose(t, src);
  EXPECT_LT((moved.forward() - Eigen::Vector3d(1, 0, 0)).norm(), 1e-9);
  EXPECT_LT((moved.center - tgt.center).norm(), 1e-9);
  EXPECT_LT((moved.up() - tgt.up()).norm(), 1e-9);
  // Minimal rotation for z -> x is a quarter turn about y.
  const Eigen::AngleAxisd aa(t.rotation);
  EXPECT_NEAR(std::abs(aa.axis().y()), 1.0, 1e-9);
  EXPECT_NEAR(aa.angle(), M_PI / 2, 1e-9);
}

// Round-trip: src = T_gt applied to tgt; align must recover T_gt^-1.
TEST(AlignPosePair, RecoversRigidTransform) {
  Rng rng(16);
  for (int i = 0; i < 100; ++i) {
    Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    q.normalize();
    const CameraPose tgt = make_pose("t", q, {rng.normal(), rng.normal(), rng.normal()});
    const Sim3 t_gt = random_sim3(rng, /*rigid=*/true);
    const CameraPose src = sim3_apply_pose(t_gt, tgt);

    const Sim3 rec = align_pose_pair(src, tgt);
    const Sim3 expected = sim3_invert(t_gt);
    EXPECT_LT(sim3_rotation_angle(rec, expected), 1e-6);
    EXPECT_LT((rec.apply(src.center) - tgt.center).norm(), 1e-9);
  }
}

TEST(AlignPosePair, AntiParallelForwardIsDeterministic) {
  auto pose_from_fu = [](const Eigen::Vector3d& f, const Eigen::Vector3d& u) {
    Eigen::Matrix3d r;
    r.col(0) = f.cross(u);
    r.col(1) = -u;
    r.col(2) = f;
    CameraPose p;
    p.id = "x";
    p.rotation = Eigen::Quaterniond(r).normalized();
    p.intrinsics = test_intrinsics();
    return p;
  };
  const CameraPose src = pose_from_fu({0, 0, 1}, {0, 1, 0});
  const CameraPose tgt = pose_from_fu({0, 0, -1}, {0, 1, 0});
  const Sim3 a = align_pose_pair(src, tgt);
  const Sim3 b = align_pose_pair(src, tgt);
  EXPECT_NEAR(sim3_rotation_angle(a, b), 0.0, 1e-15);
  EXPECT_LT((sim3_apply_pose(a, src).forward() - tgt.forward()).norm(), 1e-9);
  EXPECT_LT((sim3_apply_pose(a, src).up() - tgt.up()).norm(), 1e-9);
}

TEST(PairScale, HandComputed) {
  const CameraPose s1 = make_pose("s1", Eigen::Quaterniond(1, 0, 0, 0), {0, 0, 0});
  const CameraPose s2 = make_pose("s2", Eigen::Quaterniond(1, 0, 0, 0), {1, 0, 0});
  const CameraPose t1 = make_pose("t1", Eigen::Quaterniond(1, 0, 0, 0), {0, 0, 0});
  const CameraPose t2 = make_pose("t2", Eigen::Quaterniond(1, 0, 0, 0), {2, 0, 0});
  EXPECT_NEAR(pair_scale(s1, s2, t1, t2), 2.0, 1e-15);
  EXPECT_NEAR(pair_scale(t1, t2, t1, t2), 1.0, 1e-15);
}

TEST(PairScale, GaugeScaledCopy) {
  Rng rng(17);
  Sim3 gauge;
  gauge.scale = 0.37;
  gauge.rotation = Eigen::Quaterniond(Eigen::AngleAxisd(0.8, Eigen::Vector3d(1, 2, 3).normalized()));
  gauge.translation = Eigen::Vector3d(0.1, -0.4, 0.9);
  const CameraPose t1 = make_pose("t1", Eigen::Quaterniond(1, 0, 0, 0),
                                  {rng.normal(), rng.normal(), rng.normal()});
  const CameraPose t2 = make_pose("t2", Eigen::Quaterniond(1, 0, 0, 0),
                                  {rng.normal(), rng.normal(), rng.normal()});
  const CameraPose s1 = sim3_apply_pose(gauge, t1);
  const CameraPose s2 = sim3_apply_pose(gauge, t2);
  EXPECT_NEAR(pair_scale(s1, s2, t1, t2), 1.0 / 0.37, 1e-12);
}

TEST(PairScale, DegenerateSourceThrows) {
  const CameraPose s1 = make_pose("s1", Eigen::Quaterniond(1, 0, 0, 0), {0, 0, 0});
  const CameraPose s2 = make_pose("s2", Eigen::Quaterniond(1, 0, 0, 0), {0, 0, 0});
  const CameraPose t1 = make_pose("t1", Eigen::Quaterniond(1, 0, 0, 0), {0, 0, 0});
  const CameraPose t2 = make_pose("t2", Eigen::Quaterniond(1, 0, 0, 0), {1, 0, 0});
  EXPECT_THROW(pair_scale(s1, s2, t1, t2), DegeneratePair);
}

// Invariant: pair_scale is invariant under a rigid transform of the sources
// and multiplies by 1/k when sources scale by k.
TEST(PairScale, RigidInvarianceAndScaleCovariance) {
  Rng rng(18);
  for (int i = 0; i < 50; ++i) {
    const CameraPose s1 = make_pose("s1", Eigen::Quaterniond(1, 0, 0, 0),
                                    {rng.normal(), rng.normal(), rng.normal()});
    const CameraPose s2 = make_pose("s2", Eigen::Quaterniond(1, 0, 0, 0),
                                    {rng.normal(), rng.normal(), rng.normal()});
    const CameraPose t1 = make_pose("t1", Eigen::Quaterniond(1, 0, 0, 0),
                                    {rng.normal(), rng.normal(), rng.normal()});
    const CameraPose t2 = make_pose("t2", Eigen::Quaterniond(1, 0, 0, 0),
                                    {rng.normal(), rng.normal(), rng.normal()});
    const double base = pair_scale(s1, s2, t1, t2);

    const Sim3 rigid = random_sim3(rng, /*rigid=*/true);
    EXPECT_NEAR(pair_scale(sim3_apply_pose(rigid, s1), sim3_apply_pose(rigid, s2),
                           t1, t2),
                base, 1e-9 * std::abs(base));

    Sim3 scale_only;
    const double k = std::exp(rng.uniform(-1.0, 1.0));
    scale_only.scale = k;
    EXPECT_NEAR(pair_scale(sim3_apply_pose(scale_only, s1),
                           sim3_apply_pose(scale_only, s2), t1, t2),
                base / k, 1e-9 * std::abs(base / k));
  }
}

TEST(PoseSet, ValidationCatchesDuplicates) {
  PoseSet set;
  set.label = "dup";
  set.poses.push_back(make_pose("a", Eigen::Quaterniond(1, 0, 0, 0), {0, 0, 0}));
  set.poses.push_back(make_pose("a", Eigen::Quaterniond(1, 0, 0, 0), {1, 0, 0}));
  EXPECT_THROW(set.validate(), PreconditionError);
}

TEST(Intrinsics, ScaledToKeepsFieldOfView) {
  CameraIntrinsics k = test_intrinsics();
  const CameraIntrinsics s = k.scaled_to(32, 32);
  // A ray through the image corner must land on the same relative spot.
  EXPECT_NEAR(s.fx, 50.0, 1e-12);
  EXPECT_NEAR((s.cx + 0.5) / 32.0, (k.cx + 0.5) / 64.0, 1e-12);
}

TEST(Geometry, SceneDiameterOfKnownSet) {
  PoseSet set;
  set.label = "d";
  set.poses.push_back(make_pose("a", Eigen::Quaterniond(1, 0, 0, 0), {-1, 0, 0}));
  set.poses.push_back(make_pose("b", Eigen::Quaterniond(1, 0, 0, 0), {1, 0, 0}));
  EXPECT_NEAR(scene_diameter(set), 2.0, 1e-12);
}
