#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <string>
#include <vector>

#include "posefuse/errors.hpp"

namespace posefuse {

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  // Intrinsics for the same field of view at a different raster size,
  // using the pixel-center convention (integer coordinates are centers).
  CameraIntrinsics scaled_to(int new_width, int new_height) const;

  void validate() const;
};

// Camera-to-world pose. The camera looks along +Z of its own frame and
// image up is -Y, so world forward is the third column of R and world up
// the negated second column.
struct CameraPose {
  std::string id;
  Eigen::Quaterniond rotation{1.0, 0.0, 0.0, 0.0};
  Eigen::Vector3d center{0.0, 0.0, 0.0};
  CameraIntrinsics intrinsics;

  Eigen::Vector3d forward() const { return rotation * Eigen::Vector3d::UnitZ(); }
  Eigen::Vector3d up() const { return rotation * Eigen::Vector3d(0.0, -1.0, 0.0); }
  Eigen::Matrix3d rotation_matrix() const { return rotation.toRotationMatrix(); }

  void validate() const;
};

struct PoseSet {
  std::string label;
  std::vector<CameraPose> poses;

  const CameraPose* find(const std::string& id) const;
  std::vector<std::string> ids() const;
  bool contains(const std::string& id) const { return find(id) != nullptr; }

  void validate() const;  // unique ids, non-empty, each pose valid
};

// Similarity transform: p -> s * R * p + t, with s > 0 and R a unit quaternion.
struct Sim3 {
  double scale = 1.0;
  Eigen::Quaterniond rotation{1.0, 0.0, 0.0, 0.0};
  Eigen::Vector3d translation{0.0, 0.0, 0.0};

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return scale * (rotation * p) + translation;
  }

  static Sim3 identity() { return Sim3{}; }

  void validate() const;
};

// (a o b)(p) = a(b(p)).
Sim3 sim3_compose(const Sim3& a, const Sim3& b);

Sim3 sim3_invert(const Sim3& a);

// Moves a camera with the transform: center by the full similarity,
// orientation by the rotation only.
CameraPose sim3_apply_pose(const Sim3& t, const CameraPose& pose);

PoseSet sim3_apply_set(const Sim3& t, const PoseSet& set);

// Angle between the rotations of two Sim3s, in radians.
double sim3_rotation_angle(const Sim3& a, const Sim3& b);

// Minimal rotation taking unit vector `from` onto unit vector `to`.
// Anti-parallel inputs use a deterministic axis: from x e, where e is the
// standard basis vector least aligned with `from`.
Eigen::Quaterniond rotation_between(const Eigen::Vector3d& from,
                                    const Eigen::Vector3d& to);

// World up for a camera looking along `forward`: +Z projected onto the view
// plane. Falls back to the anti-parallel basis tie-break when forward is
// vertical.
Eigen::Vector3d gravity_up_for_forward(const Eigen::Vector3d& forward);

// Rigid alignment (s = 1) taking src's center and forward direction onto
// tgt's. The residual roll about the target forward axis is fixed by
// maximizing agreement of the transformed src up vector with tgt's up.
// Throws DegenerateAlignment if either forward vector is not unit length.
Sim3 align_pose_pair(const CameraPose& src, const CameraPose& tgt);

// ||tgt1 - tgt2|| / ||src1 - src2||. eps_dist < 0 selects the default
// threshold of 1e-6 times the target pair distance. Throws DegeneratePair
// when the source centers coincide within eps_dist.
double pair_scale(const CameraPose& src1, const CameraPose& src2,
                  const CameraPose& tgt1, const CameraPose& tgt2,
                  double eps_dist = -1.0);

// Bounding-sphere diameter of the camera centers (sphere centered at the
// centroid).
double scene_diameter(const PoseSet& set);

}  // namespace posefuse
