#include "posefuse/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace posefuse {

namespace {
constexpr double kUnitTol = 1e-9;
}

CameraIntrinsics CameraIntrinsics::scaled_to(int new_width, int new_height) const {
  const double sx = static_cast<double>(new_width) / width;
  const double sy = static_cast<double>(new_height) / height;
  CameraIntrinsics out;
  out.fx = fx * sx;
  out.fy = fy * sy;
  out.cx = (cx + 0.5) * sx - 0.5;
  out.cy = (cy + 0.5) * sy - 0.5;
  out.width = new_width;
  out.height = new_height;
  return out;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0))
    throw PreconditionError("intrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0)
    throw PreconditionError("intrinsics: image size must be positive");
  if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height)
    throw PreconditionError("intrinsics: principal point outside image");
}

void CameraPose::validate() const {
  if (std::abs(rotation.norm() - 1.0) > kUnitTol)
    throw PreconditionError("pose " + id + ": quaternion not unit");
  intrinsics.validate();
}

const CameraPose* PoseSet::find(const std::string& id) const {
  for (const auto& p : poses) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

std::vector<std::string> PoseSet::ids() const {
  std::vector<std::string> out;
  out.reserve(poses.size());
  for (const auto& p : poses) out.push_back(p.id);
  return out;
}

void PoseSet::validate() const {
  if (poses.empty()) throw PreconditionError("pose set " + label + " is empty");
  std::unordered_set<std::string> seen;
  for (const auto& p : poses) {
    p.validate();
    if (!seen.insert(p.id).second)
      throw PreconditionError("pose set " + label + ": duplicate id " + p.id);
  }
}

void Sim3::validate() const {
  if (!(scale > 0.0)) throw PreconditionError("sim3: scale must be positive");
  if (std::abs(rotation.norm() - 1.0) > kUnitTol)
    throw PreconditionError("sim3: quaternion not unit");
}

Sim3 sim3_compose(const Sim3& a, const Sim3& b) {
  Sim3 out;
  out.scale = a.scale * b.scale;
  out.rotation = (a.rotation * b.rotation).normalized();
  out.translation = a.scale * (a.rotation * b.translation) + a.translation;
  return out;
}

Sim3 sim3_invert(const Sim3& a) {
  Sim3 out;
  out.scale = 1.0 / a.scale;
  out.rotation = a.rotation.conjugate();
  out.translation = -(out.rotation * a.translation) / a.scale;
  return out;
}

CameraPose sim3_apply_pose(const Sim3& t, const CameraPose& pose) {
  CameraPose out = pose;
  out.center = t.apply(pose.center);
  out.rotation = (t.rotation * pose.rotation).normalized();
  return out;
}

PoseSet sim3_apply_set(const Sim3& t, const PoseSet& set) {
  PoseSet out;
  out.label = set.label;
  out.poses.reserve(set.poses.size());
  for (const auto& p : set.poses) out.poses.push_back(sim3_apply_pose(t, p));
  return out;
}

double sim3_rotation_angle(const Sim3& a, const Sim3& b) {
  const Eigen::Quaterniond d = a.rotation.conjugate() * b.rotation;
  const double w = std::min(1.0, std::abs(d.w()));
  return 2.0 * std::acos(w);
}

Eigen::Quaterniond rotation_between(const Eigen::Vector3d& from,
                                    const Eigen::Vector3d& to) {
  const double c = from.dot(to);
  const Eigen::Vector3d cross = from.cross(to);
  const double s = cross.norm();
  if (s < kUnitTol) {
    if (c > 0.0) return Eigen::Quaterniond::Identity();
    // Anti-parallel: pick the basis vector least aligned with `from`.
    int axis = 0;
    double best = std::abs(from.x());
    if (std::abs(from.y()) < best) {
      axis = 1;
      best = std::abs(from.y());
    }
    if (std::abs(from.z()) < best) axis = 2;
    const Eigen::Vector3d e = Eigen::Vector3d::Unit(axis);
    const Eigen::Vector3d k = from.cross(e).normalized();
    return Eigen::Quaterniond(Eigen::AngleAxisd(M_PI, k));
  }
  const double angle = std::atan2(s, c);
  return Eigen::Quaterniond(Eigen::AngleAxisd(angle, cross / s));
}

Eigen::Vector3d gravity_up_for_forward(const Eigen::Vector3d& forward) {
  const Eigen::Vector3d z = Eigen::Vector3d::UnitZ();
  Eigen::Vector3d proj = z - z.dot(forward) * forward;
  if (proj.norm() < kUnitTol) {
    int axis = 0;
    double best = std::abs(forward.x());
    if (std::abs(forward.y()) < best) {
      axis = 1;
      best = std::abs(forward.y());
    }
    if (std::abs(forward.z()) < best) axis = 2;
    const Eigen::Vector3d e = Eigen::Vector3d::Unit(axis);
    proj = e - e.dot(forward) * forward;
  }
  return proj.normalized();
}

Sim3 align_pose_pair(const CameraPose& src, const CameraPose& tgt) {
  const Eigen::Vector3d f_src = src.forward();
  const Eigen::Vector3d f_tgt = tgt.forward();
  if (std::abs(f_src.norm() - 1.0) > 1e-6 || std::abs(f_tgt.norm() - 1.0) > 1e-6)
    throw DegenerateAlignment("align_pose_pair: forward vectors must be unit");

  Eigen::Quaterniond r = rotation_between(f_src, f_tgt);

  // Roll about the target forward axis: maximize agreement of the rotated
  // src up with tgt up. With both projections nonzero the maximizer is the
  // signed angle between them.
  const Eigen::Vector3d u1 = r * src.up();
  const Eigen::Vector3d u2 = tgt.up();
  const Eigen::Vector3d a = u1 - u1.dot(f_tgt) * f_tgt;
  const Eigen::Vector3d b = u2 - u2.dot(f_tgt) * f_tgt;
  if (a.norm() > kUnitTol && b.norm() > kUnitTol) {
    const double roll = std::atan2(a.cross(b).dot(f_tgt), a.dot(b));
    r = Eigen::Quaterniond(Eigen::AngleAxisd(roll, f_tgt)) * r;
  }
  r.normalize();

  Sim3 out;
  out.scale = 1.0;
  out.rotation = r;
  out.translation = tgt.center - r * src.center;
  return out;
}

double pair_scale(const CameraPose& src1, const CameraPose& src2,
                  const CameraPose& tgt1, const CameraPose& tgt2,
                  double eps_dist) {
  const double d_src = (src1.center - src2.center).norm();
  const double d_tgt = (tgt1.center - tgt2.center).norm();
  if (eps_dist < 0.0) eps_dist = 1e-6 * d_tgt;
  if (d_src <= eps_dist)
    throw DegeneratePair("pair_scale: source centers coincide (" + src1.id +
                         ", " + src2.id + ")");
  return d_tgt / d_src;
}

double scene_diameter(const PoseSet& set) {
  if (set.poses.empty()) return 0.0;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : set.poses) centroid += p.center;
  centroid /= static_cast<double>(set.poses.size());
  double max_r = 0.0;
  for (const auto& p : set.poses)
    max_r = std::max(max_r, (p.center - centroid).norm());
  return 2.0 * max_r;
}

}  // namespace posefuse
