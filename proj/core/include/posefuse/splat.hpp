#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "posefuse/errors.hpp"
#include "posefuse/geometry.hpp"

namespace posefuse {

// Isotropic Gaussian primitive.
struct Splat {
  Eigen::Vector3d position{0.0, 0.0, 0.0};
  double sigma = 0.01;  // world-space standard deviation
  Eigen::Vector3d color{0.5, 0.5, 0.5};
  double opacity = 1.0;

  void validate() const {
    if (!(sigma > 0.0)) throw PreconditionError("splat: sigma must be positive");
    if (!(opacity > 0.0 && opacity <= 1.0))
      throw PreconditionError("splat: opacity must be in (0,1]");
    for (int c = 0; c < 3; ++c)
      if (color[c] < 0.0 || color[c] > 1.0)
        throw PreconditionError("splat: color out of [0,1]");
  }
};

struct SplatCloud {
  std::vector<Splat> splats;
  std::string frame;

  void validate() const {
    if (splats.empty()) throw PreconditionError("splat cloud is empty");
    for (const auto& s : splats) s.validate();
  }
};

// Moves the cloud with a similarity transform; sigma scales with the
// transform so renders stay consistent with transformed cameras.
SplatCloud sim3_apply_cloud(const Sim3& t, const SplatCloud& cloud);

}  // namespace posefuse
