#pragma once

#include <string>
#include <vector>

#include "posefuse/geometry.hpp"
#include "posefuse/image.hpp"

namespace posefuse {

// Mean per-axis angular gaps (degrees) between corresponding camera
// rotations, and mean camera-center distance.
struct RegistrationError {
  double dtheta_x_deg = 0.0;
  double dtheta_y_deg = 0.0;
  double dtheta_z_deg = 0.0;
  double dp = 0.0;

  double mean_angle_deg() const {
    return (dtheta_x_deg + dtheta_y_deg + dtheta_z_deg) / 3.0;
  }
};

// Per camera and axis a, the angle between the estimated and ground-truth
// world-frame a-axis of the camera rotation; means over cameras.
// Throws IdMismatch unless the id sets are equal.
RegistrationError registration_error(const PoseSet& est, const PoseSet& gt);

// 10*log10(1/MSE) with MAX=1, capped at 99 dB for MSE below 1e-10.
double psnr(const RgbImage& a, const RgbImage& b);

// Structural similarity on the channel-mean luminance: 11x11 Gaussian window
// (sigma 1.5), K1=0.01, K2=0.03, dynamic range 1, averaged over fully valid
// window positions.
double ssim(const RgbImage& a, const RgbImage& b);

struct HoldoutSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

// Seeded deterministic split; ratio is the train fraction.
HoldoutSplit holdout_split(const std::vector<std::string>& ids, double ratio,
                           std::uint64_t seed);

}  // namespace posefuse
