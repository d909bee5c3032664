#include "posefuse/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "posefuse/rng.hpp"

namespace posefuse {

namespace {
constexpr double kRadToDeg = 180.0 / M_PI;
}

RegistrationError registration_error(const PoseSet& est, const PoseSet& gt) {
  if (est.poses.size() != gt.poses.size())
    throw IdMismatch("registration_error: sets differ in size");

  RegistrationError err;
  for (const auto& e : est.poses) {
    const CameraPose* g = gt.find(e.id);
    if (!g) throw IdMismatch("registration_error: id " + e.id + " missing from gt");
    const Eigen::Matrix3d re = e.rotation_matrix();
    const Eigen::Matrix3d rg = g->rotation_matrix();
    double axis_angles[3];
    for (int a = 0; a < 3; ++a) {
      const double c = std::clamp(re.col(a).dot(rg.col(a)), -1.0, 1.0);
      axis_angles[a] = std::acos(c) * kRadToDeg;
    }
    err.dtheta_x_deg += axis_angles[0];
    err.dtheta_y_deg += axis_angles[1];
    err.dtheta_z_deg += axis_angles[2];
    err.dp += (e.center - g->center).norm();
  }
  const double n = static_cast<double>(est.poses.size());
  err.dtheta_x_deg /= n;
  err.dtheta_y_deg /= n;
  err.dtheta_z_deg /= n;
  err.dp /= n;
  return err;
}

double psnr(const RgbImage& a, const RgbImage& b) {
  if (a.width != b.width || a.height != b.height)
    throw DimensionMismatch("psnr: image sizes differ");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.pixels.size());
  if (mse < 1e-10) return 99.0;
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const RgbImage& a, const RgbImage& b) {
  if (a.width != b.width || a.height != b.height)
    throw DimensionMismatch("ssim: image sizes differ");
  constexpr int kWindow = 11;
  if (a.width < kWindow || a.height < kWindow)
    throw ImageTooSmall("ssim: images must be at least 11x11");

  const int w = a.width;
  const int h = a.height;
  std::vector<double> la(static_cast<std::size_t>(w) * h);
  std::vector<double> lb(la.size());
  for (std::size_t i = 0; i < la.size(); ++i) {
    la[i] = (a.pixels[3 * i] + a.pixels[3 * i + 1] + a.pixels[3 * i + 2]) / 3.0;
    lb[i] = (b.pixels[3 * i] + b.pixels[3 * i + 1] + b.pixels[3 * i + 2]) / 3.0;
  }

  double kernel[kWindow];
  {
    const double sigma = 1.5;
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
      const double d = i - (kWindow - 1) / 2.0;
      kernel[i] = std::exp(-d * d / (2.0 * sigma * sigma));
      sum += kernel[i];
    }
    for (double& k : kernel) k /= sum;
  }

  constexpr double kC1 = 0.01 * 0.01;
  constexpr double kC2 = 0.03 * 0.03;
  double total = 0.0;
  std::size_t count = 0;
  for (int y = 0; y + kWindow <= h; ++y) {
    for (int x = 0; x + kWindow <= w; ++x) {
      double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
      for (int wy = 0; wy < kWindow; ++wy) {
        for (int wx = 0; wx < kWindow; ++wx) {
          const double wgt = kernel[wy] * kernel[wx];
          const double va = la[static_cast<std::size_t>(y + wy) * w + (x + wx)];
          const double vb = lb[static_cast<std::size_t>(y + wy) * w + (x + wx)];
          mu_a += wgt * va;
          mu_b += wgt * vb;
          aa += wgt * va * va;
          bb += wgt * vb * vb;
          ab += wgt * va * vb;
        }
      }
      const double var_a = aa - mu_a * mu_a;
      const double var_b = bb - mu_b * mu_b;
      const double cov = ab - mu_a * mu_b;
      total += ((2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2)) /
               ((mu_a * mu_a + mu_b * mu_b + kC1) * (var_a + var_b + kC2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

HoldoutSplit holdout_split(const std::vector<std::string>& ids, double ratio,
                           std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0))
    throw PreconditionError("holdout_split: ratio must be in (0,1)");
  std::vector<std::string> shuffled = ids;
  std::sort(shuffled.begin(), shuffled.end());
  Rng rng(derive_seed(seed, "holdout"));
  rng.shuffle(shuffled);
  const std::size_t n_train = static_cast<std::size_t>(
      std::floor(ratio * static_cast<double>(ids.size()) + 0.5));
  HoldoutSplit split;
  split.train_ids.assign(shuffled.begin(), shuffled.begin() + n_train);
  split.test_ids.assign(shuffled.begin() + n_train, shuffled.end());
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  return split;
}

}  // namespace posefuse
