#pragma once

#include <cstdint>
#include <vector>

#include "posefuse/errors.hpp"

namespace posefuse {

// Pre-threshold silhouette: per-pixel accumulated splat opacity in [0,1].
struct SoftOccupancy {
  int width = 0;
  int height = 0;
  std::vector<double> values;   // row-major, height*width
  bool empty_render = false;    // set when no splat touched the viewport

  SoftOccupancy() = default;
  SoftOccupancy(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0.0) {}

  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

struct SilhouetteMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // row-major, 0 or 1

  SilhouetteMask() = default;
  SilhouetteMask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

  std::uint8_t& at(int x, int y) { return bits[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x]; }
  std::size_t count() const;
};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;  // row-major, 3 * width * height, rgb in [0,1]
  bool empty_render = false;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(3 * static_cast<std::size_t>(w) * h, 0.0) {}

  double* at(int x, int y) { return &pixels[3 * (static_cast<std::size_t>(y) * width + x)]; }
  const double* at(int x, int y) const { return &pixels[3 * (static_cast<std::size_t>(y) * width + x)]; }
};

// Foreground iff occupancy >= tau.
SilhouetteMask threshold_mask(const SoftOccupancy& occ, double tau = 0.5);

// Intersection over union; 1.0 when both masks are empty.
double mask_iou(const SilhouetteMask& a, const SilhouetteMask& b);

// Mean squared difference between occupancy values and the 0/1 reference.
double soft_silhouette_loss(const SoftOccupancy& occ, const SilhouetteMask& ref);

// Mean absolute per-channel difference over reference-foreground pixels;
// 0 when the mask is empty (no_foreground set if provided).
double photometric_loss(const RgbImage& img, const RgbImage& ref,
                        const SilhouetteMask& ref_mask,
                        bool* no_foreground = nullptr);

// Nearest-neighbor resample (used to bring reference masks to the
// consensus-render resolution).
SilhouetteMask resample_nearest(const SilhouetteMask& mask, int new_width,
                                int new_height);

}  // namespace posefuse
