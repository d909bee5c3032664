#include "posefuse/image.hpp"

#include <cmath>
#include <string>

namespace posefuse {

namespace {

void require_same_dims(int wa, int ha, int wb, int hb, const char* op) {
  if (wa != wb || ha != hb)
    throw DimensionMismatch(std::string(op) + ": " + std::to_string(wa) + "x" +
                            std::to_string(ha) + " vs " + std::to_string(wb) +
                            "x" + std::to_string(hb));
}

}  // namespace

std::size_t SilhouetteMask::count() const {
  std::size_t n = 0;
  for (auto b : bits) n += b ? 1 : 0;
  return n;
}

SilhouetteMask threshold_mask(const SoftOccupancy& occ, double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw PreconditionError("threshold_mask: tau must be in (0,1)");
  SilhouetteMask mask(occ.width, occ.height);
  for (std::size_t i = 0; i < occ.values.size(); ++i)
    mask.bits[i] = occ.values[i] >= tau ? 1 : 0;
  return mask;
}

double mask_iou(const SilhouetteMask& a, const SilhouetteMask& b) {
  require_same_dims(a.width, a.height, b.width, b.height, "mask_iou");
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    const bool pa = a.bits[i] != 0;
    const bool pb = b.bits[i] != 0;
    inter += (pa && pb) ? 1 : 0;
    uni += (pa || pb) ? 1 : 0;
  }
  if (uni == 0) return 1.0;  // consistent absence
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double soft_silhouette_loss(const SoftOccupancy& occ, const SilhouetteMask& ref) {
  require_same_dims(occ.width, occ.height, ref.width, ref.height,
                    "soft_silhouette_loss");
  double sum = 0.0;
  for (std::size_t i = 0; i < occ.values.size(); ++i) {
    const double d = occ.values[i] - (ref.bits[i] ? 1.0 : 0.0);
    sum += d * d;
  }
  return sum / static_cast<double>(occ.values.size());
}

double photometric_loss(const RgbImage& img, const RgbImage& ref,
                        const SilhouetteMask& ref_mask, bool* no_foreground) {
  require_same_dims(img.width, img.height, ref.width, ref.height,
                    "photometric_loss");
  require_same_dims(img.width, img.height, ref_mask.width, ref_mask.height,
                    "photometric_loss(mask)");
  double sum = 0.0;
  std::size_t n_fg = 0;
  for (std::size_t i = 0; i < ref_mask.bits.size(); ++i) {
    if (!ref_mask.bits[i]) continue;
    ++n_fg;
    for (int c = 0; c < 3; ++c)
      sum += std::abs(img.pixels[3 * i + c] - ref.pixels[3 * i + c]);
  }
  if (no_foreground) *no_foreground = (n_fg == 0);
  if (n_fg == 0) return 0.0;
  return sum / (3.0 * static_cast<double>(n_fg));
}

SilhouetteMask resample_nearest(const SilhouetteMask& mask, int new_width,
                                int new_height) {
  if (new_width == mask.width && new_height == mask.height) return mask;
  SilhouetteMask out(new_width, new_height);
  for (int y = 0; y < new_height; ++y) {
    int sy = static_cast<int>((y + 0.5) * mask.height / new_height);
    sy = std::min(sy, mask.height - 1);
    for (int x = 0; x < new_width; ++x) {
      int sx = static_cast<int>((x + 0.5) * mask.width / new_width);
      sx = std::min(sx, mask.width - 1);
      out.at(x, y) = mask.at(sx, sy);
    }
  }
  return out;
}

}  // namespace posefuse
