#pragma once

#include <Eigen/Dense>
#include <vector>

#include "posefuse/geometry.hpp"
#include "posefuse/image.hpp"
#include "posefuse/splat.hpp"

namespace posefuse {

struct RenderOptions {
  double z_near = 1e-3;
  double cutoff_sigmas = 3.0;  // footprint radius in screen-space sigmas
  double alpha_cap = 0.9999;   // keeps compositing gradients finite
};

// Soft silhouette: per pixel 1 - prod_splats (1 - opacity * G), with G the
// screen-space Gaussian, accumulated in splat-index order. Splats behind the
// camera are skipped; empty_render is set when nothing touches the viewport.
SoftOccupancy render_occupancy(const SplatCloud& cloud, const CameraPose& cam,
                               const RenderOptions& opts = {});

// Alpha-composited color over a black background, splats in depth order
// (ties by splat index).
RgbImage render_rgb(const SplatCloud& cloud, const CameraPose& cam,
                    const RenderOptions& opts = {});

// Per-splat gradients of a masked photometric L1 loss, in the optimization
// parameterization used by fine-tuning: position, log sigma, color,
// logit opacity.
struct SplatGradients {
  std::vector<Eigen::Vector3d> position;
  std::vector<double> log_sigma;
  std::vector<Eigen::Vector3d> color;
  std::vector<double> logit_opacity;

  explicit SplatGradients(std::size_t n)
      : position(n, Eigen::Vector3d::Zero()),
        log_sigma(n, 0.0),
        color(n, Eigen::Vector3d::Zero()),
        logit_opacity(n, 0.0) {}

  void add_scaled(const SplatGradients& other, double w);
};

// Renders the view, evaluates photometric_loss(img, ref, ref_mask) and
// accumulates its analytic gradient into `grads`. Returns the loss.
double photometric_loss_backward(const SplatCloud& cloud, const CameraPose& cam,
                                 const RgbImage& ref,
                                 const SilhouetteMask& ref_mask,
                                 const RenderOptions& opts,
                                 SplatGradients& grads,
                                 RgbImage* rendered = nullptr);

// Maximum composited weight (alpha * transmittance) each splat reaches over
// all pixels of the view; ~0 for splats the camera cannot see.
std::vector<double> splat_visibility(const SplatCloud& cloud,
                                     const CameraPose& cam,
                                     const RenderOptions& opts = {});

}  // namespace posefuse
