#pragma once

#include <Eigen/Dense>
#include <functional>
#include <map>

#include "posefuse/geometry.hpp"
#include "posefuse/image.hpp"
#include "posefuse/render.hpp"
#include "posefuse/splat.hpp"

namespace posefuse {

struct RefineConfig {
  int max_iters = 500;

  // Natural parameter scales; trial steps are the scaled negative gradient.
  double step_rot_rad = 0.02;
  double step_trans_frac = 0.01;  // of the scene diameter
  double step_log_scale = 0.01;

  // Central finite-difference probe sizes.
  double fd_rot_rad = 1e-3;
  double fd_trans_frac = 1e-3;  // of the scene diameter
  double fd_log_scale = 1e-3;

  double convergence_rel_tol = 1e-6;  // relative loss change ...
  int convergence_window = 10;        // ... over this many iterations

  int max_halvings = 20;

  std::size_t batch_size = 0;  // 0 = all views each iteration
  std::uint64_t batch_seed = 0;

  unsigned threads = 0;
};

struct RefineTrace {
  std::vector<double> losses;  // accepted loss per iteration, losses[0] = initial
  std::vector<double> steps;   // accepted step scale per iteration
  int iterations = 0;
  bool stalled = false;  // no accepted step in the final iteration
};

// Central finite differences of an arbitrary Sim3 loss over the 7-parameter
// local chart: axis-angle increments composed on the left of the rotation,
// translation increments, and a log-scale increment.
// steps = (rot, rot, rot, trans, trans, trans, log_scale).
Eigen::Matrix<double, 7, 1> sim3_fd_gradient(
    const std::function<double(const Sim3&)>& loss, const Sim3& at,
    const Eigen::Matrix<double, 7, 1>& steps);

// Generic descent used by both refinement stages: scaled negative-gradient
// steps with backtracking halving; returns the best transform encountered.
std::pair<Sim3, RefineTrace> minimize_sim3(
    const std::function<double(const Sim3&)>& loss, const Sim3& init,
    const RefineConfig& cfg, double diameter);

// Silhouette stage: mean soft_silhouette_loss over the auxiliary views,
// rendering the model from transform-applied poses. Model stays fixed.
std::pair<Sim3, RefineTrace> refine_silhouette(
    const PoseSet& p_aux, const SplatCloud& model,
    const std::map<std::string, SilhouetteMask>& masks, const Sim3& init,
    const RefineConfig& cfg = {});

// Photometric stage: mean masked photometric_loss over the auxiliary views.
std::pair<Sim3, RefineTrace> refine_photometric(
    const PoseSet& p_aux, const SplatCloud& model,
    const std::map<std::string, RgbImage>& images,
    const std::map<std::string, SilhouetteMask>& masks, const Sim3& init,
    const RefineConfig& cfg = {});

struct LocalRefineResult {
  Sim3 transform;
  RefineTrace silhouette;
  RefineTrace photometric;
};

// Silhouette stage followed by photometric fine-tuning of the same transform.
LocalRefineResult local_refine(const PoseSet& p_aux, const SplatCloud& model,
                               const std::map<std::string, RgbImage>& images,
                               const std::map<std::string, SilhouetteMask>& masks,
                               const Sim3& init,
                               const RefineConfig& cfg_silhouette = {},
                               const RefineConfig& cfg_photometric = {});

}  // namespace posefuse
