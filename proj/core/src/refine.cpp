#include "posefuse/refine.hpp"

#include <cmath>

#include "posefuse/parallel.hpp"
#include "posefuse/rng.hpp"

namespace posefuse {

namespace {

// Applies a 7-vector chart increment at `base`: left axis-angle on the
// rotation, additive translation, multiplicative scale.
Sim3 chart_step(const Sim3& base, const Eigen::Matrix<double, 7, 1>& delta) {
  Sim3 out;
  const Eigen::Vector3d omega = delta.head<3>();
  const double angle = omega.norm();
  Eigen::Quaterniond dq = Eigen::Quaterniond::Identity();
  if (angle > 0.0)
    dq = Eigen::Quaterniond(Eigen::AngleAxisd(angle, omega / angle));
  out.rotation = (dq * base.rotation).normalized();
  out.translation = base.translation + delta.segment<3>(3);
  out.scale = base.scale * std::exp(delta[6]);
  return out;
}

}  // namespace

Eigen::Matrix<double, 7, 1> sim3_fd_gradient(
    const std::function<double(const Sim3&)>& loss, const Sim3& at,
    const Eigen::Matrix<double, 7, 1>& steps) {
  Eigen::Matrix<double, 7, 1> grad;
  for (int i = 0; i < 7; ++i) {
    Eigen::Matrix<double, 7, 1> d = Eigen::Matrix<double, 7, 1>::Zero();
    d[i] = steps[i];
    const double hi = loss(chart_step(at, d));
    d[i] = -steps[i];
    const double lo = loss(chart_step(at, d));
    if (!std::isfinite(hi) || !std::isfinite(lo))
      throw NonFiniteLoss("sim3_fd_gradient: non-finite probe at parameter " +
                          std::to_string(i));
    grad[i] = (hi - lo) / (2.0 * steps[i]);
  }
  return grad;
}

std::pair<Sim3, RefineTrace> minimize_sim3(
    const std::function<double(const Sim3&)>& loss, const Sim3& init,
    const RefineConfig& cfg, double diameter) {
  if (cfg.max_iters < 1)
    throw PreconditionError("minimize_sim3: max_iters must be >= 1");
  if (diameter <= 0.0) diameter = 1.0;

  Eigen::Matrix<double, 7, 1> fd_steps;
  fd_steps << cfg.fd_rot_rad, cfg.fd_rot_rad, cfg.fd_rot_rad,
      cfg.fd_trans_frac * diameter, cfg.fd_trans_frac * diameter,
      cfg.fd_trans_frac * diameter, cfg.fd_log_scale;

  // Diagonal metric: a gradient of natural size 1/scale moves each block by
  // its configured step.
  Eigen::Matrix<double, 7, 1> metric;
  const double st = cfg.step_trans_frac * diameter;
  metric << cfg.step_rot_rad * cfg.step_rot_rad, cfg.step_rot_rad * cfg.step_rot_rad,
      cfg.step_rot_rad * cfg.step_rot_rad, st * st, st * st, st * st,
      cfg.step_log_scale * cfg.step_log_scale;

  Sim3 current = init;
  double current_loss = loss(current);
  if (!std::isfinite(current_loss))
    throw NonFiniteLoss("minimize_sim3: non-finite initial loss");

  RefineTrace trace;
  trace.losses.push_back(current_loss);
  trace.steps.push_back(0.0);

  Sim3 best = current;
  double best_loss = current_loss;

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    const Eigen::Matrix<double, 7, 1> grad = sim3_fd_gradient(loss, current, fd_steps);
    const Eigen::Matrix<double, 7, 1> direction = -metric.cwiseProduct(grad);

    double alpha = 1.0;
    bool accepted = false;
    for (int h = 0; h <= cfg.max_halvings; ++h) {
      const Sim3 trial = chart_step(current, alpha * direction);
      const double trial_loss = loss(trial);
      if (std::isfinite(trial_loss) && trial_loss < current_loss) {
        current = trial;
        current_loss = trial_loss;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    ++trace.iterations;
    if (!accepted) {
      trace.stalled = true;
      break;
    }
    trace.losses.push_back(current_loss);
    trace.steps.push_back(alpha);
    if (current_loss < best_loss) {
      best = current;
      best_loss = current_loss;
    }

    // Converged when the loss has been flat over the whole window.
    const int w = cfg.convergence_window;
    if (static_cast<int>(trace.losses.size()) > w) {
      const double then = trace.losses[trace.losses.size() - 1 - w];
      const double now = trace.losses.back();
      if (std::abs(then - now) <= cfg.convergence_rel_tol * std::max(then, 1e-300))
        break;
    }
  }
  return {best, trace};
}

namespace {

// Mean per-view loss with optional seeded mini-batching; per-view terms
// evaluated in parallel and summed in fixed view order.
template <typename ViewLoss>
std::function<double(const Sim3&)> make_group_loss(const PoseSet& p_aux,
                                                   const RefineConfig& cfg,
                                                   ViewLoss view_loss) {
  std::vector<std::size_t> view_indices(p_aux.poses.size());
  for (std::size_t i = 0; i < view_indices.size(); ++i) view_indices[i] = i;
  if (cfg.batch_size > 0 && cfg.batch_size < view_indices.size()) {
    Rng rng(derive_seed(cfg.batch_seed, "refine_batch"));
    auto picked = rng.sample_indices(view_indices.size(), cfg.batch_size);
    std::sort(picked.begin(), picked.end());
    view_indices = std::move(picked);
  }
  const unsigned threads = cfg.threads;
  return [&p_aux, view_indices, threads, view_loss](const Sim3& t) {
    std::vector<double> terms(view_indices.size(), 0.0);
    parallel_for(view_indices.size(), threads, [&](std::size_t i) {
      const CameraPose moved = sim3_apply_pose(t, p_aux.poses[view_indices[i]]);
      terms[i] = view_loss(view_indices[i], moved);
    });
    double sum = 0.0;
    for (double v : terms) sum += v;
    return sum / static_cast<double>(terms.size());
  };
}

}  // namespace

std::pair<Sim3, RefineTrace> refine_silhouette(
    const PoseSet& p_aux, const SplatCloud& model,
    const std::map<std::string, SilhouetteMask>& masks, const Sim3& init,
    const RefineConfig& cfg) {
  init.validate();
  for (const auto& p : p_aux.poses)
    if (!masks.count(p.id))
      throw PreconditionError("refine_silhouette: no mask for view " + p.id);

  const auto loss = make_group_loss(
      p_aux, cfg, [&](std::size_t vi, const CameraPose& cam) {
        const SoftOccupancy occ = render_occupancy(model, cam);
        return soft_silhouette_loss(occ, masks.at(p_aux.poses[vi].id));
      });
  return minimize_sim3(loss, init, cfg, scene_diameter(p_aux));
}

std::pair<Sim3, RefineTrace> refine_photometric(
    const PoseSet& p_aux, const SplatCloud& model,
    const std::map<std::string, RgbImage>& images,
    const std::map<std::string, SilhouetteMask>& masks, const Sim3& init,
    const RefineConfig& cfg) {
  init.validate();
  for (const auto& p : p_aux.poses) {
    if (!images.count(p.id))
      throw PreconditionError("refine_photometric: no image for view " + p.id);
    if (!masks.count(p.id))
      throw PreconditionError("refine_photometric: no mask for view " + p.id);
  }

  const auto loss = make_group_loss(
      p_aux, cfg, [&](std::size_t vi, const CameraPose& cam) {
        const std::string& id = p_aux.poses[vi].id;
        const RgbImage img = render_rgb(model, cam);
        return photometric_loss(img, images.at(id), masks.at(id));
      });
  return minimize_sim3(loss, init, cfg, scene_diameter(p_aux));
}

LocalRefineResult local_refine(const PoseSet& p_aux, const SplatCloud& model,
                               const std::map<std::string, RgbImage>& images,
                               const std::map<std::string, SilhouetteMask>& masks,
                               const Sim3& init, const RefineConfig& cfg_silhouette,
                               const RefineConfig& cfg_photometric) {
  LocalRefineResult out;
  try {
    auto [t_sil, trace_sil] = refine_silhouette(p_aux, model, masks, init,
                                                cfg_silhouette);
    out.transform = t_sil;
    out.silhouette = std::move(trace_sil);
  } catch (const Error& e) {
    throw StageError("refine_silhouette", e.what());
  }
  try {
    auto [t_photo, trace_photo] = refine_photometric(
        p_aux, model, images, masks, out.transform, cfg_photometric);
    out.transform = t_photo;
    out.photometric = std::move(trace_photo);
  } catch (const Error& e) {
    throw StageError("refine_photometric", e.what());
  }
  return out;
}

}  // namespace posefuse
