#include "posefuse/complete.hpp"

#include <algorithm>
#include <cmath>

#include "posefuse/rng.hpp"

namespace posefuse {

std::vector<std::vector<std::string>> SampleSchedule::epochs() const {
  std::vector<std::vector<std::string>> out;
  for (std::size_t i = 0; i < iteration_ids.size(); i += epoch_length) {
    const std::size_t end = std::min(iteration_ids.size(), i + epoch_length);
    out.emplace_back(iteration_ids.begin() + i, iteration_ids.begin() + end);
  }
  return out;
}

SampleSchedule balanced_schedule(const std::vector<std::string>& fused_ids,
                                 const std::vector<std::string>& aux_ids,
                                 std::size_t iterations, std::uint64_t seed) {
  if (fused_ids.empty() || aux_ids.empty())
    throw PreconditionError("balanced_schedule: id lists must be non-empty");

  SampleSchedule schedule;
  schedule.seed = seed;
  schedule.epoch_length = 2 * aux_ids.size();
  schedule.with_replacement = fused_ids.size() < aux_ids.size();
  schedule.iteration_ids.reserve(iterations);

  Rng rng(derive_seed(seed, "balanced_schedule"));
  std::vector<std::string> epoch;
  while (schedule.iteration_ids.size() < iterations) {
    epoch.assign(aux_ids.begin(), aux_ids.end());
    if (schedule.with_replacement) {
      for (std::size_t i = 0; i < aux_ids.size(); ++i)
        epoch.push_back(fused_ids[rng.uniform_index(fused_ids.size())]);
    } else {
      for (std::size_t idx : rng.sample_indices(fused_ids.size(), aux_ids.size()))
        epoch.push_back(fused_ids[idx]);
    }
    rng.shuffle(epoch);
    for (const auto& id : epoch) {
      if (schedule.iteration_ids.size() >= iterations) break;
      schedule.iteration_ids.push_back(id);
    }
  }
  return schedule;
}

SplatCloud finetune_splats(const SplatCloud& model,
                           const std::map<std::string, TrainView>& views,
                           const SampleSchedule& schedule,
                           const TrainConfig& cfg) {
  model.validate();
  for (const auto& id : schedule.iteration_ids)
    if (!views.count(id))
      throw PreconditionError("finetune_splats: scheduled view " + id +
                              " not provided");

  SplatCloud cloud = model;
  SplatCloud snapshot = cloud;  // last cloud with a finite loss

  // Optimization state: sigma and opacity move in their unconstrained charts.
  const std::size_t n = cloud.splats.size();
  std::vector<double> log_sigma(n), logit_op(n);
  for (std::size_t i = 0; i < n; ++i) {
    log_sigma[i] = std::log(cloud.splats[i].sigma);
    // opacity 1 maps to a large but finite logit
    const double o = std::min(cloud.splats[i].opacity, 1.0 - 1e-9);
    logit_op[i] = std::log(o / (1.0 - o));
  }

  const std::size_t total = std::min<std::size_t>(
      schedule.iteration_ids.size(), static_cast<std::size_t>(cfg.iterations));
  SplatGradients grads(n);
  for (std::size_t iter = 0; iter < total; ++iter) {
    const TrainView& view = views.at(schedule.iteration_ids[iter]);
    std::fill(grads.log_sigma.begin(), grads.log_sigma.end(), 0.0);
    std::fill(grads.logit_opacity.begin(), grads.logit_opacity.end(), 0.0);
    std::fill(grads.position.begin(), grads.position.end(), Eigen::Vector3d::Zero());
    std::fill(grads.color.begin(), grads.color.end(), Eigen::Vector3d::Zero());

    const double loss = photometric_loss_backward(cloud, view.pose, view.image,
                                                  view.mask, cfg.render, grads);
    if (!std::isfinite(loss))
      throw NonFiniteLoss("finetune_splats: non-finite loss at iteration " +
                          std::to_string(iter));
    snapshot = cloud;

    for (std::size_t i = 0; i < n; ++i) {
      Splat& s = cloud.splats[i];
      s.position -= cfg.lr_position * grads.position[i];
      log_sigma[i] -= cfg.lr_log_sigma * grads.log_sigma[i];
      s.sigma = std::exp(log_sigma[i]);
      s.color -= cfg.lr_color * grads.color[i];
      s.color = s.color.cwiseMax(0.0).cwiseMin(1.0);
      logit_op[i] -= cfg.lr_logit_opacity * grads.logit_opacity[i];
      logit_op[i] = std::clamp(logit_op[i], -30.0, 30.0);
      s.opacity = 1.0 / (1.0 + std::exp(-logit_op[i]));
    }

    bool finite = true;
    for (std::size_t i = 0; i < n && finite; ++i)
      finite = cloud.splats[i].position.allFinite() &&
               std::isfinite(cloud.splats[i].sigma);
    if (!finite) return snapshot;
  }
  return cloud;
}

}  // namespace posefuse
