#pragma once

#include <map>
#include <string>
#include <vector>

#include "posefuse/geometry.hpp"
#include "posefuse/image.hpp"
#include "posefuse/render.hpp"
#include "posefuse/splat.hpp"

namespace posefuse {

// Per-iteration training view order. Each epoch unions a fresh uniform
// subset of the fused pool (size |aux|) with all auxiliary views, shuffled;
// one view is consumed per iteration until the budget is reached.
struct SampleSchedule {
  std::vector<std::string> iteration_ids;
  std::size_t epoch_length = 0;
  std::uint64_t seed = 0;
  bool with_replacement = false;  // fused pool smaller than the aux set

  std::vector<std::vector<std::string>> epochs() const;
};

SampleSchedule balanced_schedule(const std::vector<std::string>& fused_ids,
                                 const std::vector<std::string>& aux_ids,
                                 std::size_t iterations, std::uint64_t seed);

struct TrainConfig {
  int iterations = 3000;  // desk scale; full scale uses 30000
  double lr_position = 2e-3;
  double lr_log_sigma = 5e-3;
  double lr_color = 0.5;
  double lr_logit_opacity = 0.2;
  std::uint64_t seed = 7;
  RenderOptions render;
};

struct TrainView {
  CameraPose pose;  // already registered into the model frame
  RgbImage image;
  SilhouetteMask mask;
};

// Photometric fine-tuning of the splat cloud with frozen poses: one
// scheduled view per iteration, analytic gradients of the masked L1 loss on
// position, log-radius, color (clamped to [0,1]) and logit-opacity. The
// splat count never changes.
SplatCloud finetune_splats(const SplatCloud& model,
                           const std::map<std::string, TrainView>& views,
                           const SampleSchedule& schedule,
                           const TrainConfig& cfg);

}  // namespace posefuse
