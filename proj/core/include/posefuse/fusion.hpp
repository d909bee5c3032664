#pragma once

#include <array>
#include <map>
#include <string>

#include "posefuse/geometry.hpp"
#include "posefuse/image.hpp"
#include "posefuse/render.hpp"
#include "posefuse/splat.hpp"

namespace posefuse {

struct FusionOptions {
  int consensus_width = 128;   // consensus renders use this raster,
  int consensus_height = 128;  // independent of the dataset resolution
  double mask_tau = 0.5;
  std::size_t max_pairs = 0;   // 0 = exhaustive; otherwise deterministic
                               // farthest-distance subsampling
  RenderOptions render;
  unsigned threads = 0;
};

struct FusionResult {
  Sim3 transform;
  double score = 0.0;  // best average IoU
  std::array<std::string, 2> winning_pair;
  int winning_anchor = 0;  // 0: aligned first element, 1: second
  std::size_t evaluated_pairs = 0;
};

// Silhouette-consensus fusion (source -> target, scored over reference):
// enumerates unordered id pairs shared by src and tgt, builds two anchored
// similarity candidates per pair, applies each to ref, renders the model
// from every transformed reference camera and keeps the candidate with the
// highest average IoU against the reference masks. Ties go to the earliest
// pair in lexicographic id order, anchor 0 before anchor 1.
FusionResult silhouette_consensus_fusion(
    const PoseSet& p_src, const PoseSet& p_tgt, const PoseSet& p_ref,
    const SplatCloud& model,
    const std::map<std::string, SilhouetteMask>& ref_masks,
    const FusionOptions& opts = {});

struct RegistrationOutput {
  FusionResult stage1;
  FusionResult stage2;
  PoseSet aligned_mixed;  // stage-1 transform applied to all of p_mix
  PoseSet aligned_aux;    // stage-2 transform applied to all of p_aux
};

// Two-stage global registration. Stage 1 aligns the mixed-frame cameras that
// originate from main images onto the main set, scored by rendering from the
// transformed mixed auxiliary cameras. Stage 2 aligns the auxiliary set onto
// its transformed mixed counterparts, scored over all auxiliary views.
RegistrationOutput global_register(
    const PoseSet& p_main, const PoseSet& p_aux, const PoseSet& p_mix,
    const SplatCloud& model,
    const std::map<std::string, SilhouetteMask>& aux_masks,
    const FusionOptions& opts = {});

}  // namespace posefuse
