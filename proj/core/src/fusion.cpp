#include "posefuse/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "posefuse/parallel.hpp"

namespace posefuse {

namespace {

struct Candidate {
  std::size_t pair_index = 0;  // into the enumerated pair list
  int anchor = 0;
  Sim3 transform;
  bool degenerate = false;
  double score = -1.0;
};

// Anchored similarity: rotation and roll from align_pose_pair, scale from the
// pair, anchored so the anchor source center maps exactly onto its target.
Sim3 anchored_candidate(const CameraPose& s_anchor, const CameraPose& s_other,
                        const CameraPose& t_anchor, const CameraPose& t_other,
                        double eps_dist) {
  const double s = pair_scale(s_anchor, s_other, t_anchor, t_other, eps_dist);
  const Sim3 rigid = align_pose_pair(s_anchor, t_anchor);
  Sim3 out;
  out.scale = s;
  out.rotation = rigid.rotation;
  out.translation = t_anchor.center - s * (rigid.rotation * s_anchor.center);
  return out;
}

}  // namespace

FusionResult silhouette_consensus_fusion(
    const PoseSet& p_src, const PoseSet& p_tgt, const PoseSet& p_ref,
    const SplatCloud& model,
    const std::map<std::string, SilhouetteMask>& ref_masks,
    const FusionOptions& opts) {
  model.validate();

  // Correspondence is by image id.
  std::vector<std::string> shared;
  for (const auto& p : p_src.poses)
    if (p_tgt.contains(p.id)) shared.push_back(p.id);
  std::sort(shared.begin(), shared.end());
  if (shared.size() < 2)
    throw InsufficientCorrespondence(
        "silhouette_consensus_fusion: src and tgt share " +
        std::to_string(shared.size()) + " ids, need at least 2");
  for (const auto& p : p_ref.poses)
    if (!ref_masks.count(p.id))
      throw PreconditionError("silhouette_consensus_fusion: no reference mask for " +
                              p.id);

  const double eps_dist = 1e-6 * scene_diameter(p_tgt);

  // All unordered pairs in lexicographic order.
  std::vector<std::array<std::string, 2>> pairs;
  for (std::size_t i = 0; i < shared.size(); ++i)
    for (std::size_t j = i + 1; j < shared.size(); ++j)
      pairs.push_back({shared[i], shared[j]});

  if (opts.max_pairs > 0 && pairs.size() > opts.max_pairs) {
    // Keep the widest-baseline pairs; their scale estimates are the most
    // stable. Ties by id order keep the choice deterministic.
    std::vector<std::pair<double, std::size_t>> order(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const CameraPose* a = p_src.find(pairs[k][0]);
      const CameraPose* b = p_src.find(pairs[k][1]);
      order[k] = {-(a->center - b->center).norm(), k};
    }
    std::sort(order.begin(), order.end());
    std::vector<std::array<std::string, 2>> kept;
    kept.reserve(opts.max_pairs);
    for (std::size_t k = 0; k < opts.max_pairs; ++k)
      kept.push_back(pairs[order[k].second]);
    std::sort(kept.begin(), kept.end());
    pairs = std::move(kept);
  }

  // Reference views at consensus resolution.
  std::vector<CameraPose> ref_cams;
  std::vector<SilhouetteMask> ref_small;
  ref_cams.reserve(p_ref.poses.size());
  for (const auto& p : p_ref.poses) {
    CameraPose cam = p;
    cam.intrinsics =
        p.intrinsics.scaled_to(opts.consensus_width, opts.consensus_height);
    ref_cams.push_back(std::move(cam));
    ref_small.push_back(resample_nearest(ref_masks.at(p.id),
                                         opts.consensus_width,
                                         opts.consensus_height));
  }

  std::vector<Candidate> candidates;
  candidates.reserve(2 * pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const CameraPose* s1 = p_src.find(pairs[k][0]);
    const CameraPose* s2 = p_src.find(pairs[k][1]);
    const CameraPose* t1 = p_tgt.find(pairs[k][0]);
    const CameraPose* t2 = p_tgt.find(pairs[k][1]);
    for (int anchor = 0; anchor < 2; ++anchor) {
      Candidate c;
      c.pair_index = k;
      c.anchor = anchor;
      try {
        c.transform = anchor == 0 ? anchored_candidate(*s1, *s2, *t1, *t2, eps_dist)
                                  : anchored_candidate(*s2, *s1, *t2, *t1, eps_dist);
      } catch (const DegeneratePair&) {
        c.degenerate = true;
      }
      candidates.push_back(std::move(c));
    }
  }

  parallel_for(candidates.size(), opts.threads, [&](std::size_t ci) {
    Candidate& c = candidates[ci];
    if (c.degenerate) return;
    double iou_sum = 0.0;
    for (std::size_t v = 0; v < ref_cams.size(); ++v) {
      const CameraPose moved = sim3_apply_pose(c.transform, ref_cams[v]);
      const SoftOccupancy occ = render_occupancy(model, moved, opts.render);
      const SilhouetteMask mask = threshold_mask(occ, opts.mask_tau);
      iou_sum += mask_iou(mask, ref_small[v]);
    }
    c.score = iou_sum / static_cast<double>(ref_cams.size());
  });

  // Argmax with the deterministic tie-break: candidates are already in
  // (pair lexicographic, anchor) order, so strict improvement keeps the
  // earliest winner.
  const Candidate* best = nullptr;
  std::size_t usable = 0;
  for (const Candidate& c : candidates) {
    if (c.degenerate) continue;
    ++usable;
    if (!best || c.score > best->score) best = &c;
  }
  if (!best)
    throw AllCandidatesDegenerate(
        "silhouette_consensus_fusion: every candidate pair was degenerate");

  FusionResult out;
  out.transform = best->transform;
  out.score = best->score;
  out.winning_pair = pairs[best->pair_index];
  out.winning_anchor = best->anchor;
  out.evaluated_pairs = usable;
  return out;
}

RegistrationOutput global_register(
    const PoseSet& p_main, const PoseSet& p_aux, const PoseSet& p_mix,
    const SplatCloud& model,
    const std::map<std::string, SilhouetteMask>& aux_masks,
    const FusionOptions& opts) {
  // Partition the mixed set by image origin.
  PoseSet mix_main, mix_aux;
  mix_main.label = p_mix.label + "/main";
  mix_aux.label = p_mix.label + "/aux";
  for (const auto& p : p_mix.poses) {
    if (p_main.contains(p.id))
      mix_main.poses.push_back(p);
    else if (p_aux.contains(p.id))
      mix_aux.poses.push_back(p);
    else
      throw PreconditionError("global_register: mixed camera " + p.id +
                              " belongs to neither input set");
  }
  if (mix_main.poses.size() < 2 || mix_aux.poses.size() < 2)
    throw InsufficientCorrespondence(
        "global_register: mixed set must contain at least 2 cameras per origin");

  RegistrationOutput out;
  try {
    out.stage1 = silhouette_consensus_fusion(mix_main, p_main, mix_aux, model,
                                             aux_masks, opts);
  } catch (const Error& e) {
    throw StageError("stage1", e.what());
  }
  out.aligned_mixed = sim3_apply_set(out.stage1.transform, p_mix);
  out.aligned_mixed.label = "mixed_aligned";

  PoseSet mix_aux_aligned = sim3_apply_set(out.stage1.transform, mix_aux);
  try {
    out.stage2 = silhouette_consensus_fusion(p_aux, mix_aux_aligned, p_aux,
                                             model, aux_masks, opts);
  } catch (const Error& e) {
    throw StageError("stage2", e.what());
  }
  out.aligned_aux = sim3_apply_set(out.stage2.transform, p_aux);
  out.aligned_aux.label = "aux_aligned";
  return out;
}

}  // namespace posefuse
