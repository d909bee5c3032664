#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "posefuse/complete.hpp"
#include "posefuse/config.hpp"
#include "posefuse/fusion.hpp"
#include "posefuse/metrics.hpp"
#include "posefuse/refine.hpp"
#include "posefuse/selection.hpp"
#include "posefuse/synth.hpp"

namespace posefuse {

struct PipelineConfig {
  SelectionParams selection;
  FusionOptions fusion;
  RefineConfig refine;
  TrainConfig train;
  double holdout_ratio = 131.0 / 150.0;
  std::uint64_t seed = 7;
  bool skip_refine = false;
  bool random_mixed = false;  // replace selection with a seeded random subset
  bool skip_complete = false;
  bool write_timings = true;  // timings are the one non-deterministic column
  unsigned threads = 0;

  static PipelineConfig from_toml(const TomlTable& toml);
  void apply_threads();  // pushes the thread count into stage options
};

// Incremental fusion state: the running model plus everything registered into
// the main frame so far.
struct FusionState {
  SplatCloud model;
  PoseSet fused_poses;           // registered cameras of all fused views
  DescriptorSet fused_descriptors;
  std::vector<std::string> fused_train_ids;
  std::map<std::string, TrainView> train_views;
};

struct AuxFusionOutcome {
  int pose_index = 0;
  MixedPoseSelection selection;
  FusionResult stage1;
  FusionResult stage2;
  Sim3 global_transform;   // auxiliary camera-file frame -> main frame
  Sim3 refined_transform;  // after local refinement (= global when skipped)
  PoseSet aligned_aux;     // refined transform applied to the auxiliary file set
  RefineTrace trace_silhouette;
  RefineTrace trace_photometric;
  double wall_select = 0.0, wall_register = 0.0, wall_refine = 0.0,
         wall_complete = 0.0;
};

// Seeds the state from the dataset's main pose (pose 0).
FusionState init_fusion_state(const Dataset& dataset, const PipelineConfig& cfg);

// Runs selection -> global registration -> local refinement -> completion for
// one auxiliary pose and grows the fused pool. Artifacts are written under
// out_dir when provided.
AuxFusionOutcome iterate_auxiliary_poses(
    FusionState& state, const Dataset& dataset, int pose_index,
    const PipelineConfig& cfg,
    const std::optional<std::filesystem::path>& out_dir = std::nullopt);

struct RegistrationRow {
  int pose_index = 0;
  RegistrationError global_error;
  RegistrationError refined_error;
  double stage1_score = 0.0, stage2_score = 0.0;
};

struct NvsRow {
  int pose_index = 0;
  bool initial_model = false;  // main-only model baseline
  double psnr = 0.0;
  double ssim = 0.0;
};

struct PipelineReport {
  std::string case_name;
  std::vector<RegistrationRow> registration;  // auxiliary poses only
  std::vector<NvsRow> nvs;                    // held-out views, per pose
  std::vector<AuxFusionOutcome> outcomes;
  double total_seconds = 0.0;

  std::string to_csv(bool with_timings) const;
  std::string to_text() const;
};

// The full batch pipeline: load dataset, fuse every auxiliary pose, evaluate
// registration against ground truth and novel-view quality on the held-out
// split, write artifacts and the report under out_dir.
PipelineReport run_pipeline(const std::filesystem::path& dataset_dir,
                            const std::filesystem::path& out_dir,
                            const PipelineConfig& cfg);

}  // namespace posefuse
