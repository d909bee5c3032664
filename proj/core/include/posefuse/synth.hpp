#pragma once

#include <filesystem>
#include <map>
#include <vector>

#include "posefuse/geometry.hpp"
#include "posefuse/selection.hpp"
#include "posefuse/splat.hpp"

namespace posefuse {

// Synthetic multi-pose dataset configuration. The object lives in the unit
// sphere; pose 0 is the main capture session and defines the evaluation
// frame. Auxiliary sessions re-pose the object rigidly and express their
// camera files in an arbitrary similarity gauge, simulating independent SfM.
struct SynthConfig {
  std::uint64_t seed = 1;
  int n_splats = 2000;
  int views_per_pose = 150;
  int n_poses = 2;

  double camera_radius = 2.5;
  double fov_deg = 50.0;
  int image_size = 128;  // mask/image resolution (square)

  // SfM gauge freedom of auxiliary camera files.
  double gauge_scale_min = 0.5;
  double gauge_scale_max = 2.0;
  double gauge_trans_frac = 0.5;  // of the object diameter

  // Physical object move between sessions (always rigid).
  double pose_trans_frac = 0.1;  // of the object diameter
  bool flip_pose_change = false;  // pose 1 turns the object upside down

  int descriptor_dim = 64;
  double sigma_desc = 0.02;      // descriptor noise
  double sigma_angle_deg = 1.0;  // verification-oracle angle noise

  // Mixed-pose camera predictor error model: per-camera error magnitude in
  // degrees grows with the camera's angular gap to the nearest cross-session
  // view, with a mostly shared error direction so errors do not average out.
  double predictor_base_deg = 0.4;
  double predictor_gain = 0.05;       // per degree of cross gap
  double predictor_quad_deg = 30.0;   // gap scale of the quadratic term
  double predictor_axis_jitter = 0.3;

  bool noiseless = false;  // zeroes sigma_desc, sigma_angle and predictor noise

  // Completion fixture: paint the bottom of the object a distinct color and
  // degrade the written main model where main views cannot see.
  bool paint_bottom_patch = false;

  CameraIntrinsics intrinsics() const;
  double object_diameter() const { return 2.0; }

  // Effective noise knobs (zero when noiseless).
  double eff_sigma_desc() const { return noiseless ? 0.0 : sigma_desc; }
  double eff_sigma_angle() const { return noiseless ? 0.0 : sigma_angle_deg; }
  double eff_predictor_base() const { return noiseless ? 0.0 : predictor_base_deg; }
  double eff_predictor_gain() const { return noiseless ? 0.0 : predictor_gain; }
};

// Seed-deterministic multi-blob cloud bounded by the unit sphere. Regenerates
// with the next sub-seed until no two of the four principal silhouettes
// (+-x, +-y views) agree above IoU 0.95.
SplatCloud gen_object(std::uint64_t seed, int n_splats);

// Fibonacci-spiral viewpoints on the upper hemisphere, looking at the origin
// with gravity-consistent up. n = 1 places the camera at the pole. The seed
// rotates the spiral azimuth. Ids are prefix + zero-padded index.
PoseSet sample_hemisphere_cameras(int n, double radius,
                                  const CameraIntrinsics& intrinsics,
                                  std::uint64_t seed,
                                  const std::string& id_prefix);

// One generated dataset on disk plus its ground truth, as the pipeline
// consumes it.
struct DatasetPoseData {
  int index = 0;
  std::filesystem::path dir;
  PoseSet cameras;  // file frame (gauged for auxiliary poses)
  DescriptorSet descriptors;
  std::map<std::string, std::filesystem::path> image_paths;
  std::map<std::string, std::filesystem::path> mask_paths;
};

struct Dataset {
  std::filesystem::path root;
  std::vector<DatasetPoseData> poses;
  PosePrediction oracle;

  // Ground truth, indexed by pose.
  std::vector<Sim3> pose_change;   // object move, main frame -> pose-k frame
  std::vector<Sim3> gauge;         // world -> camera-file frame
  std::vector<Sim3> aux_to_main;   // camera-file frame -> main frame
  Eigen::Vector3d object_center = Eigen::Vector3d::Zero();
  double diameter = 2.0;

  SplatCloud model_main;  // the pipeline's starting model
  SynthConfig config;

  static Dataset load(const std::filesystem::path& root);

  // Ground-truth registered auxiliary poses (main frame) for evaluation.
  PoseSet gt_aligned(int pose_index) const;
};

// Generates and writes the dataset: per pose cameras.json, images/, masks/,
// descriptors.json; shared gt/transforms.json, gt/oracle.json,
// gt/splats_pose{k}.json, gt/model_main.json, gt/synth_config.json.
Dataset make_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir);

class TomlTable;
// Reads [synth] keys from a config table; missing keys keep defaults.
SynthConfig synth_config_from_toml(const TomlTable& toml);

// Stand-in for the multi-view foundation model: returns cameras for the
// selected ids in one arbitrary similarity frame, with the error model
// described in SynthConfig. Deterministic in (dataset seed, run_seed, ids).
PoseSet predict_mixed_cameras(const Dataset& dataset,
                              const std::vector<std::string>& main_ids,
                              const std::vector<std::string>& aux_ids,
                              std::uint64_t run_seed);

}  // namespace posefuse
