#include "posefuse/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <sstream>

#include "posefuse/io.hpp"
#include "posefuse/parallel.hpp"
#include "posefuse/rng.hpp"

namespace posefuse {

using nlohmann::json;

namespace {

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

HoldoutSplit pose_split(const Dataset& ds, int pose_index, double ratio,
                        std::uint64_t seed) {
  return holdout_split(ds.poses[pose_index].cameras.ids(), ratio,
                       derive_seed(seed, "split/" + std::to_string(pose_index)));
}

void load_train_views(FusionState& state, const Dataset& ds, int pose_index,
                      const std::vector<std::string>& ids,
                      const Sim3& to_main) {
  const DatasetPoseData& pd = ds.poses[pose_index];
  for (const auto& id : ids) {
    TrainView view;
    view.pose = sim3_apply_pose(to_main, *pd.cameras.find(id));
    view.image = load_ppm(pd.image_paths.at(id));
    view.mask = load_pgm(pd.mask_paths.at(id));
    state.train_views[id] = std::move(view);
  }
}

}  // namespace

PipelineConfig PipelineConfig::from_toml(const TomlTable& t) {
  PipelineConfig cfg;
  cfg.selection.m = static_cast<int>(t.get_int("selection.m", cfg.selection.m));
  cfg.selection.n = static_cast<int>(t.get_int("selection.n", cfg.selection.n));
  cfg.selection.k = static_cast<int>(t.get_int("selection.k", cfg.selection.k));
  cfg.selection.phi_deg = t.get_double("selection.phi", cfg.selection.phi_deg);
  cfg.selection.delta_deg = t.get_double("selection.delta", cfg.selection.delta_deg);

  const int res = static_cast<int>(
      t.get_int("fusion.consensus_res", cfg.fusion.consensus_width));
  cfg.fusion.consensus_width = res;
  cfg.fusion.consensus_height = res;
  cfg.fusion.max_pairs =
      static_cast<std::size_t>(t.get_int("fusion.max_pairs", 0));

  cfg.refine.max_iters =
      static_cast<int>(t.get_int("refine.max_iters", cfg.refine.max_iters));
  cfg.refine.step_rot_rad = t.get_double("refine.step_rot", cfg.refine.step_rot_rad);
  cfg.refine.step_trans_frac =
      t.get_double("refine.step_trans", cfg.refine.step_trans_frac);
  cfg.refine.step_log_scale =
      t.get_double("refine.step_scale", cfg.refine.step_log_scale);
  cfg.refine.batch_size =
      static_cast<std::size_t>(t.get_int("refine.batch", 0));

  cfg.train.iterations =
      static_cast<int>(t.get_int("train.iterations", cfg.train.iterations));
  cfg.train.lr_position = t.get_double("train.lr_position", cfg.train.lr_position);
  cfg.train.lr_log_sigma = t.get_double("train.lr_log_sigma", cfg.train.lr_log_sigma);
  cfg.train.lr_color = t.get_double("train.lr_color", cfg.train.lr_color);
  cfg.train.lr_logit_opacity =
      t.get_double("train.lr_logit_opacity", cfg.train.lr_logit_opacity);

  cfg.holdout_ratio = t.get_double("pipeline.holdout_ratio", cfg.holdout_ratio);
  cfg.seed = static_cast<std::uint64_t>(t.get_int("pipeline.seed", 7));
  cfg.skip_refine = t.get_bool("pipeline.skip_refine", false);
  cfg.random_mixed = t.get_bool("pipeline.random_mixed", false);
  cfg.skip_complete = t.get_bool("pipeline.skip_complete", false);
  cfg.write_timings = t.get_bool("pipeline.timings", true);
  cfg.threads = static_cast<unsigned>(t.get_int("pipeline.threads", 0));
  return cfg;
}

void PipelineConfig::apply_threads() {
  fusion.threads = threads;
  refine.threads = threads;
}

FusionState init_fusion_state(const Dataset& ds, const PipelineConfig& cfg) {
  FusionState state;
  state.model = ds.model_main;
  state.fused_poses = ds.poses[0].cameras;  // pose 0 defines the main frame
  state.fused_poses.label = "fused";
  state.fused_descriptors = ds.poses[0].descriptors;
  const HoldoutSplit split = pose_split(ds, 0, cfg.holdout_ratio, cfg.seed);
  state.fused_train_ids = split.train_ids;
  load_train_views(state, ds, 0, split.train_ids, Sim3::identity());
  return state;
}

AuxFusionOutcome iterate_auxiliary_poses(
    FusionState& state, const Dataset& ds, int pose_index,
    const PipelineConfig& cfg,
    const std::optional<std::filesystem::path>& out_dir) {
  if (pose_index < 1 || pose_index >= static_cast<int>(ds.poses.size()))
    throw PreconditionError("iterate_auxiliary_poses: bad pose index");
  const DatasetPoseData& aux = ds.poses[pose_index];
  const std::string tag = std::to_string(pose_index);

  AuxFusionOutcome out;
  out.pose_index = pose_index;
  auto t0 = std::chrono::steady_clock::now();

  // --- Mixed-pose image selection ---------------------------------------
  if (cfg.random_mixed) {
    Rng rng(derive_seed(cfg.seed, "random_mixed/" + tag));
    std::vector<std::string> main_ids = state.fused_poses.ids();
    std::vector<std::string> aux_ids = aux.cameras.ids();
    std::sort(main_ids.begin(), main_ids.end());
    std::sort(aux_ids.begin(), aux_ids.end());
    MixedPoseSelection sel;
    for (std::size_t i : rng.sample_indices(main_ids.size(), cfg.selection.m))
      sel.main_ids.push_back(main_ids[i]);
    for (std::size_t i : rng.sample_indices(aux_ids.size(), cfg.selection.n))
      sel.aux_ids.push_back(aux_ids[i]);
    sel.seed_pair = {sel.main_ids.front(), sel.aux_ids.front(), 0.0};
    out.selection = std::move(sel);
  } else {
    out.selection = select_mixed_set(state.fused_descriptors, aux.descriptors,
                                     state.fused_poses, aux.cameras, ds.oracle,
                                     cfg.selection);
  }
  out.wall_select = seconds_since(t0);

  if (out_dir) {
    json sel;
    sel["main_ids"] = out.selection.main_ids;
    sel["aux_ids"] = out.selection.aux_ids;
    sel["seed_pair"] = json{{"main_id", out.selection.seed_pair.main_id},
                            {"aux_id", out.selection.seed_pair.aux_id},
                            {"similarity", out.selection.seed_pair.similarity}};
    sel["score"] = out.selection.score;
    save_json(*out_dir / ("selection_pose" + tag + ".json"), sel);
  }

  // --- Mixed-pose camera prediction (foundation-model stand-in) ----------
  t0 = std::chrono::steady_clock::now();
  const PoseSet mixed = predict_mixed_cameras(ds, out.selection.main_ids,
                                              out.selection.aux_ids, cfg.seed);
  if (out_dir) save_pose_set(*out_dir / ("mixed_cams_pose" + tag + ".json"), mixed);

  // --- Global registration ------------------------------------------------
  std::map<std::string, SilhouetteMask> aux_masks;
  for (const auto& cam : aux.cameras.poses)
    aux_masks[cam.id] = load_pgm(aux.mask_paths.at(cam.id));

  const RegistrationOutput reg = global_register(
      state.fused_poses, aux.cameras, mixed, state.model, aux_masks, cfg.fusion);
  out.stage1 = reg.stage1;
  out.stage2 = reg.stage2;
  out.global_transform = reg.stage2.transform;
  out.wall_register = seconds_since(t0);

  if (out_dir) {
    json r;
    r["stage1"] = json{{"transform", sim3_to_json(reg.stage1.transform)},
                       {"score", reg.stage1.score},
                       {"winning_pair", reg.stage1.winning_pair},
                       {"anchor", reg.stage1.winning_anchor},
                       {"evaluated_pairs", reg.stage1.evaluated_pairs}};
    r["stage2"] = json{{"transform", sim3_to_json(reg.stage2.transform)},
                       {"score", reg.stage2.score},
                       {"winning_pair", reg.stage2.winning_pair},
                       {"anchor", reg.stage2.winning_anchor},
                       {"evaluated_pairs", reg.stage2.evaluated_pairs}};
    save_json(*out_dir / ("registration_pose" + tag + ".json"), r);
    save_pose_set(*out_dir / ("aligned_aux_pose" + tag + ".json"), reg.aligned_aux);
  }

  // --- Local refinement ----------------------------------------------------
  t0 = std::chrono::steady_clock::now();
  out.refined_transform = out.global_transform;
  if (!cfg.skip_refine) {
    std::map<std::string, RgbImage> aux_images;
    for (const auto& cam : aux.cameras.poses)
      aux_images[cam.id] = load_ppm(aux.image_paths.at(cam.id));
    RefineConfig rc = cfg.refine;
    rc.batch_seed = derive_seed(cfg.seed, "refine/" + tag);
    const LocalRefineResult res =
        local_refine(aux.cameras, state.model, aux_images, aux_masks,
                     out.global_transform, rc, rc);
    out.refined_transform = res.transform;
    out.trace_silhouette = res.silhouette;
    out.trace_photometric = res.photometric;
  }
  out.aligned_aux = sim3_apply_set(out.refined_transform, aux.cameras);
  out.aligned_aux.label = "pose" + tag + "_aligned";
  out.wall_refine = seconds_since(t0);

  if (out_dir) {
    json r;
    r["transform"] = sim3_to_json(out.refined_transform);
    r["skipped"] = cfg.skip_refine;
    save_json(*out_dir / ("refined_pose" + tag + ".json"), r);
    std::ostringstream trace;
    trace << "stage,iter,loss,step\n";
    for (std::size_t i = 0; i < out.trace_silhouette.losses.size(); ++i)
      trace << "silhouette," << i << "," << fmt(out.trace_silhouette.losses[i])
            << "," << fmt(out.trace_silhouette.steps[i]) << "\n";
    for (std::size_t i = 0; i < out.trace_photometric.losses.size(); ++i)
      trace << "photometric," << i << "," << fmt(out.trace_photometric.losses[i])
            << "," << fmt(out.trace_photometric.steps[i]) << "\n";
    write_text_file(*out_dir / ("trace_pose" + tag + ".csv"), trace.str());
    save_pose_set(*out_dir / ("refined_aux_pose" + tag + ".json"), out.aligned_aux);
  }

  // --- Completion ------------------------------------------------------------
  t0 = std::chrono::steady_clock::now();
  const HoldoutSplit split = pose_split(ds, pose_index, cfg.holdout_ratio, cfg.seed);
  load_train_views(state, ds, pose_index, split.train_ids, out.refined_transform);
  if (!cfg.skip_complete) {
    TrainConfig tc = cfg.train;
    tc.seed = derive_seed(cfg.seed, "train/" + tag);
    const SampleSchedule schedule =
        balanced_schedule(state.fused_train_ids, split.train_ids,
                          static_cast<std::size_t>(tc.iterations), tc.seed);
    state.model = finetune_splats(state.model, state.train_views, schedule, tc);
    if (out_dir)
      save_splats(*out_dir / ("model_fused_pose" + tag + ".json"), state.model);
  }
  out.wall_complete = seconds_since(t0);

  // Grow the fused pool with the registered auxiliary views.
  for (const auto& cam : out.aligned_aux.poses)
    state.fused_poses.poses.push_back(cam);
  for (const auto& [id, d] : aux.descriptors.entries)
    state.fused_descriptors.entries[id] = d;
  for (const auto& id : split.train_ids) state.fused_train_ids.push_back(id);
  return out;
}

std::string PipelineReport::to_csv(bool with_timings) const {
  std::ostringstream csv;
  csv << "case,stage,dtheta_x,dtheta_y,dtheta_z,dp,psnr,ssim,lpips,wall_seconds\n";
  auto wall = [&](double v) { return with_timings ? fmt(v) : std::string("0"); };
  for (const auto& r : registration) {
    const auto& o = outcomes[&r - registration.data()];
    csv << case_name << ",register_pose" << r.pose_index << ","
        << fmt(r.global_error.dtheta_x_deg) << "," << fmt(r.global_error.dtheta_y_deg)
        << "," << fmt(r.global_error.dtheta_z_deg) << "," << fmt(r.global_error.dp)
        << ",,,," << wall(o.wall_select + o.wall_register) << "\n";
    csv << case_name << ",refine_pose" << r.pose_index << ","
        << fmt(r.refined_error.dtheta_x_deg) << ","
        << fmt(r.refined_error.dtheta_y_deg) << ","
        << fmt(r.refined_error.dtheta_z_deg) << "," << fmt(r.refined_error.dp)
        << ",,,," << wall(o.wall_refine) << "\n";
  }
  for (const auto& r : nvs) {
    csv << case_name << ",nvs_pose" << r.pose_index
        << (r.initial_model ? "_main_only" : "") << ",,,,," << fmt(r.psnr) << ","
        << fmt(r.ssim) << ",," << wall(0.0) << "\n";
  }
  csv << case_name << ",total,,,,,,,," << wall(total_seconds) << "\n";
  return csv.str();
}

std::string PipelineReport::to_text() const {
  std::ostringstream txt;
  txt << "pose-fusion report for " << case_name << "\n";
  for (const auto& r : registration) {
    txt << "  pose " << r.pose_index << " global  : dtheta=("
        << fmt(r.global_error.dtheta_x_deg) << ", "
        << fmt(r.global_error.dtheta_y_deg) << ", "
        << fmt(r.global_error.dtheta_z_deg) << ") deg  dp=" << fmt(r.global_error.dp)
        << "  (stage1 IoU " << fmt(r.stage1_score) << ", stage2 IoU "
        << fmt(r.stage2_score) << ")\n";
    txt << "  pose " << r.pose_index << " refined : dtheta=("
        << fmt(r.refined_error.dtheta_x_deg) << ", "
        << fmt(r.refined_error.dtheta_y_deg) << ", "
        << fmt(r.refined_error.dtheta_z_deg) << ") deg  dp="
        << fmt(r.refined_error.dp) << "\n";
  }
  for (const auto& r : nvs) {
    txt << "  pose " << r.pose_index
        << (r.initial_model ? " nvs (main-only model)" : " nvs (fused model)")
        << ": psnr=" << fmt(r.psnr) << " dB  ssim=" << fmt(r.ssim) << "\n";
  }
  return txt.str();
}

PipelineReport run_pipeline(const std::filesystem::path& dataset_dir,
                            const std::filesystem::path& out_dir,
                            const PipelineConfig& cfg_in) {
  const auto t_start = std::chrono::steady_clock::now();
  PipelineConfig cfg = cfg_in;
  cfg.apply_threads();
  std::filesystem::create_directories(out_dir);

  const Dataset ds = Dataset::load(dataset_dir);
  PipelineReport report;
  report.case_name = dataset_dir.filename().string();
  if (report.case_name.empty())
    report.case_name = dataset_dir.parent_path().filename().string();

  FusionState state = init_fusion_state(ds, cfg);
  const SplatCloud initial_model = state.model;

  for (int k = 1; k < static_cast<int>(ds.poses.size()); ++k) {
    AuxFusionOutcome outcome;
    try {
      outcome = iterate_auxiliary_poses(state, ds, k, cfg, out_dir);
    } catch (const Error& e) {
      throw StageError("pose" + std::to_string(k), e.what());
    }

    RegistrationRow row;
    row.pose_index = k;
    const PoseSet gt = ds.gt_aligned(k);
    row.global_error = registration_error(
        sim3_apply_set(outcome.global_transform, ds.poses[k].cameras), gt);
    row.refined_error = registration_error(outcome.aligned_aux, gt);
    row.stage1_score = outcome.stage1.score;
    row.stage2_score = outcome.stage2.score;
    report.registration.push_back(row);
    report.outcomes.push_back(std::move(outcome));
  }

  // Held-out novel-view evaluation per pose: the fused model and, for
  // comparison, the starting main-only model.
  for (int k = 0; k < static_cast<int>(ds.poses.size()); ++k) {
    const HoldoutSplit split = pose_split(ds, k, cfg.holdout_ratio, cfg.seed);
    const Sim3 to_main =
        k == 0 ? Sim3::identity() : report.outcomes[k - 1].refined_transform;
    struct ViewScore {
      double psnr_fused, ssim_fused, psnr_init, ssim_init;
    };
    std::vector<ViewScore> scores(split.test_ids.size());
    parallel_for(split.test_ids.size(), cfg.threads, [&](std::size_t i) {
      const std::string& id = split.test_ids[i];
      const CameraPose cam =
          sim3_apply_pose(to_main, *ds.poses[k].cameras.find(id));
      const RgbImage ref = load_ppm(ds.poses[k].image_paths.at(id));
      const RgbImage img = render_rgb(state.model, cam);
      const RgbImage img0 = render_rgb(initial_model, cam);
      scores[i] = {psnr(img, ref), ssim(img, ref), psnr(img0, ref),
                   ssim(img0, ref)};
    });
    NvsRow fused{k, false, 0.0, 0.0}, init{k, true, 0.0, 0.0};
    for (const auto& s : scores) {
      fused.psnr += s.psnr_fused;
      fused.ssim += s.ssim_fused;
      init.psnr += s.psnr_init;
      init.ssim += s.ssim_init;
    }
    const double n = static_cast<double>(std::max<std::size_t>(1, scores.size()));
    fused.psnr /= n;
    fused.ssim /= n;
    init.psnr /= n;
    init.ssim /= n;
    report.nvs.push_back(init);
    report.nvs.push_back(fused);
  }

  report.total_seconds = seconds_since(t_start);
  write_text_file(out_dir / "report.csv", report.to_csv(cfg.write_timings));
  write_text_file(out_dir / "report.txt", report.to_text());
  return report;
}

}  // namespace posefuse
