// posefuse: batch CLI for multi-pose camera registration and splat fusion.
//
// Subcommands: gen | select | register | refine | complete | eval | pipeline.
// Exit codes: 0 success, 2 precondition failure, 3 stage failure.

#include <CLI11.hpp>
#include <iostream>
#include <nlohmann/json.hpp>

#include "posefuse/complete.hpp"
#include "posefuse/config.hpp"
#include "posefuse/fusion.hpp"
#include "posefuse/io.hpp"
#include "posefuse/metrics.hpp"
#include "posefuse/pipeline.hpp"
#include "posefuse/refine.hpp"
#include "posefuse/rng.hpp"
#include "posefuse/selection.hpp"
#include "posefuse/synth.hpp"

namespace pf = posefuse;
using nlohmann::json;

namespace {

struct GlobalOpts {
  std::uint64_t seed = 7;
  unsigned threads = 0;
  std::string config_path;
};

pf::TomlTable load_config(const std::string& path) {
  if (path.empty()) return pf::TomlTable::parse("");
  return pf::TomlTable::parse_file(path);
}

std::map<std::string, pf::SilhouetteMask> load_mask_dir(
    const std::filesystem::path& dir, const pf::PoseSet& cams) {
  std::map<std::string, pf::SilhouetteMask> masks;
  for (const auto& cam : cams.poses)
    masks[cam.id] = pf::load_pgm(dir / (cam.id + ".pgm"));
  return masks;
}

std::map<std::string, pf::RgbImage> load_image_dir(
    const std::filesystem::path& dir, const pf::PoseSet& cams) {
  std::map<std::string, pf::RgbImage> images;
  for (const auto& cam : cams.poses)
    images[cam.id] = pf::load_ppm(dir / (cam.id + ".ppm"));
  return images;
}

json fusion_result_to_json(const pf::FusionResult& r) {
  return json{{"transform", pf::sim3_to_json(r.transform)},
              {"score", r.score},
              {"winning_pair", r.winning_pair},
              {"anchor", r.winning_anchor},
              {"evaluated_pairs", r.evaluated_pairs}};
}

int run_gen(const GlobalOpts& g, const std::string& out,
            const std::string& config) {
  pf::SynthConfig cfg = pf::synth_config_from_toml(load_config(config));
  if (config.empty()) cfg.seed = g.seed;
  pf::make_dataset(cfg, out);
  std::cout << "dataset written to " << out << "\n";
  return 0;
}

int run_select(const std::string& main_desc, const std::string& aux_desc,
               const std::string& main_cams, const std::string& aux_cams,
               const std::string& oracle_path, const pf::SelectionParams& params,
               const std::string& out) {
  const pf::DescriptorSet main_set = pf::load_descriptors(main_desc);
  const pf::DescriptorSet aux_set = pf::load_descriptors(aux_desc);
  const pf::PoseSet main_poses = pf::load_pose_set(main_cams);
  const pf::PoseSet aux_poses = pf::load_pose_set(aux_cams);
  const pf::PosePrediction oracle = pf::load_oracle(oracle_path);

  const pf::MixedPoseSelection sel = pf::select_mixed_set(
      main_set, aux_set, main_poses, aux_poses, oracle, params);
  json j;
  j["main_ids"] = sel.main_ids;
  j["aux_ids"] = sel.aux_ids;
  j["seed_pair"] = json{{"main_id", sel.seed_pair.main_id},
                        {"aux_id", sel.seed_pair.aux_id},
                        {"similarity", sel.seed_pair.similarity}};
  j["score"] = sel.score;
  pf::save_json(out, j);
  std::cout << "selected " << sel.main_ids.size() << "+" << sel.aux_ids.size()
            << " views, mean similarity " << sel.score << "\n";
  return 0;
}

int run_register(const GlobalOpts& g, const std::string& main_path,
                 const std::string& aux_path, const std::string& mixed_path,
                 const std::string& model_path, const std::string& masks_dir,
                 int consensus_res, std::size_t max_pairs,
                 const std::string& out) {
  const pf::PoseSet p_main = pf::load_pose_set(main_path);
  const pf::PoseSet p_aux = pf::load_pose_set(aux_path);
  const pf::PoseSet p_mix = pf::load_pose_set(mixed_path);
  const pf::SplatCloud model = pf::load_splats(model_path, "main");
  const auto aux_masks = load_mask_dir(masks_dir, p_aux);

  pf::FusionOptions opts;
  opts.consensus_width = opts.consensus_height = consensus_res;
  opts.max_pairs = max_pairs;
  opts.threads = g.threads;

  const pf::RegistrationOutput reg =
      pf::global_register(p_main, p_aux, p_mix, model, aux_masks, opts);

  json j;
  j["stage1"] = fusion_result_to_json(reg.stage1);
  j["stage2"] = fusion_result_to_json(reg.stage2);
  j["aligned_mixed"] = pf::pose_set_to_json(reg.aligned_mixed);
  j["aligned_aux"] = pf::pose_set_to_json(reg.aligned_aux);
  pf::save_json(out, j);
  std::cout << "stage1 IoU " << reg.stage1.score << ", stage2 IoU "
            << reg.stage2.score << "\n";
  return 0;
}

int run_refine(const GlobalOpts& g, const std::string& registration_path,
               const std::string& model_path, const std::string& images_dir,
               const std::string& masks_dir, int max_iters,
               const std::string& out, const std::string& trace_out) {
  const json reg = pf::load_json(registration_path);
  const pf::Sim3 stage2 = pf::sim3_from_json(reg.at("stage2").at("transform"));
  // Refinement starts from the globally aligned auxiliary set; the reported
  // transform is composed back onto the stage-2 result so it still maps the
  // original auxiliary camera-file frame into the main frame.
  const pf::PoseSet p_aux = pf::pose_set_from_json(reg.at("aligned_aux"));
  const pf::SplatCloud model = pf::load_splats(model_path, "main");
  const auto masks = load_mask_dir(masks_dir, p_aux);
  const auto images = load_image_dir(images_dir, p_aux);

  pf::RefineConfig cfg;
  cfg.max_iters = max_iters;
  cfg.threads = g.threads;
  cfg.batch_seed = g.seed;
  const pf::LocalRefineResult res = pf::local_refine(
      p_aux, model, images, masks, pf::Sim3::identity(), cfg, cfg);

  json j;
  j["transform"] = pf::sim3_to_json(pf::sim3_compose(res.transform, stage2));
  j["aligned_aux"] = pf::pose_set_to_json(pf::sim3_apply_set(res.transform, p_aux));
  j["silhouette"] = json{{"iterations", res.silhouette.iterations},
                         {"initial_loss", res.silhouette.losses.front()},
                         {"final_loss", res.silhouette.losses.back()},
                         {"stalled", res.silhouette.stalled}};
  j["photometric"] = json{{"iterations", res.photometric.iterations},
                          {"initial_loss", res.photometric.losses.front()},
                          {"final_loss", res.photometric.losses.back()},
                          {"stalled", res.photometric.stalled}};
  pf::save_json(out, j);

  if (!trace_out.empty()) {
    std::string csv = "stage,iter,loss,step\n";
    for (std::size_t i = 0; i < res.silhouette.losses.size(); ++i)
      csv += "silhouette," + std::to_string(i) + "," +
             std::to_string(res.silhouette.losses[i]) + "," +
             std::to_string(res.silhouette.steps[i]) + "\n";
    for (std::size_t i = 0; i < res.photometric.losses.size(); ++i)
      csv += "photometric," + std::to_string(i) + "," +
             std::to_string(res.photometric.losses[i]) + "," +
             std::to_string(res.photometric.steps[i]) + "\n";
    pf::write_text_file(trace_out, csv);
  }
  std::cout << "refined: silhouette loss " << res.silhouette.losses.front()
            << " -> " << res.silhouette.losses.back() << ", photometric "
            << res.photometric.losses.front() << " -> "
            << res.photometric.losses.back() << "\n";
  return 0;
}

int run_complete(const GlobalOpts& g, const std::string& model_path,
                 const std::string& dataset_dir, const std::string& refined_path,
                 int iters, int aux_pose, const std::string& out) {
  const pf::Dataset ds = pf::Dataset::load(dataset_dir);
  const json refined = pf::load_json(refined_path);
  const pf::Sim3 to_main = pf::sim3_from_json(refined.at("transform"));
  pf::SplatCloud model = pf::load_splats(model_path, "main");

  std::map<std::string, pf::TrainView> views;
  std::vector<std::string> fused_ids, aux_ids;
  for (const auto& cam : ds.poses[0].cameras.poses) {
    pf::TrainView v;
    v.pose = cam;
    v.image = pf::load_ppm(ds.poses[0].image_paths.at(cam.id));
    v.mask = pf::load_pgm(ds.poses[0].mask_paths.at(cam.id));
    views[cam.id] = std::move(v);
    fused_ids.push_back(cam.id);
  }
  for (const auto& cam : ds.poses.at(aux_pose).cameras.poses) {
    pf::TrainView v;
    v.pose = pf::sim3_apply_pose(to_main, cam);
    v.image = pf::load_ppm(ds.poses[aux_pose].image_paths.at(cam.id));
    v.mask = pf::load_pgm(ds.poses[aux_pose].mask_paths.at(cam.id));
    views[cam.id] = std::move(v);
    aux_ids.push_back(cam.id);
  }

  pf::TrainConfig cfg;
  cfg.iterations = iters;
  cfg.seed = g.seed;
  const pf::SampleSchedule schedule = pf::balanced_schedule(
      fused_ids, aux_ids, static_cast<std::size_t>(iters), g.seed);
  model = pf::finetune_splats(model, views, schedule, cfg);
  pf::save_splats(out, model);
  std::cout << "fine-tuned model written to " << out << "\n";
  return 0;
}

int run_eval(const GlobalOpts& g, const std::string& dataset_dir,
             const std::string& model_path, const std::string& refined_path,
             double ratio, int aux_pose, const std::string& out_csv) {
  const pf::Dataset ds = pf::Dataset::load(dataset_dir);
  const json refined = pf::load_json(refined_path);
  const pf::Sim3 to_main = pf::sim3_from_json(refined.at("transform"));
  const pf::SplatCloud model = pf::load_splats(model_path, "main");

  const pf::PoseSet aligned =
      pf::sim3_apply_set(to_main, ds.poses.at(aux_pose).cameras);
  const pf::RegistrationError err =
      pf::registration_error(aligned, ds.gt_aligned(aux_pose));

  const pf::HoldoutSplit split = pf::holdout_split(
      ds.poses[aux_pose].cameras.ids(), ratio,
      pf::derive_seed(g.seed, "split/" + std::to_string(aux_pose)));
  double mean_psnr = 0.0, mean_ssim = 0.0;
  for (const auto& id : split.test_ids) {
    const pf::CameraPose cam =
        pf::sim3_apply_pose(to_main, *ds.poses[aux_pose].cameras.find(id));
    const pf::RgbImage ref = pf::load_ppm(ds.poses[aux_pose].image_paths.at(id));
    const pf::RgbImage img = pf::render_rgb(model, cam);
    mean_psnr += pf::psnr(img, ref);
    mean_ssim += pf::ssim(img, ref);
  }
  mean_psnr /= static_cast<double>(split.test_ids.size());
  mean_ssim /= static_cast<double>(split.test_ids.size());

  std::string csv =
      "case,stage,dtheta_x,dtheta_y,dtheta_z,dp,psnr,ssim,lpips,wall_seconds\n";
  csv += std::filesystem::path(dataset_dir).filename().string() + ",eval_pose" +
         std::to_string(aux_pose) + "," + std::to_string(err.dtheta_x_deg) + "," +
         std::to_string(err.dtheta_y_deg) + "," + std::to_string(err.dtheta_z_deg) +
         "," + std::to_string(err.dp) + "," + std::to_string(mean_psnr) + "," +
         std::to_string(mean_ssim) + ",,0\n";
  if (!out_csv.empty()) pf::write_text_file(out_csv, csv);
  std::cout << csv;
  std::cout << "pose " << aux_pose << ": dtheta=(" << err.dtheta_x_deg << ", "
            << err.dtheta_y_deg << ", " << err.dtheta_z_deg << ") deg, dp=" << err.dp
            << ", psnr=" << mean_psnr << " dB, ssim=" << mean_ssim << "\n";
  return 0;
}

int run_full_pipeline(const GlobalOpts& g, const std::string& dataset_dir,
                      const std::string& out_dir, bool skip_refine,
                      bool random_mixed, bool skip_complete, bool no_timings) {
  pf::PipelineConfig cfg = pf::PipelineConfig::from_toml(load_config(g.config_path));
  if (g.config_path.empty()) cfg.seed = g.seed;
  cfg.threads = g.threads ? g.threads : cfg.threads;
  cfg.skip_refine = cfg.skip_refine || skip_refine;
  cfg.random_mixed = cfg.random_mixed || random_mixed;
  cfg.skip_complete = cfg.skip_complete || skip_complete;
  if (no_timings) cfg.write_timings = false;

  const pf::PipelineReport report = pf::run_pipeline(dataset_dir, out_dir, cfg);
  std::cout << report.to_text();
  std::cout << "report written to " << (std::filesystem::path(out_dir) / "report.csv")
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pose-fused splat reconstruction toolkit"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "global random seed");
  app.add_option("--threads", g.threads, "worker threads (0 = hardware)");
  app.add_option("--config", g.config_path, "TOML configuration file");

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic multi-pose dataset");
  std::string gen_out, gen_config;
  gen->add_option("--out", gen_out, "output dataset directory")->required();
  gen->add_option("--config", gen_config, "synth TOML config");

  // select
  auto* select = app.add_subcommand("select", "mixed-pose image selection");
  std::string sel_main_desc, sel_aux_desc, sel_main_cams, sel_aux_cams,
      sel_oracle, sel_out;
  pf::SelectionParams sel_params;
  select->add_option("--main-desc", sel_main_desc)->required();
  select->add_option("--aux-desc", sel_aux_desc)->required();
  select->add_option("--main-cams", sel_main_cams)->required();
  select->add_option("--aux-cams", sel_aux_cams)->required();
  select->add_option("--oracle", sel_oracle)->required();
  select->add_option("--m", sel_params.m);
  select->add_option("--n", sel_params.n);
  select->add_option("--k", sel_params.k);
  select->add_option("--phi", sel_params.phi_deg);
  select->add_option("--delta", sel_params.delta_deg);
  select->add_option("--out", sel_out)->required();

  // register
  auto* reg = app.add_subcommand("register", "two-stage global registration");
  std::string reg_main, reg_aux, reg_mixed, reg_model, reg_masks, reg_out;
  int reg_res = 128;
  std::size_t reg_max_pairs = 0;
  reg->add_option("--main", reg_main)->required();
  reg->add_option("--aux", reg_aux)->required();
  reg->add_option("--mixed", reg_mixed)->required();
  reg->add_option("--model", reg_model)->required();
  reg->add_option("--masks", reg_masks)->required();
  reg->add_option("--consensus-res", reg_res);
  reg->add_option("--max-pairs", reg_max_pairs);
  reg->add_option("--out", reg_out)->required();

  // refine
  auto* refine = app.add_subcommand("refine", "gradient-based local refinement");
  std::string ref_registration, ref_model, ref_images, ref_masks, ref_out,
      ref_trace;
  int ref_iters = 500;
  refine->add_option("--registration", ref_registration)->required();
  refine->add_option("--model", ref_model)->required();
  refine->add_option("--images", ref_images)->required();
  refine->add_option("--masks", ref_masks)->required();
  refine->add_option("--iters", ref_iters);
  refine->add_option("--out", ref_out)->required();
  refine->add_option("--trace", ref_trace);

  // complete
  auto* complete = app.add_subcommand("complete", "balanced splat fine-tuning");
  std::string cmp_model, cmp_views, cmp_registration, cmp_out;
  int cmp_iters = 3000, cmp_pose = 1;
  complete->add_option("--model", cmp_model)->required();
  complete->add_option("--views", cmp_views, "dataset directory")->required();
  complete->add_option("--registration", cmp_registration)->required();
  complete->add_option("--iters", cmp_iters);
  complete->add_option("--pose", cmp_pose, "auxiliary pose index");
  complete->add_option("--out", cmp_out)->required();

  // eval
  auto* eval = app.add_subcommand("eval", "registration and view-quality metrics");
  std::string ev_dataset, ev_model, ev_refined, ev_csv;
  double ev_ratio = 131.0 / 150.0;
  int ev_pose = 1;
  eval->add_option("--dataset", ev_dataset)->required();
  eval->add_option("--model", ev_model)->required();
  eval->add_option("--refined", ev_refined)->required();
  eval->add_option("--ratio", ev_ratio);
  eval->add_option("--pose", ev_pose);
  eval->add_option("--out-csv", ev_csv);

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "run all stages end to end");
  std::string pipe_dataset, pipe_out;
  bool pipe_skip_refine = false, pipe_random = false, pipe_skip_complete = false,
       pipe_no_timings = false;
  pipe->add_option("--dataset", pipe_dataset)->required();
  pipe->add_option("--out", pipe_out)->required();
  pipe->add_flag("--skip-refine", pipe_skip_refine);
  pipe->add_flag("--random-mixed", pipe_random);
  pipe->add_flag("--skip-complete", pipe_skip_complete);
  pipe->add_flag("--no-timings", pipe_no_timings);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed())
      return run_gen(g, gen_out, gen_config.empty() ? g.config_path : gen_config);
    if (select->parsed())
      return run_select(sel_main_desc, sel_aux_desc, sel_main_cams, sel_aux_cams,
                        sel_oracle, sel_params, sel_out);
    if (reg->parsed())
      return run_register(g, reg_main, reg_aux, reg_mixed, reg_model, reg_masks,
                          reg_res, reg_max_pairs, reg_out);
    if (refine->parsed())
      return run_refine(g, ref_registration, ref_model, ref_images, ref_masks,
                        ref_iters, ref_out, ref_trace);
    if (complete->parsed())
      return run_complete(g, cmp_model, cmp_views, cmp_registration, cmp_iters,
                          cmp_pose, cmp_out);
    if (eval->parsed())
      return run_eval(g, ev_dataset, ev_model, ev_refined, ev_ratio, ev_pose,
                      ev_csv);
    if (pipe->parsed())
      return run_full_pipeline(g, pipe_dataset, pipe_out, pipe_skip_refine,
                               pipe_random, pipe_skip_complete, pipe_no_timings);
  } catch (const pf::PreconditionError& e) {
    std::cerr << "precondition failure: " << e.what() << "\n";
    return 2;
  } catch (const pf::IoError& e) {
    std::cerr << "io failure: " << e.what() << "\n";
    return 2;
  } catch (const pf::Error& e) {
    std::cerr << "stage failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "stage failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
