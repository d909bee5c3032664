#include "posefuse/synth.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "posefuse/config.hpp"
#include "posefuse/io.hpp"
#include "posefuse/parallel.hpp"
#include "posefuse/render.hpp"
#include "posefuse/rng.hpp"

namespace posefuse {

using nlohmann::json;

namespace {

constexpr double kDegToRad = M_PI / 180.0;
constexpr double kRadToDeg = 180.0 / M_PI;

Eigen::Vector3d random_unit_vector(Rng& rng) {
  while (true) {
    Eigen::Vector3d v(rng.normal(), rng.normal(), rng.normal());
    const double n = v.norm();
    if (n > 1e-9) return v / n;
  }
}

Eigen::Vector3d random_in_ball(Rng& rng, double radius) {
  return random_unit_vector(rng) * (radius * std::cbrt(rng.uniform()));
}

// Shoemake's uniform rotation.
Eigen::Quaterniond random_rotation(Rng& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  const double u3 = rng.uniform();
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  return Eigen::Quaterniond(a * std::sin(2.0 * M_PI * u2),
                            a * std::cos(2.0 * M_PI * u2),
                            b * std::sin(2.0 * M_PI * u3),
                            b * std::cos(2.0 * M_PI * u3))
      .normalized();
}

double angle_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const double c = std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0);
  return std::acos(c) * kRadToDeg;
}

json synth_config_to_json(const SynthConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["n_splats"] = c.n_splats;
  j["views_per_pose"] = c.views_per_pose;
  j["n_poses"] = c.n_poses;
  j["camera_radius"] = c.camera_radius;
  j["fov_deg"] = c.fov_deg;
  j["image_size"] = c.image_size;
  j["gauge_scale_min"] = c.gauge_scale_min;
  j["gauge_scale_max"] = c.gauge_scale_max;
  j["gauge_trans_frac"] = c.gauge_trans_frac;
  j["pose_trans_frac"] = c.pose_trans_frac;
  j["flip_pose_change"] = c.flip_pose_change;
  j["descriptor_dim"] = c.descriptor_dim;
  j["sigma_desc"] = c.sigma_desc;
  j["sigma_angle_deg"] = c.sigma_angle_deg;
  j["predictor_base_deg"] = c.predictor_base_deg;
  j["predictor_gain"] = c.predictor_gain;
  j["predictor_quad_deg"] = c.predictor_quad_deg;
  j["predictor_axis_jitter"] = c.predictor_axis_jitter;
  j["noiseless"] = c.noiseless;
  j["paint_bottom_patch"] = c.paint_bottom_patch;
  return j;
}

SynthConfig synth_config_from_json(const json& j) {
  SynthConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.n_splats = j.at("n_splats").get<int>();
  c.views_per_pose = j.at("views_per_pose").get<int>();
  c.n_poses = j.at("n_poses").get<int>();
  c.camera_radius = j.at("camera_radius").get<double>();
  c.fov_deg = j.at("fov_deg").get<double>();
  c.image_size = j.at("image_size").get<int>();
  c.gauge_scale_min = j.at("gauge_scale_min").get<double>();
  c.gauge_scale_max = j.at("gauge_scale_max").get<double>();
  c.gauge_trans_frac = j.at("gauge_trans_frac").get<double>();
  c.pose_trans_frac = j.at("pose_trans_frac").get<double>();
  c.flip_pose_change = j.at("flip_pose_change").get<bool>();
  c.descriptor_dim = j.at("descriptor_dim").get<int>();
  c.sigma_desc = j.at("sigma_desc").get<double>();
  c.sigma_angle_deg = j.at("sigma_angle_deg").get<double>();
  c.predictor_base_deg = j.at("predictor_base_deg").get<double>();
  c.predictor_gain = j.at("predictor_gain").get<double>();
  c.predictor_quad_deg = j.at("predictor_quad_deg").get<double>();
  c.predictor_axis_jitter = j.at("predictor_axis_jitter").get<double>();
  c.noiseless = j.at("noiseless").get<bool>();
  c.paint_bottom_patch = j.at("paint_bottom_patch").get<bool>();
  return c;
}

}  // namespace

CameraIntrinsics SynthConfig::intrinsics() const {
  CameraIntrinsics k;
  k.width = image_size;
  k.height = image_size;
  k.fx = 0.5 * image_size / std::tan(0.5 * fov_deg * kDegToRad);
  k.fy = k.fx;
  k.cx = 0.5 * (image_size - 1);
  k.cy = 0.5 * (image_size - 1);
  return k;
}

SplatCloud gen_object(std::uint64_t seed, int n_splats) {
  if (n_splats < 1) throw PreconditionError("gen_object: n_splats must be >= 1");

  for (int attempt = 0;; ++attempt) {
    Rng rng(derive_seed(seed, "object/" + std::to_string(attempt)));
    SplatCloud cloud;
    cloud.frame = "object";
    const int n_blobs = std::min(7, n_splats);
    std::vector<Eigen::Vector3d> centers(n_blobs), colors(n_blobs);
    std::vector<double> radii(n_blobs);
    for (int b = 0; b < n_blobs; ++b) {
      centers[b] = random_in_ball(rng, 0.55);
      radii[b] = rng.uniform(0.10, 0.28);
      colors[b] = Eigen::Vector3d(rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95),
                                  rng.uniform(0.05, 0.95));
    }
    for (int i = 0; i < n_splats; ++i) {
      const int b = i % n_blobs;
      Splat s;
      Eigen::Vector3d offset(rng.normal(), rng.normal(), rng.normal());
      s.position = centers[b] + 0.5 * radii[b] * offset;
      if (s.position.norm() > 0.97) s.position *= 0.97 / s.position.norm();
      s.sigma = rng.uniform(0.025, 0.06);
      s.color = colors[b].cwiseMax(0.0).cwiseMin(1.0);
      s.opacity = rng.uniform(0.65, 0.95);
      cloud.splats.push_back(s);
    }

    if (n_splats < 8) return cloud;  // too small for the symmetry check

    // Reject clouds whose principal silhouettes nearly coincide.
    CameraIntrinsics k;
    k.width = 64;
    k.height = 64;
    k.fx = k.fy = 0.5 * 64 / std::tan(0.5 * 50.0 * kDegToRad);
    k.cx = k.cy = 0.5 * 63;
    const Eigen::Vector3d dirs[4] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}};
    std::vector<SilhouetteMask> sils;
    for (const auto& d : dirs) {
      CameraPose cam;
      cam.center = 2.5 * d;
      const Eigen::Vector3d f = -d;
      const Eigen::Vector3d u = gravity_up_for_forward(f);
      Eigen::Matrix3d r;
      r.col(0) = f.cross(u);
      r.col(1) = -u;
      r.col(2) = f;
      cam.rotation = Eigen::Quaterniond(r).normalized();
      cam.intrinsics = k;
      sils.push_back(threshold_mask(render_occupancy(cloud, cam), 0.5));
    }
    bool symmetric = false;
    for (int a = 0; a < 4 && !symmetric; ++a)
      for (int b = a + 1; b < 4 && !symmetric; ++b)
        if (mask_iou(sils[a], sils[b]) > 0.95) symmetric = true;
    if (!symmetric) return cloud;
  }
}

PoseSet sample_hemisphere_cameras(int n, double radius,
                                  const CameraIntrinsics& intrinsics,
                                  std::uint64_t seed,
                                  const std::string& id_prefix) {
  if (n < 1)
    throw PreconditionError("sample_hemisphere_cameras: n must be >= 1");
  intrinsics.validate();

  Rng rng(derive_seed(seed, "hemisphere"));
  const double azimuth_offset = rng.uniform(0.0, 2.0 * M_PI);
  const double golden = M_PI * (3.0 - std::sqrt(5.0));
  const double z_span = 0.95;  // pole down to z = 0.05

  PoseSet set;
  set.label = id_prefix.empty() ? "hemisphere" : id_prefix;
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - z_span * static_cast<double>(i) / n;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = azimuth_offset + golden * i;
    CameraPose cam;
    cam.center = radius * Eigen::Vector3d(rho * std::cos(phi), rho * std::sin(phi), z);
    const Eigen::Vector3d f = (-cam.center).normalized();
    const Eigen::Vector3d u = gravity_up_for_forward(f);
    Eigen::Matrix3d r;
    r.col(0) = f.cross(u);
    r.col(1) = -u;
    r.col(2) = f;
    cam.rotation = Eigen::Quaterniond(r).normalized();
    cam.intrinsics = intrinsics;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d", i);
    cam.id = id_prefix + buf;
    set.poses.push_back(std::move(cam));
  }
  return set;
}

Dataset make_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  if (cfg.n_poses < 2)
    throw PreconditionError("make_dataset: n_poses must be >= 2");
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path gt_dir = out_dir / "gt";
  std::filesystem::create_directories(gt_dir);

  Dataset ds;
  ds.root = out_dir;
  ds.config = cfg;
  ds.diameter = cfg.object_diameter();

  SplatCloud cloud_main = gen_object(derive_seed(cfg.seed, "object"), cfg.n_splats);
  if (cfg.paint_bottom_patch) {
    std::vector<double> zs;
    zs.reserve(cloud_main.splats.size());
    for (const auto& s : cloud_main.splats) zs.push_back(s.position.z());
    std::vector<double> sorted = zs;
    std::sort(sorted.begin(), sorted.end());
    const double z_cut = sorted[static_cast<std::size_t>(0.15 * sorted.size())];
    for (auto& s : cloud_main.splats)
      if (s.position.z() <= z_cut) s.color = Eigen::Vector3d(0.05, 0.85, 0.10);
  }
  Eigen::Vector3d obj_center = Eigen::Vector3d::Zero();
  for (const auto& s : cloud_main.splats) obj_center += s.position;
  obj_center /= static_cast<double>(cloud_main.splats.size());
  ds.object_center = obj_center;

  // Descriptor projection: orthonormal 3-frame in R^D, fixed per dataset.
  Eigen::MatrixXd proj(cfg.descriptor_dim, 3);
  {
    Rng rng(derive_seed(cfg.seed, "descriptor_projection"));
    for (int c = 0; c < 3; ++c) {
      Eigen::VectorXd v(cfg.descriptor_dim);
      for (int i = 0; i < cfg.descriptor_dim; ++i) v[i] = rng.normal();
      for (int p = 0; p < c; ++p) v -= proj.col(p).dot(v) * proj.col(p);
      proj.col(c) = v.normalized();
    }
  }

  const CameraIntrinsics intr = cfg.intrinsics();
  struct PoseWorld {
    PoseSet cams_world;
    Sim3 pose_change;
    std::vector<Eigen::Vector3d> fwd_obj, up_obj;  // object-relative directions
  };
  std::vector<PoseWorld> worlds(cfg.n_poses);

  for (int k = 0; k < cfg.n_poses; ++k) {
    const std::string pose_name = "pose" + std::to_string(k);
    const std::filesystem::path pose_dir = out_dir / pose_name;
    std::filesystem::create_directories(pose_dir / "images");
    std::filesystem::create_directories(pose_dir / "masks");

    Sim3 move;  // identity for the main pose
    if (k > 0) {
      Rng rng(derive_seed(cfg.seed, "pose_change/" + std::to_string(k)));
      move.scale = 1.0;
      move.rotation = (cfg.flip_pose_change && k == 1)
                          ? Eigen::Quaterniond(Eigen::AngleAxisd(M_PI, Eigen::Vector3d::UnitX()))
                          : random_rotation(rng);
      move.translation = random_in_ball(rng, cfg.pose_trans_frac * ds.diameter);
    }
    const SplatCloud cloud_k = sim3_apply_cloud(move, cloud_main);

    PoseSet cams_world = sample_hemisphere_cameras(
        cfg.views_per_pose, cfg.camera_radius, intr,
        derive_seed(cfg.seed, "cams/" + std::to_string(k)), pose_name + "_");

    DatasetPoseData pd;
    pd.index = k;
    pd.dir = pose_dir;

    // Render captures from the true world poses.
    std::vector<RgbImage> images(cams_world.poses.size());
    std::vector<SilhouetteMask> masks(cams_world.poses.size());
    parallel_for(cams_world.poses.size(), 0, [&](std::size_t i) {
      const CameraPose& cam = cams_world.poses[i];
      images[i] = render_rgb(cloud_k, cam);
      masks[i] = threshold_mask(render_occupancy(cloud_k, cam), 0.5);
    });
    for (std::size_t i = 0; i < cams_world.poses.size(); ++i) {
      const std::string& id = cams_world.poses[i].id;
      const auto img_path = pose_dir / "images" / (id + ".ppm");
      const auto mask_path = pose_dir / "masks" / (id + ".pgm");
      save_ppm(img_path, images[i]);
      save_pgm(mask_path, masks[i]);
      pd.image_paths[id] = img_path;
      pd.mask_paths[id] = mask_path;
    }

    Sim3 gauge;  // identity for the main pose
    if (k > 0) {
      Rng rng(derive_seed(cfg.seed, "gauge/" + std::to_string(k)));
      gauge.scale = rng.uniform(cfg.gauge_scale_min, cfg.gauge_scale_max);
      gauge.rotation = random_rotation(rng);
      gauge.translation = random_in_ball(rng, cfg.gauge_trans_frac * ds.diameter);
    }
    pd.cameras = sim3_apply_set(gauge, cams_world);
    pd.cameras.label = pose_name;
    save_pose_set(pose_dir / "cameras.json", pd.cameras);

    // Descriptors from object-relative viewing directions.
    const Eigen::Vector3d obj_center_world = move.apply(obj_center);
    const Eigen::Matrix3d move_r_inv =
        move.rotation.conjugate().toRotationMatrix();
    PoseWorld& w = worlds[k];
    for (const auto& cam : cams_world.poses) {
      const Eigen::Vector3d dir_world = (cam.center - obj_center_world).normalized();
      const Eigen::Vector3d dir_obj = move_r_inv * dir_world;
      Eigen::VectorXd desc = proj * dir_obj;
      if (cfg.eff_sigma_desc() > 0.0) {
        Rng rng(derive_seed(cfg.seed, "desc/" + cam.id));
        for (int i = 0; i < desc.size(); ++i)
          desc[i] += cfg.eff_sigma_desc() * rng.normal();
      }
      pd.descriptors.entries[cam.id] = desc.normalized();
      w.fwd_obj.push_back(move_r_inv * cam.forward());
      w.up_obj.push_back(move_r_inv * cam.up());
    }
    save_descriptors(pose_dir / "descriptors.json", pd.descriptors);

    w.cams_world = std::move(cams_world);
    w.pose_change = move;

    ds.pose_change.push_back(move);
    ds.gauge.push_back(gauge);
    ds.aux_to_main.push_back(sim3_compose(sim3_invert(move), sim3_invert(gauge)));
    ds.poses.push_back(std::move(pd));
  }

  // Verification oracle: object-relative forward/up gaps for all cross-pose
  // image pairs, with optional angular noise.
  for (int a = 0; a < cfg.n_poses; ++a) {
    for (int b = a + 1; b < cfg.n_poses; ++b) {
      const PoseWorld& wa = worlds[a];
      const PoseWorld& wb = worlds[b];
      for (std::size_t i = 0; i < wa.cams_world.poses.size(); ++i) {
        for (std::size_t j = 0; j < wb.cams_world.poses.size(); ++j) {
          const std::string key = PosePrediction::make_key(
              wa.cams_world.poses[i].id, wb.cams_world.poses[j].id);
          AngleGaps g;
          g.fwd_deg = angle_deg(wa.fwd_obj[i], wb.fwd_obj[j]);
          g.up_deg = angle_deg(wa.up_obj[i], wb.up_obj[j]);
          if (cfg.eff_sigma_angle() > 0.0) {
            Rng rng(derive_seed(cfg.seed, "oracle/" + key));
            g.fwd_deg += cfg.eff_sigma_angle() * rng.normal();
            g.up_deg += cfg.eff_sigma_angle() * rng.normal();
          }
          g.fwd_deg = std::clamp(g.fwd_deg, 0.0, 180.0);
          g.up_deg = std::clamp(g.up_deg, 0.0, 180.0);
          ds.oracle.entries[key] = g;
        }
      }
    }
  }
  save_oracle(gt_dir / "oracle.json", ds.oracle);

  // Ground-truth transforms.
  {
    json poses = json::array();
    for (int k = 0; k < cfg.n_poses; ++k) {
      poses.push_back(json{{"pose", k},
                           {"pose_change", sim3_to_json(ds.pose_change[k])},
                           {"gauge", sim3_to_json(ds.gauge[k])},
                           {"aux_to_main", sim3_to_json(ds.aux_to_main[k])}});
    }
    save_json(gt_dir / "transforms.json",
              json{{"poses", std::move(poses)},
                   {"diameter", ds.diameter},
                   {"object_center",
                    {obj_center.x(), obj_center.y(), obj_center.z()}}});
  }

  for (int k = 0; k < cfg.n_poses; ++k) {
    SplatCloud cloud_k = sim3_apply_cloud(worlds[k].pose_change, cloud_main);
    cloud_k.frame = "pose" + std::to_string(k);
    save_splats(gt_dir / ("splats_pose" + std::to_string(k) + ".json"), cloud_k);
  }

  // The pipeline's starting model. In completion fixtures it is degraded
  // where no main view can see, standing in for a main-pose-trained model.
  ds.model_main = cloud_main;
  ds.model_main.frame = "main";
  if (cfg.paint_bottom_patch) {
    std::vector<double> vis(cloud_main.splats.size(), 0.0);
    std::vector<std::vector<double>> per_view(worlds[0].cams_world.poses.size());
    parallel_for(per_view.size(), 0, [&](std::size_t i) {
      per_view[i] = splat_visibility(cloud_main, worlds[0].cams_world.poses[i]);
    });
    for (const auto& v : per_view)
      for (std::size_t i = 0; i < vis.size(); ++i) vis[i] = std::max(vis[i], v[i]);
    for (std::size_t i = 0; i < vis.size(); ++i)
      if (vis[i] < 0.05)
        ds.model_main.splats[i].color = Eigen::Vector3d(0.5, 0.5, 0.5);
  }
  save_splats(gt_dir / "model_main.json", ds.model_main);
  save_json(gt_dir / "synth_config.json", synth_config_to_json(cfg));
  return ds;
}

Dataset Dataset::load(const std::filesystem::path& root) {
  Dataset ds;
  ds.root = root;
  const auto gt_dir = root / "gt";
  ds.config = synth_config_from_json(load_json(gt_dir / "synth_config.json"));

  const json transforms = load_json(gt_dir / "transforms.json");
  ds.diameter = transforms.at("diameter").get<double>();
  const auto& oc = transforms.at("object_center");
  ds.object_center = Eigen::Vector3d(oc.at(0).get<double>(), oc.at(1).get<double>(),
                                     oc.at(2).get<double>());
  for (const auto& p : transforms.at("poses")) {
    ds.pose_change.push_back(sim3_from_json(p.at("pose_change")));
    ds.gauge.push_back(sim3_from_json(p.at("gauge")));
    ds.aux_to_main.push_back(sim3_from_json(p.at("aux_to_main")));
  }

  for (int k = 0; k < ds.config.n_poses; ++k) {
    const std::string pose_name = "pose" + std::to_string(k);
    DatasetPoseData pd;
    pd.index = k;
    pd.dir = root / pose_name;
    pd.cameras = load_pose_set(pd.dir / "cameras.json");
    pd.descriptors = load_descriptors(pd.dir / "descriptors.json");
    for (const auto& cam : pd.cameras.poses) {
      pd.image_paths[cam.id] = pd.dir / "images" / (cam.id + ".ppm");
      pd.mask_paths[cam.id] = pd.dir / "masks" / (cam.id + ".pgm");
    }
    ds.poses.push_back(std::move(pd));
  }
  ds.oracle = load_oracle(gt_dir / "oracle.json");
  ds.model_main = load_splats(gt_dir / "model_main.json", "main");
  return ds;
}

PoseSet Dataset::gt_aligned(int pose_index) const {
  PoseSet out = sim3_apply_set(aux_to_main.at(pose_index),
                               poses.at(pose_index).cameras);
  out.label = "gt_pose" + std::to_string(pose_index);
  return out;
}

SynthConfig synth_config_from_toml(const TomlTable& t) {
  SynthConfig c;
  c.seed = static_cast<std::uint64_t>(t.get_int("synth.seed", 1));
  c.n_splats = static_cast<int>(t.get_int("synth.n_splats", c.n_splats));
  c.views_per_pose =
      static_cast<int>(t.get_int("synth.views_per_pose", c.views_per_pose));
  c.n_poses = static_cast<int>(t.get_int("synth.n_poses", c.n_poses));
  c.camera_radius = t.get_double("synth.camera_radius", c.camera_radius);
  c.fov_deg = t.get_double("synth.fov_deg", c.fov_deg);
  c.image_size = static_cast<int>(t.get_int("synth.image_size", c.image_size));
  c.gauge_scale_min = t.get_double("synth.gauge_scale_min", c.gauge_scale_min);
  c.gauge_scale_max = t.get_double("synth.gauge_scale_max", c.gauge_scale_max);
  c.gauge_trans_frac = t.get_double("synth.gauge_trans_frac", c.gauge_trans_frac);
  c.pose_trans_frac = t.get_double("synth.pose_trans_frac", c.pose_trans_frac);
  c.flip_pose_change = t.get_bool("synth.flip_pose_change", c.flip_pose_change);
  c.descriptor_dim =
      static_cast<int>(t.get_int("synth.descriptor_dim", c.descriptor_dim));
  c.sigma_desc = t.get_double("synth.sigma_desc", c.sigma_desc);
  c.sigma_angle_deg = t.get_double("synth.sigma_angle_deg", c.sigma_angle_deg);
  c.predictor_base_deg =
      t.get_double("synth.predictor_base_deg", c.predictor_base_deg);
  c.predictor_gain = t.get_double("synth.predictor_gain", c.predictor_gain);
  c.predictor_quad_deg =
      t.get_double("synth.predictor_quad_deg", c.predictor_quad_deg);
  c.predictor_axis_jitter =
      t.get_double("synth.predictor_axis_jitter", c.predictor_axis_jitter);
  c.noiseless = t.get_bool("synth.noiseless", c.noiseless);
  c.paint_bottom_patch =
      t.get_bool("synth.paint_bottom_patch", c.paint_bottom_patch);
  return c;
}

PoseSet predict_mixed_cameras(const Dataset& dataset,
                              const std::vector<std::string>& main_ids,
                              const std::vector<std::string>& aux_ids,
                              std::uint64_t run_seed) {
  struct Entry {
    std::string id;
    bool is_main = false;
    CameraPose gt_pose;  // main frame
    Eigen::Vector3d view_dir;
  };

  auto locate = [&](const std::string& id) -> Entry {
    for (std::size_t k = 0; k < dataset.poses.size(); ++k) {
      const CameraPose* p = dataset.poses[k].cameras.find(id);
      if (!p) continue;
      Entry e;
      e.id = id;
      e.gt_pose = sim3_apply_pose(dataset.aux_to_main[k], *p);
      e.view_dir = (e.gt_pose.center - dataset.object_center).normalized();
      return e;
    }
    throw PreconditionError("predict_mixed_cameras: unknown image id " + id);
  };

  std::vector<Entry> entries;
  for (const auto& id : main_ids) {
    Entry e = locate(id);
    e.is_main = true;
    entries.push_back(std::move(e));
  }
  for (const auto& id : aux_ids) entries.push_back(locate(id));

  // Cross-session nearest view gap drives the error magnitude.
  std::vector<double> gap(entries.size(), 0.0);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    double best = 180.0;
    for (std::size_t j = 0; j < entries.size(); ++j) {
      if (entries[i].is_main == entries[j].is_main) continue;
      best = std::min(best, angle_deg(entries[i].view_dir, entries[j].view_dir));
    }
    gap[i] = best;
  }

  const SynthConfig& cfg = dataset.config;
  std::string id_blob;
  {
    std::vector<std::string> sorted;
    for (const auto& e : entries) sorted.push_back(e.id);
    std::sort(sorted.begin(), sorted.end());
    for (const auto& id : sorted) id_blob += id + ",";
  }
  Rng set_rng(derive_seed(derive_seed(cfg.seed, "predictor/" + id_blob),
                          "run/" + std::to_string(run_seed)));
  const Eigen::Vector3d axis_rot = random_unit_vector(set_rng);
  const Eigen::Vector3d axis_trans = random_unit_vector(set_rng);

  PoseSet predicted;
  predicted.label = "mixed";
  const bool noisy = cfg.eff_predictor_base() > 0.0 || cfg.eff_predictor_gain() > 0.0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    CameraPose cam = entries[i].gt_pose;
    if (noisy) {
      Rng rng(derive_seed(cfg.seed, "predictor_cam/" + entries[i].id + "/" +
                                        std::to_string(run_seed)));
      const double m_deg =
          cfg.eff_predictor_base() +
          cfg.eff_predictor_gain() * gap[i] * (1.0 + gap[i] / cfg.predictor_quad_deg);
      const double m_rad = m_deg * kDegToRad * (0.7 + 0.6 * rng.uniform());
      const Eigen::Vector3d rot_axis =
          (axis_rot + cfg.predictor_axis_jitter * random_unit_vector(rng)).normalized();
      cam.rotation =
          (Eigen::Quaterniond(Eigen::AngleAxisd(m_rad, rot_axis)) * cam.rotation)
              .normalized();
      const double dist = (cam.center - dataset.object_center).norm();
      const Eigen::Vector3d trans_dir =
          (axis_trans + cfg.predictor_axis_jitter * random_unit_vector(rng)).normalized();
      cam.center += m_rad * dist * (0.7 + 0.6 * rng.uniform()) * trans_dir;
    }
    predicted.poses.push_back(std::move(cam));
  }

  // The foundation model's output frame is arbitrary.
  Sim3 frame;
  frame.scale = set_rng.uniform(cfg.gauge_scale_min, cfg.gauge_scale_max);
  frame.rotation = random_rotation(set_rng);
  frame.translation = random_in_ball(set_rng, 0.5 * dataset.diameter);
  PoseSet out = sim3_apply_set(frame, predicted);
  out.label = "mixed";
  return out;
}

}  // namespace posefuse
