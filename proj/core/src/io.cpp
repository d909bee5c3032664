#include "posefuse/io.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

namespace posefuse {

using nlohmann::json;

namespace {

std::ifstream open_in(const std::filesystem::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace

json load_json(const std::filesystem::path& path) {
  auto in = open_in(path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return j;
}

void save_json(const std::filesystem::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(1, '\t') << '\n';
}

PoseSet pose_set_from_json(const json& j) {
  PoseSet set;
  set.label = j.at("label").get<std::string>();
  for (const auto& c : j.at("cameras")) {
    CameraPose p;
    p.id = c.at("id").get<std::string>();
    const auto& q = c.at("q");
    p.rotation = Eigen::Quaterniond(q.at(0).get<double>(), q.at(1).get<double>(),
                                    q.at(2).get<double>(), q.at(3).get<double>());
    const auto& ctr = c.at("c");
    p.center = Eigen::Vector3d(ctr.at(0).get<double>(), ctr.at(1).get<double>(),
                               ctr.at(2).get<double>());
    p.intrinsics.fx = c.at("fx").get<double>();
    p.intrinsics.fy = c.at("fy").get<double>();
    p.intrinsics.cx = c.at("cx").get<double>();
    p.intrinsics.cy = c.at("cy").get<double>();
    p.intrinsics.width = c.at("w").get<int>();
    p.intrinsics.height = c.at("h").get<int>();
    set.poses.push_back(std::move(p));
  }
  return set;
}

json pose_set_to_json(const PoseSet& set) {
  json cameras = json::array();
  for (const auto& p : set.poses) {
    json c;
    c["id"] = p.id;
    c["q"] = {p.rotation.w(), p.rotation.x(), p.rotation.y(), p.rotation.z()};
    c["c"] = {p.center.x(), p.center.y(), p.center.z()};
    c["fx"] = p.intrinsics.fx;
    c["fy"] = p.intrinsics.fy;
    c["cx"] = p.intrinsics.cx;
    c["cy"] = p.intrinsics.cy;
    c["w"] = p.intrinsics.width;
    c["h"] = p.intrinsics.height;
    cameras.push_back(std::move(c));
  }
  return json{{"label", set.label}, {"cameras", std::move(cameras)}};
}

PoseSet load_pose_set(const std::filesystem::path& path) {
  const json j = load_json(path);
  PoseSet set;
  try {
    set = pose_set_from_json(j);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  set.validate();
  return set;
}

void save_pose_set(const std::filesystem::path& path, const PoseSet& set) {
  save_json(path, pose_set_to_json(set));
}

SplatCloud load_splats(const std::filesystem::path& path, const std::string& frame) {
  const json j = load_json(path);
  SplatCloud cloud;
  cloud.frame = frame;
  try {
    for (const auto& e : j) {
      Splat s;
      const auto& p = e.at("p");
      s.position = Eigen::Vector3d(p.at(0).get<double>(), p.at(1).get<double>(),
                                   p.at(2).get<double>());
      s.sigma = e.at("sigma").get<double>();
      const auto& rgb = e.at("rgb");
      s.color = Eigen::Vector3d(rgb.at(0).get<double>(), rgb.at(1).get<double>(),
                                rgb.at(2).get<double>());
      s.opacity = e.at("alpha").get<double>();
      cloud.splats.push_back(s);
    }
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return cloud;
}

void save_splats(const std::filesystem::path& path, const SplatCloud& cloud) {
  json arr = json::array();
  for (const auto& s : cloud.splats) {
    arr.push_back(json{{"p", {s.position.x(), s.position.y(), s.position.z()}},
                       {"sigma", s.sigma},
                       {"rgb", {s.color.x(), s.color.y(), s.color.z()}},
                       {"alpha", s.opacity}});
  }
  save_json(path, arr);
}

DescriptorSet load_descriptors(const std::filesystem::path& path) {
  const json j = load_json(path);
  DescriptorSet set;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      Eigen::VectorXd v(it.value().size());
      Eigen::Index i = 0;
      for (const auto& x : it.value()) v[i++] = x.get<double>();
      set.entries[it.key()] = std::move(v);
    }
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return set;
}

void save_descriptors(const std::filesystem::path& path, const DescriptorSet& set) {
  json j = json::object();
  for (const auto& [id, v] : set.entries) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    j[id] = std::move(arr);
  }
  save_json(path, j);
}

PosePrediction load_oracle(const std::filesystem::path& path) {
  const json j = load_json(path);
  PosePrediction oracle;
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      AngleGaps g;
      g.fwd_deg = it.value().at("fwd_deg").get<double>();
      g.up_deg = it.value().at("up_deg").get<double>();
      oracle.entries[it.key()] = g;
    }
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  return oracle;
}

void save_oracle(const std::filesystem::path& path, const PosePrediction& oracle) {
  json j = json::object();
  for (const auto& [key, g] : oracle.entries)
    j[key] = json{{"fwd_deg", g.fwd_deg}, {"up_deg", g.up_deg}};
  save_json(path, j);
}

namespace {

// Reads a PNM header token, skipping whitespace and '#' comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  return tok;
}

}  // namespace

SilhouetteMask load_pgm(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  if (pnm_token(in) != "P5") throw IoError(path.string() + ": not a binary PGM");
  const int w = std::stoi(pnm_token(in));
  const int h = std::stoi(pnm_token(in));
  const int maxval = std::stoi(pnm_token(in));
  if (maxval != 255) throw IoError(path.string() + ": unsupported maxval");
  SilhouetteMask mask(w, h);
  std::vector<unsigned char> row(static_cast<std::size_t>(w));
  for (int y = 0; y < h; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), w);
    if (!in) throw IoError(path.string() + ": truncated pixel data");
    for (int x = 0; x < w; ++x) mask.at(x, y) = row[x] >= 128 ? 1 : 0;
  }
  return mask;
}

void save_pgm(const std::filesystem::path& path, const SilhouetteMask& mask) {
  auto out = open_out(path, true);
  out << "P5\n" << mask.width << " " << mask.height << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(mask.width));
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) row[x] = mask.at(x, y) ? 255 : 0;
    out.write(reinterpret_cast<const char*>(row.data()), mask.width);
  }
}

RgbImage load_ppm(const std::filesystem::path& path) {
  auto in = open_in(path, true);
  if (pnm_token(in) != "P6") throw IoError(path.string() + ": not a binary PPM");
  const int w = std::stoi(pnm_token(in));
  const int h = std::stoi(pnm_token(in));
  const int maxval = std::stoi(pnm_token(in));
  if (maxval != 255) throw IoError(path.string() + ": unsupported maxval");
  RgbImage img(w, h);
  std::vector<unsigned char> row(3 * static_cast<std::size_t>(w));
  for (int y = 0; y < h; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), 3 * w);
    if (!in) throw IoError(path.string() + ": truncated pixel data");
    for (int x = 0; x < 3 * w; ++x)
      img.pixels[3 * static_cast<std::size_t>(y) * w + x] = row[x] / 255.0;
  }
  return img;
}

void save_ppm(const std::filesystem::path& path, const RgbImage& img) {
  auto out = open_out(path, true);
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> row(3 * static_cast<std::size_t>(img.width));
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < 3 * img.width; ++x) {
      const double v = img.pixels[3 * static_cast<std::size_t>(y) * img.width + x];
      row[x] = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }
    out.write(reinterpret_cast<const char*>(row.data()), 3 * img.width);
  }
}

json sim3_to_json(const Sim3& t) {
  return json{{"s", t.scale},
              {"q", {t.rotation.w(), t.rotation.x(), t.rotation.y(), t.rotation.z()}},
              {"t", {t.translation.x(), t.translation.y(), t.translation.z()}}};
}

Sim3 sim3_from_json(const json& j) {
  Sim3 t;
  t.scale = j.at("s").get<double>();
  const auto& q = j.at("q");
  t.rotation = Eigen::Quaterniond(q.at(0).get<double>(), q.at(1).get<double>(),
                                  q.at(2).get<double>(), q.at(3).get<double>());
  const auto& tr = j.at("t");
  t.translation = Eigen::Vector3d(tr.at(0).get<double>(), tr.at(1).get<double>(),
                                  tr.at(2).get<double>());
  return t;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

std::string read_text_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  return std::string(std::istreambuf_iterator<char>(in),
                     std::istreambuf_iterator<char>());
}

}  // namespace posefuse
