#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "posefuse/geometry.hpp"
#include "posefuse/image.hpp"
#include "posefuse/selection.hpp"
#include "posefuse/splat.hpp"

#include <nlohmann/json_fwd.hpp>

namespace posefuse {

// Pose file: {"label": ..., "cameras": [{"id","q":[w,x,y,z],"c":[x,y,z],
//             "fx","fy","cx","cy","w","h"}, ...]}
PoseSet load_pose_set(const std::filesystem::path& path);
void save_pose_set(const std::filesystem::path& path, const PoseSet& set);
nlohmann::json pose_set_to_json(const PoseSet& set);
PoseSet pose_set_from_json(const nlohmann::json& j);

// Splat cloud file: JSON array of {"p":[x,y,z],"sigma":s,"rgb":[r,g,b],"alpha":a}.
SplatCloud load_splats(const std::filesystem::path& path,
                       const std::string& frame = "");
void save_splats(const std::filesystem::path& path, const SplatCloud& cloud);

// Descriptor file: JSON map id -> float array.
DescriptorSet load_descriptors(const std::filesystem::path& path);
void save_descriptors(const std::filesystem::path& path, const DescriptorSet& set);

// Oracle file: JSON map "idA|idB" -> {"fwd_deg": f, "up_deg": u}.
PosePrediction load_oracle(const std::filesystem::path& path);
void save_oracle(const std::filesystem::path& path, const PosePrediction& oracle);

// Masks: binary PGM (P5), 0 background / 255 foreground.
SilhouetteMask load_pgm(const std::filesystem::path& path);
void save_pgm(const std::filesystem::path& path, const SilhouetteMask& mask);

// Images: binary PPM (P6), 8 bits per channel.
RgbImage load_ppm(const std::filesystem::path& path);
void save_ppm(const std::filesystem::path& path, const RgbImage& img);

nlohmann::json sim3_to_json(const Sim3& t);
Sim3 sim3_from_json(const nlohmann::json& j);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);
nlohmann::json load_json(const std::filesystem::path& path);
void save_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace posefuse
