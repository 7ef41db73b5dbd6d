#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lfdf/lightfield.hpp"

namespace lfdf::io {

// 8-bit PNG, gray or RGB, mapped to [0,1] doubles shaped [H, W, C].
Tensor read_png(const std::string& path);
void write_png(const std::string& path, const Tensor& img);

struct SceneMeta {
    std::vector<int> angular_res;  // [U, V]
    std::vector<int> spatial_res;  // [H, W]
    int baseline_mult = 0;
    std::optional<std::pair<double, double>> disparity_range;
    std::string color_space = "rgb";

    nlohmann::json to_json() const;
    static SceneMeta from_json(const nlohmann::json& j);
};

// One scene directory: view_UU_VV.png per view (row-major, zero-padded),
// meta.json, and optionally disparity.f32 (row-major little-endian floats).
void save_scene(const std::string& dir, const LightField& lf, const SceneMeta& meta,
                const Tensor* disparity = nullptr);
LightField load_scene(const std::string& dir, SceneMeta* meta_out = nullptr);
Tensor load_disparity(const std::string& dir);
bool has_disparity(const std::string& dir);

// Scene subdirectories (those holding a meta.json), sorted by name.
std::vector<std::string> list_scenes(const std::string& root);

// Small helpers shared by tools.
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

}  // namespace lfdf::io
