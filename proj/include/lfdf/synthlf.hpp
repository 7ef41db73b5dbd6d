#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lfdf/lightfield.hpp"

namespace lfdf::synth {

struct TextureSpec {
    enum class Kind { noise, checker, gradient, image };
    Kind kind = Kind::noise;
    double scale = 8.0;      // feature size in pixels
    std::uint64_t salt = 0;  // mixed into the scene seed
    std::string path;        // image kind only

    nlohmann::json to_json() const;
    static TextureSpec from_json(const nlohmann::json& j);
};

struct MaskSpec {
    enum class Kind { full, rect, disk };
    Kind kind = Kind::full;
    double y0 = 0, x0 = 0, h = 0, w = 0;  // rect
    double cy = 0, cx = 0, r = 0;         // disk

    bool covers(double y, double x) const;

    nlohmann::json to_json() const;
    static MaskSpec from_json(const nlohmann::json& j);
};

struct Layer {
    double depth = 1.0;  // scene units, > 0
    TextureSpec texture;
    MaskSpec mask;
};

// A stack of fronto-parallel textured planes, ordered far to near. Rendered
// with a concentric camera array: the center view never moves, side views
// shift each layer by baseline_mult * unit_disparity / depth pixels per
// angular step.
struct SceneSpec {
    int angular = 5;
    int height = 64, width = 64;
    double unit_disparity = 1.0;
    std::uint64_t seed = 0;
    std::vector<Layer> layers;

    void validate() const;

    nlohmann::json to_json() const;
    static SceneSpec from_json(const nlohmann::json& j);
};

// Center-view ground truth, pixels of shift per unit angular step.
struct DisparityMap {
    Tensor data;  // [H, W]
};

struct RenderResult {
    LightField lf;  // RGB in [0,1]
    DisparityMap disparity;
};

RenderResult render(const SceneSpec& scene, int baseline_mult);

// (min, max) of the center-visible layer disparities; linear in baseline_mult.
std::pair<double, double> disparity_range(const SceneSpec& scene, int baseline_mult);

// Epipolar-plane image: row slices fix (u, h) and span (v, w); col slices fix
// (v, w) and span (u, h). Result is [A, len, C].
enum class EpiAxis { row, col };
Tensor epi_extract(const LightField& lf, EpiAxis axis, int spatial_index, int angular_index);

// Dominant motion slope of an EPI in pixels per view, from shift matching of
// each angular row against the central one (wraparound sampling).
double estimate_epi_slope(const Tensor& epi);

// A reproducible multi-layer scene: full-coverage background plus n_layers-1
// nearer objects with random masks and textures.
SceneSpec random_scene(std::uint64_t seed, int angular, int h, int w, int n_layers);

}  // namespace lfdf::synth
