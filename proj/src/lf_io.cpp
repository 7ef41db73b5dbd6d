#include "lfdf/lf_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace fs = std::filesystem;

namespace lfdf::io {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::string view_name(int u, int v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "view_%02d_%02d.png", u, v);
    return buf;
}

}  // namespace

Tensor read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("read_png: cannot open " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("read_png: decode failure in " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);

    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const int channels = static_cast<int>(png_get_channels(png, info));
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("read_png: unsupported channel count in " + path);
    }

    std::vector<png_byte> row(static_cast<std::size_t>(width) * channels);
    Tensor img({height, width, channels});
    for (int y = 0; y < height; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(y, x, c) = row[static_cast<std::size_t>(x) * channels + c] / 255.0;
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png(const std::string& path, const Tensor& img) {
    if (img.shape().size() != 3 || (img.dim(2) != 1 && img.dim(2) != 3))
        throw std::invalid_argument("write_png: expected [H,W,1] or [H,W,3]");
    const int height = img.dim(0), width = img.dim(1), channels = img.dim(2);

    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("write_png: cannot open " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("write_png: encode failure in " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
                 8, channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<png_byte> row(static_cast<std::size_t>(width) * channels);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < channels; ++c) {
                const double v = std::clamp(img.at(y, x, c), 0.0, 1.0);
                row[static_cast<std::size_t>(x) * channels + c] =
                    static_cast<png_byte>(std::lround(v * 255.0));
            }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

nlohmann::json SceneMeta::to_json() const {
    nlohmann::json j{{"angular_res", angular_res},
                     {"spatial_res", spatial_res},
                     {"baseline_mult", baseline_mult},
                     {"color_space", color_space}};
    if (disparity_range)
        j["disparity_range"] = {disparity_range->first, disparity_range->second};
    else
        j["disparity_range"] = nullptr;
    return j;
}

SceneMeta SceneMeta::from_json(const nlohmann::json& j) {
    SceneMeta m;
    m.angular_res = j.at("angular_res").get<std::vector<int>>();
    m.spatial_res = j.at("spatial_res").get<std::vector<int>>();
    m.baseline_mult = j.value("baseline_mult", 0);
    m.color_space = j.value("color_space", "rgb");
    if (j.contains("disparity_range") && !j.at("disparity_range").is_null()) {
        auto r = j.at("disparity_range").get<std::vector<double>>();
        m.disparity_range = std::make_pair(r.at(0), r.at(1));
    }
    return m;
}

void save_scene(const std::string& dir, const LightField& lf, const SceneMeta& meta,
                const Tensor* disparity) {
    fs::create_directories(dir);
    for (int u = 0; u < lf.views_u(); ++u)
        for (int v = 0; v < lf.views_v(); ++v)
            write_png((fs::path(dir) / view_name(u, v)).string(), lf.view(u, v));
    write_text((fs::path(dir) / "meta.json").string(), meta.to_json().dump(2) + "\n");
    if (disparity) {
        if (disparity->shape().size() != 2)
            throw std::invalid_argument("save_scene: disparity must be [H,W]");
        std::ofstream f(fs::path(dir) / "disparity.f32", std::ios::binary);
        for (std::int64_t i = 0; i < disparity->numel(); ++i) {
            const float x = static_cast<float>((*disparity)[i]);
            f.write(reinterpret_cast<const char*>(&x), sizeof x);
        }
        if (!f) throw std::runtime_error("save_scene: disparity write failed in " + dir);
    }
}

LightField load_scene(const std::string& dir, SceneMeta* meta_out) {
    SceneMeta meta = SceneMeta::from_json(
        nlohmann::json::parse(read_text((fs::path(dir) / "meta.json").string())));
    const int U = meta.angular_res.at(0), V = meta.angular_res.at(1);
    Tensor first = read_png((fs::path(dir) / view_name(0, 0)).string());
    const int H = first.dim(0), W = first.dim(1), C = first.dim(2);
    LightField lf(Tensor({U, V, H, W, C}),
                  meta.color_space == "y" ? ColorSpace::Y : ColorSpace::RGB);
    lf.set_view(0, 0, first);
    for (int u = 0; u < U; ++u)
        for (int v = 0; v < V; ++v) {
            if (u == 0 && v == 0) continue;
            Tensor img = read_png((fs::path(dir) / view_name(u, v)).string());
            if (img.dim(0) != H || img.dim(1) != W || img.dim(2) != C)
                throw std::runtime_error("load_scene: inconsistent view shapes in " + dir);
            lf.set_view(u, v, img);
        }
    if (meta_out) *meta_out = meta;
    return lf;
}

Tensor load_disparity(const std::string& dir) {
    SceneMeta meta = SceneMeta::from_json(
        nlohmann::json::parse(read_text((fs::path(dir) / "meta.json").string())));
    const int H = meta.spatial_res.at(0), W = meta.spatial_res.at(1);
    std::ifstream f(fs::path(dir) / "disparity.f32", std::ios::binary);
    if (!f) throw std::runtime_error("load_disparity: missing disparity.f32 in " + dir);
    Tensor d({H, W});
    for (std::int64_t i = 0; i < d.numel(); ++i) {
        float x = 0.0f;
        f.read(reinterpret_cast<char*>(&x), sizeof x);
        d[i] = x;
    }
    if (!f) throw std::runtime_error("load_disparity: truncated disparity.f32 in " + dir);
    return d;
}

bool has_disparity(const std::string& dir) {
    return fs::exists(fs::path(dir) / "disparity.f32");
}

std::vector<std::string> list_scenes(const std::string& root) {
    std::vector<std::string> out;
    if (!fs::is_directory(root)) return out;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory() && fs::exists(e.path() / "meta.json"))
            out.push_back(e.path().string());
    std::sort(out.begin(), out.end());
    return out;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) throw std::runtime_error("write_text: failed for " + path);
}

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("read_text: cannot open " + path);
    std::string s((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return s;
}

}  // namespace lfdf::io
