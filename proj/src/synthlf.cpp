#include "lfdf/synthlf.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "lfdf/lf_io.hpp"

namespace lfdf::synth {

namespace {

const char* texture_kind_name(TextureSpec::Kind k) {
    switch (k) {
        case TextureSpec::Kind::noise: return "noise";
        case TextureSpec::Kind::checker: return "checker";
        case TextureSpec::Kind::gradient: return "gradient";
        case TextureSpec::Kind::image: return "image";
    }
    return "noise";
}

TextureSpec::Kind texture_kind_from(const std::string& s) {
    if (s == "noise") return TextureSpec::Kind::noise;
    if (s == "checker") return TextureSpec::Kind::checker;
    if (s == "gradient") return TextureSpec::Kind::gradient;
    if (s == "image") return TextureSpec::Kind::image;
    throw std::invalid_argument("unknown texture kind: " + s);
}

const char* mask_kind_name(MaskSpec::Kind k) {
    switch (k) {
        case MaskSpec::Kind::full: return "full";
        case MaskSpec::Kind::rect: return "rect";
        case MaskSpec::Kind::disk: return "disk";
    }
    return "full";
}

MaskSpec::Kind mask_kind_from(const std::string& s) {
    if (s == "full") return MaskSpec::Kind::full;
    if (s == "rect") return MaskSpec::Kind::rect;
    if (s == "disk") return MaskSpec::Kind::disk;
    throw std::invalid_argument("unknown mask kind: " + s);
}

int wrap_index(int i, int n) {
    const int m = i % n;
    return m < 0 ? m + n : m;
}

// bilinear read with toroidal wraparound
void sample_wrap(const Tensor& tex, double y, double x, double* out) {
    const int H = tex.dim(0), W = tex.dim(1), C = tex.dim(2);
    const double fy = std::floor(y), fx = std::floor(x);
    const int y0 = wrap_index(static_cast<int>(fy), H);
    const int x0 = wrap_index(static_cast<int>(fx), W);
    const int y1 = (y0 + 1) % H, x1 = (x0 + 1) % W;
    const double ty = y - fy, tx = x - fx;
    for (int c = 0; c < C; ++c) {
        const double top = (1.0 - tx) * tex.at(y0, x0, c) + tx * tex.at(y0, x1, c);
        const double bot = (1.0 - tx) * tex.at(y1, x0, c) + tx * tex.at(y1, x1, c);
        out[c] = (1.0 - ty) * top + ty * bot;
    }
}

Tensor bake_noise(Rng& rng, int h, int w, double scale) {
    const int ly = std::max(1, static_cast<int>(std::lround(h / std::max(1.0, scale))));
    const int lx = std::max(1, static_cast<int>(std::lround(w / std::max(1.0, scale))));
    Tensor lattice({ly, lx, 3});
    rng.fill_uniform(lattice, 0.0, 1.0);
    Tensor fine({ly * 4, lx * 4, 3});
    rng.fill_uniform(fine, 0.0, 1.0);
    Tensor tex({h, w, 3});
    double a[3], b[3];
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            sample_wrap(lattice, y * static_cast<double>(ly) / h,
                        x * static_cast<double>(lx) / w, a);
            sample_wrap(fine, y * static_cast<double>(ly * 4) / h,
                        x * static_cast<double>(lx * 4) / w, b);
            for (int c = 0; c < 3; ++c)
                tex.at(y, x, c) = 0.75 * a[c] + 0.25 * b[c];
        }
    return tex;
}

Tensor bake_checker(Rng& rng, int h, int w, double scale) {
    const int cell = std::max(1, static_cast<int>(std::lround(scale)));
    double c0[3], c1[3];
    for (int c = 0; c < 3; ++c) {
        c0[c] = rng.uniform(0.05, 0.95);
        c1[c] = rng.uniform(0.05, 0.95);
    }
    Tensor tex({h, w, 3});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const bool odd = ((y / cell) + (x / cell)) % 2 != 0;
            for (int c = 0; c < 3; ++c) tex.at(y, x, c) = odd ? c1[c] : c0[c];
        }
    return tex;
}

Tensor bake_gradient(Rng& rng, int h, int w, double scale) {
    const int py = std::max(1, static_cast<int>(std::lround(h / std::max(2.0, 4.0 * scale))));
    const int px = std::max(1, static_cast<int>(std::lround(w / std::max(2.0, 4.0 * scale))));
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    double c0[3], c1[3];
    for (int c = 0; c < 3; ++c) {
        c0[c] = rng.uniform(0.05, 0.95);
        c1[c] = rng.uniform(0.05, 0.95);
    }
    Tensor tex({h, w, 3});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double t = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi *
                                                      (static_cast<double>(py) * y / h +
                                                       static_cast<double>(px) * x / w) +
                                                  phase);
            for (int c = 0; c < 3; ++c) tex.at(y, x, c) = (1.0 - t) * c0[c] + t * c1[c];
        }
    return tex;
}

Tensor to_rgb(const Tensor& img) {
    if (img.dim(2) == 3) return img;
    Tensor out({img.dim(0), img.dim(1), 3});
    for (int y = 0; y < img.dim(0); ++y)
        for (int x = 0; x < img.dim(1); ++x)
            for (int c = 0; c < 3; ++c) out.at(y, x, c) = img.at(y, x, 0);
    return out;
}

Tensor bake_texture(const TextureSpec& spec, std::uint64_t scene_seed, int h, int w) {
    Rng rng(Rng::mix(scene_seed, spec.salt));
    switch (spec.kind) {
        case TextureSpec::Kind::noise: return bake_noise(rng, h, w, spec.scale);
        case TextureSpec::Kind::checker: return bake_checker(rng, h, w, spec.scale);
        case TextureSpec::Kind::gradient: return bake_gradient(rng, h, w, spec.scale);
        case TextureSpec::Kind::image: return to_rgb(io::read_png(spec.path));
    }
    throw std::logic_error("bake_texture: unreachable");
}

// Disparity of the nearest layer covering each center-view pixel.
Tensor center_disparity(const SceneSpec& scene, int baseline_mult) {
    Tensor d({scene.height, scene.width});
    for (int h = 0; h < scene.height; ++h)
        for (int w = 0; w < scene.width; ++w)
            for (const Layer& l : scene.layers)
                if (l.mask.covers(h, w))
                    d.at(h, w) = baseline_mult * scene.unit_disparity / l.depth;
    return d;
}

}  // namespace

bool MaskSpec::covers(double y, double x) const {
    switch (kind) {
        case Kind::full: return true;
        case Kind::rect: return y >= y0 && y < y0 + h && x >= x0 && x < x0 + w;
        case Kind::disk: {
            const double dy = y - cy, dx = x - cx;
            return dy * dy + dx * dx <= r * r;
        }
    }
    return false;
}

nlohmann::json TextureSpec::to_json() const {
    nlohmann::json j{{"kind", texture_kind_name(kind)}, {"scale", scale}, {"salt", salt}};
    if (kind == Kind::image) j["path"] = path;
    return j;
}

TextureSpec TextureSpec::from_json(const nlohmann::json& j) {
    TextureSpec s;
    s.kind = texture_kind_from(j.value("kind", "noise"));
    s.scale = j.value("scale", s.scale);
    s.salt = j.value("salt", s.salt);
    s.path = j.value("path", s.path);
    return s;
}

nlohmann::json MaskSpec::to_json() const {
    switch (kind) {
        case Kind::full: return {{"kind", "full"}};
        case Kind::rect:
            return {{"kind", "rect"}, {"y0", y0}, {"x0", x0}, {"h", h}, {"w", w}};
        case Kind::disk: return {{"kind", "disk"}, {"cy", cy}, {"cx", cx}, {"r", r}};
    }
    return {{"kind", "full"}};
}

MaskSpec MaskSpec::from_json(const nlohmann::json& j) {
    MaskSpec m;
    m.kind = mask_kind_from(j.value("kind", "full"));
    m.y0 = j.value("y0", 0.0);
    m.x0 = j.value("x0", 0.0);
    m.h = j.value("h", 0.0);
    m.w = j.value("w", 0.0);
    m.cy = j.value("cy", 0.0);
    m.cx = j.value("cx", 0.0);
    m.r = j.value("r", 0.0);
    return m;
}

void SceneSpec::validate() const {
    if (angular < 1 || angular % 2 == 0)
        throw std::invalid_argument("SceneSpec: angular must be odd and positive");
    if (height < 1 || width < 1) throw std::invalid_argument("SceneSpec: empty frame");
    if (layers.empty()) throw std::invalid_argument("SceneSpec: no layers");
    if (layers.front().mask.kind != MaskSpec::Kind::full)
        throw std::invalid_argument("SceneSpec: the farthest layer must cover the frame");
    double prev = std::numeric_limits<double>::infinity();
    for (const Layer& l : layers) {
        if (!(l.depth > 0.0)) throw std::invalid_argument("SceneSpec: nonpositive depth");
        if (!(l.depth < prev))
            throw std::invalid_argument("SceneSpec: layers must be ordered far to near");
        prev = l.depth;
    }
    if (!(unit_disparity >= 0.0))
        throw std::invalid_argument("SceneSpec: negative unit disparity");
}

nlohmann::json SceneSpec::to_json() const {
    nlohmann::json ls = nlohmann::json::array();
    for (const Layer& l : layers)
        ls.push_back({{"depth", l.depth},
                      {"texture", l.texture.to_json()},
                      {"mask", l.mask.to_json()}});
    return {{"angular", angular},
            {"height", height},
            {"width", width},
            {"unit_disparity", unit_disparity},
            {"seed", seed},
            {"layers", ls}};
}

SceneSpec SceneSpec::from_json(const nlohmann::json& j) {
    SceneSpec s;
    s.angular = j.value("angular", s.angular);
    s.height = j.value("height", s.height);
    s.width = j.value("width", s.width);
    s.unit_disparity = j.value("unit_disparity", s.unit_disparity);
    s.seed = j.value("seed", s.seed);
    for (const auto& lj : j.at("layers")) {
        Layer l;
        l.depth = lj.at("depth").get<double>();
        l.texture = TextureSpec::from_json(lj.at("texture"));
        l.mask = MaskSpec::from_json(lj.at("mask"));
        s.layers.push_back(std::move(l));
    }
    s.validate();
    return s;
}

RenderResult render(const SceneSpec& scene, int baseline_mult) {
    scene.validate();
    if (baseline_mult < 0) throw std::invalid_argument("render: negative baseline_mult");
    const int A = scene.angular, H = scene.height, W = scene.width;
    const int ac = A / 2;

    std::vector<Tensor> textures;
    std::vector<double> disp;
    textures.reserve(scene.layers.size());
    for (const Layer& l : scene.layers) {
        textures.push_back(bake_texture(l.texture, scene.seed, H, W));
        disp.push_back(baseline_mult * scene.unit_disparity / l.depth);
    }

    RenderResult out;
    out.lf = LightField(Tensor({A, A, H, W, 3}), ColorSpace::RGB);
    double px[3];
    for (int u = 0; u < A; ++u)
        for (int v = 0; v < A; ++v) {
            const double du = u - ac, dv = v - ac;
            for (int h = 0; h < H; ++h)
                for (int w = 0; w < W; ++w) {
                    // near layers painted last win
                    for (std::size_t li = 0; li < scene.layers.size(); ++li) {
                        const double ty = h - disp[li] * du;
                        const double tx = w - disp[li] * dv;
                        if (!scene.layers[li].mask.covers(ty, tx)) continue;
                        sample_wrap(textures[li], ty, tx, px);
                        for (int c = 0; c < 3; ++c) out.lf.data.at(u, v, h, w, c) = px[c];
                    }
                }
        }

    out.disparity.data = center_disparity(scene, baseline_mult);
    return out;
}

std::pair<double, double> disparity_range(const SceneSpec& scene, int baseline_mult) {
    scene.validate();
    const Tensor d = center_disparity(scene, baseline_mult);
    double lo = d[0], hi = d[0];
    for (std::int64_t i = 0; i < d.numel(); ++i) {
        lo = std::min(lo, d[i]);
        hi = std::max(hi, d[i]);
    }
    return {lo, hi};
}

Tensor epi_extract(const LightField& lf, EpiAxis axis, int spatial_index,
                   int angular_index) {
    const int C = lf.channels();
    if (axis == EpiAxis::row) {
        if (angular_index < 0 || angular_index >= lf.views_u() || spatial_index < 0 ||
            spatial_index >= lf.height())
            throw std::out_of_range("epi_extract: index out of range");
        Tensor epi({lf.views_v(), lf.width(), C});
        for (int v = 0; v < lf.views_v(); ++v)
            for (int w = 0; w < lf.width(); ++w)
                for (int c = 0; c < C; ++c)
                    epi.at(v, w, c) = lf.data.at(angular_index, v, spatial_index, w, c);
        return epi;
    }
    if (angular_index < 0 || angular_index >= lf.views_v() || spatial_index < 0 ||
        spatial_index >= lf.width())
        throw std::out_of_range("epi_extract: index out of range");
    Tensor epi({lf.views_u(), lf.height(), C});
    for (int u = 0; u < lf.views_u(); ++u)
        for (int h = 0; h < lf.height(); ++h)
            for (int c = 0; c < C; ++c)
                epi.at(u, h, c) = lf.data.at(u, angular_index, h, spatial_index, c);
    return epi;
}

namespace {

// sum of squared differences between row `r` of the EPI shifted by t and the
// reference row, with wraparound sampling
double epi_row_ssd(const Tensor& epi, int r, int ref, double t) {
    const int W = epi.dim(1), C = epi.dim(2);
    double acc = 0.0;
    for (int x = 0; x < W; ++x) {
        const double sx = x + t;
        const double fx = std::floor(sx);
        const int x0 = wrap_index(static_cast<int>(fx), W);
        const int x1 = (x0 + 1) % W;
        const double tx = sx - fx;
        for (int c = 0; c < C; ++c) {
            const double s = (1.0 - tx) * epi.at(r, x0, c) + tx * epi.at(r, x1, c);
            const double d = s - epi.at(ref, x, c);
            acc += d * d;
        }
    }
    return acc;
}

double best_shift(const Tensor& epi, int r, int ref, double smax) {
    double best_t = 0.0, best = epi_row_ssd(epi, r, ref, 0.0);
    for (double t = -smax; t <= smax + 1e-9; t += 0.1) {
        const double s = epi_row_ssd(epi, r, ref, t);
        if (s < best) {
            best = s;
            best_t = t;
        }
    }
    for (double t = best_t - 0.1; t <= best_t + 0.1 + 1e-9; t += 0.01) {
        const double s = epi_row_ssd(epi, r, ref, t);
        if (s < best) {
            best = s;
            best_t = t;
        }
    }
    return best_t;
}

}  // namespace

double estimate_epi_slope(const Tensor& epi) {
    const int A = epi.dim(0);
    if (A < 2) throw std::invalid_argument("estimate_epi_slope: need at least two views");
    const int ref = A / 2;
    const double smax = std::max(4.0, epi.dim(1) / 4.0);
    double num = 0.0, den = 0.0;
    for (int r = 0; r < A; ++r) {
        if (r == ref) continue;
        const double t = best_shift(epi, r, ref, smax);
        num += t * (r - ref);
        den += static_cast<double>(r - ref) * (r - ref);
    }
    return num / den;
}

SceneSpec random_scene(std::uint64_t seed, int angular, int h, int w, int n_layers) {
    if (n_layers < 1) throw std::invalid_argument("random_scene: need at least one layer");
    Rng rng(Rng::mix(seed, 0x5ce7e));
    SceneSpec s;
    s.angular = angular;
    s.height = h;
    s.width = w;
    s.unit_disparity = 1.0;
    s.seed = seed;

    Layer bg;
    bg.depth = rng.uniform(3.5, 5.0);
    bg.texture.kind = TextureSpec::Kind::noise;
    bg.texture.scale = rng.uniform(6.0, 12.0);
    bg.texture.salt = rng.next_u64();
    bg.mask.kind = MaskSpec::Kind::full;
    s.layers.push_back(bg);

    double depth = bg.depth;
    for (int i = 1; i < n_layers; ++i) {
        depth *= rng.uniform(0.5, 0.8);
        Layer l;
        l.depth = std::max(0.8, depth);
        const double pick = rng.uniform();
        l.texture.kind = pick < 0.4 ? TextureSpec::Kind::noise
                                    : (pick < 0.7 ? TextureSpec::Kind::checker
                                                  : TextureSpec::Kind::gradient);
        l.texture.scale = rng.uniform(3.0, 9.0);
        l.texture.salt = rng.next_u64();
        if (rng.uniform() < 0.5) {
            l.mask.kind = MaskSpec::Kind::disk;
            l.mask.cy = rng.uniform(0.2, 0.8) * h;
            l.mask.cx = rng.uniform(0.2, 0.8) * w;
            l.mask.r = rng.uniform(0.12, 0.3) * std::min(h, w);
        } else {
            l.mask.kind = MaskSpec::Kind::rect;
            l.mask.h = rng.uniform(0.2, 0.45) * h;
            l.mask.w = rng.uniform(0.2, 0.45) * w;
            l.mask.y0 = rng.uniform(0.05, 0.55) * h;
            l.mask.x0 = rng.uniform(0.05, 0.55) * w;
        }
        s.layers.push_back(l);
    }
    // keep depths strictly decreasing in the face of the 0.8 floor
    for (std::size_t i = 1; i < s.layers.size(); ++i)
        if (!(s.layers[i].depth < s.layers[i - 1].depth))
            s.layers[i].depth = s.layers[i - 1].depth * 0.75;
    return s;
}

}  // namespace lfdf::synth
