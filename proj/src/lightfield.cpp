#include "lfdf/lightfield.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lfdf {

void LightField::validate() const {
    if (data.rank() != 5)
        throw std::invalid_argument("LightField: expected rank-5 tensor, got " +
                                    Tensor::shape_str(data.shape()));
    if (views_u() < 1 || views_v() < 1)
        throw std::invalid_argument("LightField: U and V must be >= 1");
    if (channels() != 1 && channels() != 3)
        throw std::invalid_argument("LightField: C must be 1 or 3");
    for (std::int64_t i = 0; i < data.numel(); ++i) {
        double v = data[i];
        if (!std::isfinite(v) || v < value_range.lo || v > value_range.hi)
            throw std::invalid_argument("LightField: value outside range at flat index " +
                                        std::to_string(i));
    }
}

Tensor LightField::view(int u, int v) const {
    const int h = height(), w = width(), c = channels();
    Tensor img({h, w, c});
    const std::int64_t n = static_cast<std::int64_t>(h) * w * c;
    const double* src = data.data() + (static_cast<std::int64_t>(u) * views_v() + v) * n;
    std::copy(src, src + n, img.data());
    return img;
}

void LightField::set_view(int u, int v, const Tensor& img) {
    const std::int64_t n = static_cast<std::int64_t>(height()) * width() * channels();
    if (img.numel() != n) throw std::invalid_argument("set_view: image shape mismatch");
    double* dst = data.data() + (static_cast<std::int64_t>(u) * views_v() + v) * n;
    std::copy(img.data(), img.data() + n, dst);
}

SAIGrid to_sai_grid(const LightField& lf) {
    SAIGrid g;
    g.views_u = lf.views_u();
    g.views_v = lf.views_v();
    g.color_space = lf.color_space;
    g.value_range = lf.value_range;
    g.views.reserve(static_cast<std::size_t>(g.views_u) * g.views_v);
    for (int u = 0; u < g.views_u; ++u)
        for (int v = 0; v < g.views_v; ++v) g.views.push_back(lf.view(u, v));
    return g;
}

LightField from_sai_grid(const SAIGrid& grid) {
    if (grid.views.empty()) throw std::invalid_argument("from_sai_grid: empty grid");
    const Tensor& first = grid.views.front();
    const int h = first.dim(0), w = first.dim(1), c = first.dim(2);
    LightField lf(Tensor({grid.views_u, grid.views_v, h, w, c}), grid.color_space,
                  grid.value_range);
    for (int u = 0; u < grid.views_u; ++u)
        for (int v = 0; v < grid.views_v; ++v) lf.set_view(u, v, grid.view(u, v));
    return lf;
}

MacroPixelImage to_macro_pixel(const LightField& lf) {
    const int U = lf.views_u(), V = lf.views_v(), H = lf.height(), W = lf.width(),
              C = lf.channels();
    MacroPixelImage mpi;
    mpi.views_u = U;
    mpi.views_v = V;
    mpi.data = Tensor({U * H, V * W, C});
    for (int u = 0; u < U; ++u)
        for (int v = 0; v < V; ++v)
            for (int h = 0; h < H; ++h)
                for (int w = 0; w < W; ++w)
                    for (int c = 0; c < C; ++c)
                        mpi.data.at(h * U + u, w * V + v, c) = lf.data.at(u, v, h, w, c);
    return mpi;
}

LightField from_macro_pixel(const MacroPixelImage& mpi, ColorSpace cs, ValueRange vr) {
    const int U = mpi.views_u, V = mpi.views_v;
    if (U < 1 || V < 1 || mpi.data.rank() != 3)
        throw std::invalid_argument("from_macro_pixel: malformed input");
    if (mpi.data.dim(0) % U != 0 || mpi.data.dim(1) % V != 0)
        throw std::invalid_argument("from_macro_pixel: dimensions not divisible by view counts");
    const int H = mpi.data.dim(0) / U, W = mpi.data.dim(1) / V, C = mpi.data.dim(2);
    LightField lf(Tensor({U, V, H, W, C}), cs, vr);
    for (int u = 0; u < U; ++u)
        for (int v = 0; v < V; ++v)
            for (int h = 0; h < H; ++h)
                for (int w = 0; w < W; ++w)
                    for (int c = 0; c < C; ++c)
                        lf.data.at(u, v, h, w, c) = mpi.data.at(h * U + u, w * V + v, c);
    return lf;
}

LightField crop_angular(const LightField& lf, int a) {
    const int U = lf.views_u(), V = lf.views_v();
    if (a < 1 || a > U || a > V)
        throw std::invalid_argument("crop_angular: a must satisfy 1 <= a <= min(U, V)");
    if ((U - a) % 2 != 0 || (V - a) % 2 != 0)
        throw std::invalid_argument("crop_angular: (U - a) and (V - a) must be even");
    const int du = (U - a) / 2, dv = (V - a) / 2;
    LightField out(Tensor({a, a, lf.height(), lf.width(), lf.channels()}), lf.color_space,
                   lf.value_range);
    for (int u = 0; u < a; ++u)
        for (int v = 0; v < a; ++v) out.set_view(u, v, lf.view(u + du, v + dv));
    return out;
}

namespace {

// Full-range BT.601 coefficients.
constexpr double kYR = 0.299, kYG = 0.587, kYB = 0.114;

void rgb_to_ycbcr_px(const double* rgb, double* out) {
    const double y = kYR * rgb[0] + kYG * rgb[1] + kYB * rgb[2];
    out[0] = y;
    out[1] = (rgb[2] - y) / 1.772 + 0.5;
    out[2] = (rgb[0] - y) / 1.402 + 0.5;
}

void ycbcr_to_rgb_px(const double* ycc, double* out) {
    const double y = ycc[0], cb = ycc[1] - 0.5, cr = ycc[2] - 0.5;
    out[0] = y + 1.402 * cr;
    out[1] = y - (kYB * 1.772 / kYG) * cb - (kYR * 1.402 / kYG) * cr;
    out[2] = y + 1.772 * cb;
}

}  // namespace

LightField rgb_to_ycbcr(const LightField& lf) {
    if (lf.color_space != ColorSpace::RGB)
        throw std::invalid_argument("rgb_to_ycbcr: input must be RGB");
    if (lf.channels() != 3) throw std::invalid_argument("rgb_to_ycbcr: expected 3 channels");
    LightField out = lf;
    out.color_space = ColorSpace::YCbCr;
    const std::int64_t npx = lf.data.numel() / 3;
    for (std::int64_t i = 0; i < npx; ++i)
        rgb_to_ycbcr_px(lf.data.data() + 3 * i, out.data.data() + 3 * i);
    return out;
}

LightField ycbcr_to_rgb(const LightField& lf) {
    if (lf.color_space != ColorSpace::YCbCr)
        throw std::invalid_argument("ycbcr_to_rgb: input must be YCbCr");
    if (lf.channels() != 3) throw std::invalid_argument("ycbcr_to_rgb: expected 3 channels");
    LightField out = lf;
    out.color_space = ColorSpace::RGB;
    const std::int64_t npx = lf.data.numel() / 3;
    for (std::int64_t i = 0; i < npx; ++i)
        ycbcr_to_rgb_px(lf.data.data() + 3 * i, out.data.data() + 3 * i);
    return out;
}

LightField rgb_to_y(const LightField& lf) {
    if (lf.color_space != ColorSpace::RGB)
        throw std::invalid_argument("rgb_to_y: input must be RGB");
    if (lf.channels() != 3) throw std::invalid_argument("rgb_to_y: expected 3 channels");
    LightField out(Tensor({lf.views_u(), lf.views_v(), lf.height(), lf.width(), 1}),
                   ColorSpace::Y, lf.value_range);
    const std::int64_t npx = lf.data.numel() / 3;
    for (std::int64_t i = 0; i < npx; ++i) {
        const double* p = lf.data.data() + 3 * i;
        out.data[i] = kYR * p[0] + kYG * p[1] + kYB * p[2];
    }
    return out;
}

namespace {

// Keys cubic, a = -0.5.
double keys_cubic(double x) {
    x = std::fabs(x);
    if (x <= 1.0) return (1.5 * x - 2.5) * x * x + 1.0;
    if (x < 2.0) return ((-0.5 * x + 2.5) * x - 4.0) * x + 2.0;
    return 0.0;
}

struct ResampleTap {
    int first;                    // first source index (clamped later)
    std::vector<double> weights;  // normalized
};

// Precompute taps for one axis: n_in -> n_out at the given scale.
std::vector<ResampleTap> make_taps(int n_in, int n_out, double scale, bool antialias) {
    const double kscale = (antialias && scale < 1.0) ? scale : 1.0;
    const double support = 2.0 / kscale;
    std::vector<ResampleTap> taps(static_cast<std::size_t>(n_out));
    for (int i = 0; i < n_out; ++i) {
        const double u = (i + 0.5) / scale - 0.5;
        const int lo = static_cast<int>(std::floor(u - support)) + 1;
        const int hi = static_cast<int>(std::floor(u + support));
        ResampleTap& t = taps[static_cast<std::size_t>(i)];
        t.first = lo;
        t.weights.resize(static_cast<std::size_t>(hi - lo + 1));
        double sum = 0.0;
        for (int j = lo; j <= hi; ++j) {
            const double w = keys_cubic((u - j) * kscale);
            t.weights[static_cast<std::size_t>(j - lo)] = w;
            sum += w;
        }
        for (double& w : t.weights) w /= sum;
    }
    return taps;
}

int clampi(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

}  // namespace

Tensor resize_bicubic(const Tensor& img, double scale, bool antialias, double lo, double hi) {
    if (img.rank() != 3) throw std::invalid_argument("resize_bicubic: expected [H, W, C]");
    if (scale <= 0.0) throw std::invalid_argument("resize_bicubic: scale must be positive");
    const int H = img.dim(0), W = img.dim(1), C = img.dim(2);
    const double oh = H * scale, ow = W * scale;
    const int H2 = static_cast<int>(std::lround(oh)), W2 = static_cast<int>(std::lround(ow));
    if (std::fabs(oh - H2) > 1e-9 || std::fabs(ow - W2) > 1e-9)
        throw std::invalid_argument("resize_bicubic: non-integral output size");

    // Rows first, then columns.
    const auto row_taps = make_taps(H, H2, scale, antialias);
    Tensor mid({H2, W, C});
    for (int i = 0; i < H2; ++i) {
        const ResampleTap& t = row_taps[static_cast<std::size_t>(i)];
        for (int w = 0; w < W; ++w)
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (std::size_t k = 0; k < t.weights.size(); ++k)
                    acc += t.weights[k] * img.at(clampi(t.first + static_cast<int>(k), 0, H - 1), w, c);
                mid.at(i, w, c) = acc;
            }
    }
    const auto col_taps = make_taps(W, W2, scale, antialias);
    Tensor out({H2, W2, C});
    for (int i = 0; i < H2; ++i)
        for (int j = 0; j < W2; ++j) {
            const ResampleTap& t = col_taps[static_cast<std::size_t>(j)];
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (std::size_t k = 0; k < t.weights.size(); ++k)
                    acc += t.weights[k] * mid.at(i, clampi(t.first + static_cast<int>(k), 0, W - 1), c);
                out.at(i, j, c) = std::clamp(acc, lo, hi);
            }
        }
    return out;
}

namespace {

// out[u,v,h,w] = in[u, V-1-v, h, W-1-w]
LightField flip_horizontal(const LightField& lf) {
    const int U = lf.views_u(), V = lf.views_v(), H = lf.height(), W = lf.width(),
              C = lf.channels();
    LightField out = lf;
    for (int u = 0; u < U; ++u)
        for (int v = 0; v < V; ++v)
            for (int h = 0; h < H; ++h)
                for (int w = 0; w < W; ++w)
                    for (int c = 0; c < C; ++c)
                        out.data.at(u, v, h, w, c) = lf.data.at(u, V - 1 - v, h, W - 1 - w, c);
    return out;
}

LightField flip_vertical(const LightField& lf) {
    const int U = lf.views_u(), V = lf.views_v(), H = lf.height(), W = lf.width(),
              C = lf.channels();
    LightField out = lf;
    for (int u = 0; u < U; ++u)
        for (int v = 0; v < V; ++v)
            for (int h = 0; h < H; ++h)
                for (int w = 0; w < W; ++w)
                    for (int c = 0; c < C; ++c)
                        out.data.at(u, v, h, w, c) = lf.data.at(U - 1 - u, v, H - 1 - h, w, c);
    return out;
}

// One counterclockwise quarter turn of both spatial and angular dimensions.
LightField rotate_quarter(const LightField& lf) {
    const int U = lf.views_u(), V = lf.views_v(), H = lf.height(), W = lf.width(),
              C = lf.channels();
    LightField out(Tensor({V, U, W, H, C}), lf.color_space, lf.value_range);
    for (int u = 0; u < V; ++u)
        for (int v = 0; v < U; ++v)
            for (int h = 0; h < W; ++h)
                for (int w = 0; w < H; ++w)
                    for (int c = 0; c < C; ++c)
                        out.data.at(u, v, h, w, c) = lf.data.at(v, V - 1 - u, w, W - 1 - h, c);
    return out;
}

}  // namespace

LightField augment(const LightField& lf, bool flip_h, bool flip_v, int rot90) {
    rot90 = ((rot90 % 4) + 4) % 4;
    if (rot90 != 0 && lf.views_u() != lf.views_v())
        throw std::invalid_argument("augment: rotation requires a square angular array");
    LightField out = lf;
    if (flip_h) out = flip_horizontal(out);
    if (flip_v) out = flip_vertical(out);
    for (int r = 0; r < rot90; ++r) out = rotate_quarter(out);
    return out;
}

std::vector<LightField> extract_patches(const LightField& lf, int size, int stride) {
    if (size < 1 || stride < 1) throw std::invalid_argument("extract_patches: bad size/stride");
    if (size > lf.height() || size > lf.width())
        throw std::invalid_argument("extract_patches: size exceeds spatial extent");
    const int U = lf.views_u(), V = lf.views_v(), C = lf.channels();
    std::vector<LightField> patches;
    for (int h0 = 0; h0 + size <= lf.height(); h0 += stride)
        for (int w0 = 0; w0 + size <= lf.width(); w0 += stride) {
            LightField p(Tensor({U, V, size, size, C}), lf.color_space, lf.value_range);
            for (int u = 0; u < U; ++u)
                for (int v = 0; v < V; ++v)
                    for (int h = 0; h < size; ++h)
                        for (int w = 0; w < size; ++w)
                            for (int c = 0; c < C; ++c)
                                p.data.at(u, v, h, w, c) = lf.data.at(u, v, h0 + h, w0 + w, c);
            patches.push_back(std::move(p));
        }
    return patches;
}

LightField degrade(const LightField& lf_hr, int alpha) {
    if (alpha < 1) throw std::invalid_argument("degrade: alpha must be >= 1");
    if (lf_hr.height() % alpha != 0 || lf_hr.width() % alpha != 0)
        throw std::invalid_argument("degrade: spatial dims must be divisible by alpha");
    if (alpha == 1) return lf_hr;
    const int U = lf_hr.views_u(), V = lf_hr.views_v();
    LightField out(Tensor({U, V, lf_hr.height() / alpha, lf_hr.width() / alpha,
                           lf_hr.channels()}),
                   lf_hr.color_space, lf_hr.value_range);
    for (int u = 0; u < U; ++u)
        for (int v = 0; v < V; ++v)
            out.set_view(u, v, resize_bicubic(lf_hr.view(u, v), 1.0 / alpha, true,
                                              lf_hr.value_range.lo, lf_hr.value_range.hi));
    return out;
}

std::vector<Symmetry> augmentation_group() {
    std::vector<Symmetry> g;
    for (int fh = 0; fh < 2; ++fh)
        for (int fv = 0; fv < 2; ++fv)
            for (int r = 0; r < 2; ++r) g.push_back({fh != 0, fv != 0, r});
    return g;
}

}  // namespace lfdf
