#pragma once

#include <optional>
#include <vector>

#include "lfdf/tensor.hpp"

namespace lfdf {

enum class ColorSpace { RGB, YCbCr, Y };

struct ValueRange {
    double lo = 0.0;
    double hi = 1.0;
};

// A 4D(+channel) light field: data laid out [U, V, H, W, C].
// U, V are angular (view) indices, H, W spatial, C in {1, 3}.
struct LightField {
    Tensor data;
    ColorSpace color_space = ColorSpace::RGB;
    ValueRange value_range;

    LightField() = default;
    LightField(Tensor d, ColorSpace cs, ValueRange vr = {})
        : data(std::move(d)), color_space(cs), value_range(vr) {}

    int views_u() const { return data.dim(0); }
    int views_v() const { return data.dim(1); }
    int height() const { return data.dim(2); }
    int width() const { return data.dim(3); }
    int channels() const { return data.dim(4); }

    // Throws if shape, finiteness or range invariants are violated.
    void validate() const;

    // One sub-aperture image as an [H, W, C] tensor (copy).
    Tensor view(int u, int v) const;
    void set_view(int u, int v, const Tensor& img);
};

// U x V array of per-view images; lossless alternate organization of a LightField.
struct SAIGrid {
    int views_u = 0;
    int views_v = 0;
    std::vector<Tensor> views;  // row-major over (u, v), each [H, W, C]
    ColorSpace color_space = ColorSpace::RGB;
    ValueRange value_range;

    const Tensor& view(int u, int v) const { return views[static_cast<std::size_t>(u) * views_v + v]; }
};

// Macro-pixel interleaving: pixel (h, w) of view (u, v) sits at (h*U + u, w*V + v).
struct MacroPixelImage {
    Tensor data;  // [U*H, V*W, C]
    int views_u = 0;
    int views_v = 0;
};

SAIGrid to_sai_grid(const LightField& lf);
LightField from_sai_grid(const SAIGrid& grid);

MacroPixelImage to_macro_pixel(const LightField& lf);
LightField from_macro_pixel(const MacroPixelImage& mpi, ColorSpace cs = ColorSpace::RGB,
                            ValueRange vr = {});

// Central a x a angular crop. Requires a <= min(U, V) and (U-a), (V-a) even.
LightField crop_angular(const LightField& lf, int a);

// Full-range BT.601. rgb_to_y keeps only the luminance channel.
LightField rgb_to_ycbcr(const LightField& lf);
LightField ycbcr_to_rgb(const LightField& lf);
LightField rgb_to_y(const LightField& lf);

// Separable Keys bicubic (a = -0.5) resize of an [H, W, C] image. When
// scale < 1 and antialias is set, the kernel support is widened by 1/scale.
// Border handling is edge replication; output is clamped to [lo, hi].
// Pass an infinite range to disable clamping.
Tensor resize_bicubic(const Tensor& img, double scale, bool antialias, double lo = 0.0,
                      double hi = 1.0);

// Joint spatial-angular symmetry. Flips are applied first, then rot90
// quarter-turns (counterclockwise). Rotation requires a square angular array.
LightField augment(const LightField& lf, bool flip_h, bool flip_v, int rot90);

// Identical spatial windows across all views, tiled with the given stride;
// ragged remainders are dropped.
std::vector<LightField> extract_patches(const LightField& lf, int size, int stride);

// Per-view bicubic downsampling by 1/alpha with antialiasing.
LightField degrade(const LightField& lf_hr, int alpha);

// One element of the 8-element flip/rotation group used for augmentation.
struct Symmetry {
    bool flip_h = false;
    bool flip_v = false;
    int rot90 = 0;
};

inline LightField augment(const LightField& lf, const Symmetry& s) {
    return augment(lf, s.flip_h, s.flip_v, s.rot90);
}

// The 8 symmetries drawn during training (identity first).
std::vector<Symmetry> augmentation_group();

}  // namespace lfdf
