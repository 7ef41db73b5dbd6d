#include "lfdf/dconv.hpp"

#include <cmath>
#include <stdexcept>

namespace lfdf::dconv {

void OffsetField::validate(int h, int w) const {
    if (data.rank() != 3 || data.dim(0) != h || data.dim(1) != w)
        throw std::invalid_argument("OffsetField: spatial dims must match feature");
    if (data.dim(2) != 2 * taps())
        throw std::invalid_argument("OffsetField: channel count must be 2*k*k");
}

namespace {

struct Corner {
    int y, x;
    double w;
    bool in;
};

// The four bilinear corners of (y, x) with their blend weights.
struct Cell {
    Corner c[4];
    int y0, x0;
    double ty, tx;
};

Cell make_cell(double y, double x, int H, int W) {
    Cell cell;
    const double fy = std::floor(y), fx = std::floor(x);
    const int y0 = static_cast<int>(fy), x0 = static_cast<int>(fx);
    const double ty = y - fy, tx = x - fx;
    cell.y0 = y0;
    cell.x0 = x0;
    cell.ty = ty;
    cell.tx = tx;
    const double wts[4] = {(1 - ty) * (1 - tx), (1 - ty) * tx, ty * (1 - tx), ty * tx};
    const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
    const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
    for (int i = 0; i < 4; ++i) {
        cell.c[i] = {ys[i], xs[i], wts[i],
                     ys[i] >= 0 && ys[i] < H && xs[i] >= 0 && xs[i] < W};
    }
    return cell;
}

inline const double* px(const Tensor& f, int y, int x) {
    return f.data() + (static_cast<std::int64_t>(y) * f.dim(1) + x) * f.dim(2);
}

inline double read0(const Tensor& f, int y, int x, int c) {
    if (y < 0 || y >= f.dim(0) || x < 0 || x >= f.dim(1)) return 0.0;
    return px(f, y, x)[c];
}

}  // namespace

void bilinear_sample(const Tensor& feature, double y, double x, double* out) {
    const int H = feature.dim(0), W = feature.dim(1), C = feature.dim(2);
    for (int c = 0; c < C; ++c) out[c] = 0.0;
    // Entirely outside any influence region: all corners out of bounds.
    if (y <= -1.0 || y >= H || x <= -1.0 || x >= W) return;
    const Cell cell = make_cell(y, x, H, W);
    for (const Corner& cr : cell.c) {
        if (!cr.in || cr.w == 0.0) continue;
        const double* p = px(feature, cr.y, cr.x);
        for (int c = 0; c < C; ++c) out[c] += cr.w * p[c];
    }
}

std::vector<double> bilinear_sample(const Tensor& feature, double y, double x) {
    std::vector<double> out(static_cast<std::size_t>(feature.dim(2)));
    bilinear_sample(feature, y, x, out.data());
    return out;
}

Tensor deform_conv2d(const Tensor& feature, const OffsetField& offsets,
                     const ConvKernel& kernel) {
    if (feature.rank() != 3) throw std::invalid_argument("deform_conv2d: expected [H, W, C]");
    const int H = feature.dim(0), W = feature.dim(1), C = feature.dim(2);
    const int k = kernel.k(), co = kernel.c_out();
    if (kernel.c_in() != C) throw std::invalid_argument("deform_conv2d: C_in mismatch");
    if (k % 2 == 0) throw std::invalid_argument("deform_conv2d: k must be odd");
    if (offsets.kernel_size != k)
        throw std::invalid_argument("deform_conv2d: offset kernel size mismatch");
    offsets.validate(H, W);

    const int half = k / 2, taps = k * k;
    Tensor out({H, W, co});
    std::vector<double> sample(static_cast<std::size_t>(C));
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double* o = out.data() + (static_cast<std::int64_t>(y) * W + x) * co;
            for (int c = 0; c < co; ++c) o[c] = kernel.bias[c];
            const double* off = px(offsets.data, y, x);
            for (int n = 0; n < taps; ++n) {
                const double sy = y + (n / k - half) + off[2 * n];
                const double sx = x + (n % k - half) + off[2 * n + 1];
                bilinear_sample(feature, sy, sx, sample.data());
                for (int c = 0; c < co; ++c) {
                    const double* wrow =
                        kernel.weights.data() + (static_cast<std::int64_t>(c) * C) * taps + n;
                    double acc = 0.0;
                    for (int ci = 0; ci < C; ++ci) acc += wrow[static_cast<std::int64_t>(ci) * taps] * sample[static_cast<std::size_t>(ci)];
                    o[c] += acc;
                }
            }
        }
    return out;
}

DeformConvGrads deform_conv2d_grad(const Tensor& feature, const OffsetField& offsets,
                                   const ConvKernel& kernel, const Tensor& d_out) {
    const int H = feature.dim(0), W = feature.dim(1), C = feature.dim(2);
    const int k = kernel.k(), co = kernel.c_out();
    if (d_out.rank() != 3 || d_out.dim(0) != H || d_out.dim(1) != W || d_out.dim(2) != co)
        throw std::invalid_argument("deform_conv2d_grad: d_out shape mismatch");
    offsets.validate(H, W);

    const int half = k / 2, taps = k * k;
    DeformConvGrads g;
    g.d_feature = Tensor({H, W, C});
    g.d_weights = Tensor({co, C, k, k});
    g.d_bias = Tensor({co});
    g.d_offsets = Tensor({H, W, 2 * taps});

    std::vector<double> sample(static_cast<std::size_t>(C));
    std::vector<double> gsample(static_cast<std::size_t>(C));
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const double* go = d_out.data() + (static_cast<std::int64_t>(y) * W + x) * co;
            for (int c = 0; c < co; ++c) g.d_bias[c] += go[c];
            const double* off = px(offsets.data, y, x);
            double* goff = g.d_offsets.data() + (static_cast<std::int64_t>(y) * W + x) * 2 * taps;
            for (int n = 0; n < taps; ++n) {
                const double sy = y + (n / k - half) + off[2 * n];
                const double sx = x + (n % k - half) + off[2 * n + 1];

                bilinear_sample(feature, sy, sx, sample.data());

                // Back-projected gradient onto the sampled vector, plus the
                // weight gradient which reuses the sampled values.
                for (int ci = 0; ci < C; ++ci) gsample[static_cast<std::size_t>(ci)] = 0.0;
                for (int c = 0; c < co; ++c) {
                    const double gc = go[c];
                    if (gc == 0.0) continue;
                    double* wrow =
                        g.d_weights.data() + (static_cast<std::int64_t>(c) * C) * taps + n;
                    const double* w =
                        kernel.weights.data() + (static_cast<std::int64_t>(c) * C) * taps + n;
                    for (int ci = 0; ci < C; ++ci) {
                        wrow[static_cast<std::int64_t>(ci) * taps] += gc * sample[static_cast<std::size_t>(ci)];
                        gsample[static_cast<std::size_t>(ci)] += gc * w[static_cast<std::int64_t>(ci) * taps];
                    }
                }

                // The value vanishes outside (-1, H) x (-1, W) but the
                // left-continuous derivative extends to the closed far edge.
                if (sy <= -1.0 || sy > H || sx <= -1.0 || sx > W) continue;
                const Cell cell = make_cell(sy, sx, H, W);
                for (const Corner& cr : cell.c) {
                    if (!cr.in || cr.w == 0.0) continue;
                    double* p = g.d_feature.data() +
                                (static_cast<std::int64_t>(cr.y) * W + cr.x) * C;
                    for (int ci = 0; ci < C; ++ci) p[ci] += cr.w * gsample[static_cast<std::size_t>(ci)];
                }

                // d value / d sy. At integer sy the left-continuous convention
                // takes the slope of the cell [sy-1, sy].
                int ya = cell.y0, yb = cell.y0 + 1;
                if (cell.ty == 0.0) {
                    ya = cell.y0 - 1;
                    yb = cell.y0;
                }
                int xa = cell.x0, xb = cell.x0 + 1;
                if (cell.tx == 0.0) {
                    xa = cell.x0 - 1;
                    xb = cell.x0;
                }
                double gdy = 0.0, gdx = 0.0;
                for (int ci = 0; ci < C; ++ci) {
                    const double gs = gsample[static_cast<std::size_t>(ci)];
                    if (gs == 0.0) continue;
                    // Blend in x with the value convention, difference in y.
                    const double row_lo = (1 - cell.tx) * read0(feature, ya, cell.x0, ci) +
                                          cell.tx * read0(feature, ya, cell.x0 + 1, ci);
                    const double row_hi = (1 - cell.tx) * read0(feature, yb, cell.x0, ci) +
                                          cell.tx * read0(feature, yb, cell.x0 + 1, ci);
                    gdy += gs * (row_hi - row_lo);
                    const double col_lo = (1 - cell.ty) * read0(feature, cell.y0, xa, ci) +
                                          cell.ty * read0(feature, cell.y0 + 1, xa, ci);
                    const double col_hi = (1 - cell.ty) * read0(feature, cell.y0, xb, ci) +
                                          cell.ty * read0(feature, cell.y0 + 1, xb, ci);
                    gdx += gs * (col_hi - col_lo);
                }
                goff[2 * n] += gdy;
                goff[2 * n + 1] += gdx;
            }
        }
    return g;
}

}  // namespace lfdf::dconv
