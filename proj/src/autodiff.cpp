#include "lfdf/autodiff.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "lfdf/dconv.hpp"

namespace lfdf::ad {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

Var Tape::input(Tensor v) { return make(std::move(v)); }

Var Tape::make(Tensor v) {
    auto n = std::make_shared<Node>();
    n->val = std::move(v);
    if (recording_) n->grad = Tensor(n->val.shape());
    return n;
}

Var Tape::leaf(const Param& p) {
    auto it = leaves_.find(&p);
    if (it != leaves_.end()) return it->second;
    Var n = make(p.value);
    n->param = &p;
    leaves_.emplace(&p, n);
    return n;
}

void Tape::push(std::function<void()> back) {
    if (recording_) backs_.push_back(std::move(back));
}

void Tape::backward(const Var& loss) {
    if (!recording_) throw std::logic_error("Tape::backward on a non-recording tape");
    if (loss->val.numel() != 1) throw std::invalid_argument("backward: loss must be scalar");
    loss->grad.fill(0.0);
    loss->grad[0] = 1.0;
    for (auto it = backs_.rbegin(); it != backs_.rend(); ++it) (*it)();
}

Tensor Tape::grad_of(const Param& p) const {
    auto it = leaves_.find(&p);
    if (it != leaves_.end()) return it->second->grad;
    return Tensor(p.value.shape());
}

std::vector<Tensor> Tape::grads_of(const std::vector<Param*>& params) const {
    std::vector<Tensor> out;
    out.reserve(params.size());
    for (const Param* p : params) out.push_back(grad_of(*p));
    return out;
}

namespace {

// Patch matrix for stride-1 zero-padded convolution. Row = output position,
// column q = ci*k*k + i*k + j, matching the [C_out, C_in, k, k] weight layout.
std::shared_ptr<Tensor> im2col(const Tensor& x, int k, int dilation) {
    const int H = x.dim(0), W = x.dim(1), C = x.dim(2);
    const int half = dilation * (k - 1) / 2;
    const int Q = C * k * k;
    auto col = std::make_shared<Tensor>(std::vector<int>{H * W, Q});
    double* cd = col->data();
    for (int y = 0; y < H; ++y)
        for (int x0 = 0; x0 < W; ++x0) {
            double* row = cd + (static_cast<std::int64_t>(y) * W + x0) * Q;
            for (int ci = 0; ci < C; ++ci)
                for (int i = 0; i < k; ++i) {
                    const int sy = y + dilation * i - half;
                    if (sy < 0 || sy >= H) {
                        for (int j = 0; j < k; ++j) row[(ci * k + i) * k + j] = 0.0;
                        continue;
                    }
                    for (int j = 0; j < k; ++j) {
                        const int sx = x0 + dilation * j - half;
                        row[(ci * k + i) * k + j] =
                            (sx < 0 || sx >= W)
                                ? 0.0
                                : x.data()[(static_cast<std::int64_t>(sy) * W + sx) * C + ci];
                    }
                }
        }
    return col;
}

// Scatter-add of a patch-matrix gradient back onto the input image.
void col2im_add(const Tensor& dcol, Tensor& dx, int k, int dilation) {
    const int H = dx.dim(0), W = dx.dim(1), C = dx.dim(2);
    const int half = dilation * (k - 1) / 2;
    const int Q = C * k * k;
    const double* cd = dcol.data();
    for (int y = 0; y < H; ++y)
        for (int x0 = 0; x0 < W; ++x0) {
            const double* row = cd + (static_cast<std::int64_t>(y) * W + x0) * Q;
            for (int ci = 0; ci < C; ++ci)
                for (int i = 0; i < k; ++i) {
                    const int sy = y + dilation * i - half;
                    if (sy < 0 || sy >= H) continue;
                    for (int j = 0; j < k; ++j) {
                        const int sx = x0 + dilation * j - half;
                        if (sx < 0 || sx >= W) continue;
                        dx.data()[(static_cast<std::int64_t>(sy) * W + sx) * C + ci] +=
                            row[(ci * k + i) * k + j];
                    }
                }
        }
}

}  // namespace

Var conv2d(Tape& t, const Var& x, const Param& w, const Param& b, int dilation) {
    if (x->val.rank() != 3) throw std::invalid_argument("conv2d: expected [H, W, C]");
    const int H = x->val.dim(0), W = x->val.dim(1), C = x->val.dim(2);
    const int co = w.value.dim(0), ci = w.value.dim(1), k = w.value.dim(2);
    if (ci != C)
        throw std::invalid_argument("conv2d: channel mismatch, input " + std::to_string(C) +
                                    " vs kernel " + std::to_string(ci));
    if (b.value.numel() != co) throw std::invalid_argument("conv2d: bias size mismatch");

    auto col = im2col(x->val, k, dilation);
    const int Q = C * k * k;
    Tensor out({H, W, co});
    {
        CMapRM colm(col->data(), static_cast<std::int64_t>(H) * W, Q);
        CMapRM wm(w.value.data(), co, Q);
        MapRM outm(out.data(), static_cast<std::int64_t>(H) * W, co);
        outm.noalias() = colm * wm.transpose();
        Eigen::Map<const Eigen::VectorXd> bv(b.value.data(), co);
        outm.rowwise() += bv.transpose();
    }
    Var y = t.make(std::move(out));
    if (t.recording()) {
        Var wl = t.leaf(w), bl = t.leaf(b);
        t.push([x, y, wl, bl, col, k, dilation, H, W, C, co, Q] {
            CMapRM dym(y->grad.data(), static_cast<std::int64_t>(H) * W, co);
            CMapRM colm(col->data(), static_cast<std::int64_t>(H) * W, Q);
            CMapRM wm(wl->val.data(), co, Q);
            MapRM dwm(wl->grad.data(), co, Q);
            dwm.noalias() += dym.transpose() * colm;
            Eigen::Map<Eigen::VectorXd> dbv(bl->grad.data(), co);
            dbv += dym.colwise().sum().transpose();
            Tensor dcol({H * W, Q});
            MapRM dcolm(dcol.data(), static_cast<std::int64_t>(H) * W, Q);
            dcolm.noalias() = dym * wm;
            col2im_add(dcol, x->grad, k, dilation);
        });
    }
    return y;
}

Var leaky_relu(Tape& t, const Var& x, double slope) {
    Tensor out(x->val.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) {
        const double v = x->val[i];
        out[i] = v >= 0.0 ? v : slope * v;
    }
    Var y = t.make(std::move(out));
    t.push([x, y, slope] {
        for (std::int64_t i = 0; i < x->grad.numel(); ++i)
            x->grad[i] += y->grad[i] * (x->val[i] >= 0.0 ? 1.0 : slope);
    });
    return y;
}

Var add(Tape& t, const Var& a, const Var& b) {
    if (!a->val.same_shape(b->val)) throw std::invalid_argument("add: shape mismatch");
    Tensor out(a->val.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = a->val[i] + b->val[i];
    Var y = t.make(std::move(out));
    t.push([a, b, y] {
        for (std::int64_t i = 0; i < y->grad.numel(); ++i) {
            a->grad[i] += y->grad[i];
            b->grad[i] += y->grad[i];
        }
    });
    return y;
}

Var add_const(Tape& t, const Var& a, const Tensor& c) {
    if (!a->val.same_shape(c)) throw std::invalid_argument("add_const: shape mismatch");
    Tensor out(a->val.shape());
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = a->val[i] + c[i];
    Var y = t.make(std::move(out));
    t.push([a, y] {
        for (std::int64_t i = 0; i < y->grad.numel(); ++i) a->grad[i] += y->grad[i];
    });
    return y;
}

Var concat_c(Tape& t, const std::vector<Var>& xs) {
    if (xs.empty()) throw std::invalid_argument("concat_c: empty input");
    const int H = xs[0]->val.dim(0), W = xs[0]->val.dim(1);
    int ctot = 0;
    for (const Var& x : xs) {
        if (x->val.rank() != 3 || x->val.dim(0) != H || x->val.dim(1) != W)
            throw std::invalid_argument("concat_c: spatial shape mismatch");
        ctot += x->val.dim(2);
    }
    Tensor out({H, W, ctot});
    const std::int64_t npos = static_cast<std::int64_t>(H) * W;
    for (std::int64_t p = 0; p < npos; ++p) {
        double* o = out.data() + p * ctot;
        for (const Var& x : xs) {
            const int c = x->val.dim(2);
            const double* s = x->val.data() + p * c;
            for (int i = 0; i < c; ++i) *o++ = s[i];
        }
    }
    Var y = t.make(std::move(out));
    t.push([xs, y, npos, ctot] {
        for (std::int64_t p = 0; p < npos; ++p) {
            const double* g = y->grad.data() + p * ctot;
            for (const Var& x : xs) {
                const int c = x->val.dim(2);
                double* d = x->grad.data() + p * c;
                for (int i = 0; i < c; ++i) d[i] += *g++;
            }
        }
    });
    return y;
}

Var slice_c(Tape& t, const Var& x, int c0, int len) {
    const int H = x->val.dim(0), W = x->val.dim(1), C = x->val.dim(2);
    if (c0 < 0 || len < 1 || c0 + len > C) throw std::invalid_argument("slice_c: bad range");
    Tensor out({H, W, len});
    const std::int64_t npos = static_cast<std::int64_t>(H) * W;
    for (std::int64_t p = 0; p < npos; ++p) {
        const double* s = x->val.data() + p * C + c0;
        double* o = out.data() + p * len;
        for (int i = 0; i < len; ++i) o[i] = s[i];
    }
    Var y = t.make(std::move(out));
    t.push([x, y, c0, len, C, npos] {
        for (std::int64_t p = 0; p < npos; ++p) {
            const double* g = y->grad.data() + p * len;
            double* d = x->grad.data() + p * C + c0;
            for (int i = 0; i < len; ++i) d[i] += g[i];
        }
    });
    return y;
}

Var pixel_shuffle(Tape& t, const Var& x, int alpha) {
    const int H = x->val.dim(0), W = x->val.dim(1), C = x->val.dim(2);
    if (alpha < 1 || C % (alpha * alpha) != 0)
        throw std::invalid_argument("pixel_shuffle: channels not divisible by alpha^2");
    const int co = C / (alpha * alpha);
    Tensor out({H * alpha, W * alpha, co});
    for (int h = 0; h < H; ++h)
        for (int w = 0; w < W; ++w)
            for (int c = 0; c < co; ++c)
                for (int i = 0; i < alpha; ++i)
                    for (int j = 0; j < alpha; ++j)
                        out.at(alpha * h + i, alpha * w + j, c) =
                            x->val.at(h, w, c * alpha * alpha + i * alpha + j);
    Var y = t.make(std::move(out));
    t.push([x, y, alpha, H, W, co] {
        for (int h = 0; h < H; ++h)
            for (int w = 0; w < W; ++w)
                for (int c = 0; c < co; ++c)
                    for (int i = 0; i < alpha; ++i)
                        for (int j = 0; j < alpha; ++j)
                            x->grad.at(h, w, c * alpha * alpha + i * alpha + j) +=
                                y->grad.at(alpha * h + i, alpha * w + j, c);
    });
    return y;
}

Var deform_conv2d(Tape& t, const Var& x, const Var& offsets, const Param& w, const Param& b) {
    dconv::ConvKernel kernel;
    kernel.weights = w.value;
    kernel.bias = b.value;
    dconv::OffsetField field;
    field.kernel_size = kernel.k();
    field.data = offsets->val;
    Var y = t.make(dconv::deform_conv2d(x->val, field, kernel));
    if (t.recording()) {
        Var wl = t.leaf(w), bl = t.leaf(b);
        t.push([x, offsets, y, wl, bl] {
            dconv::ConvKernel kk;
            kk.weights = wl->val;
            kk.bias = bl->val;
            dconv::OffsetField of;
            of.kernel_size = kk.k();
            of.data = offsets->val;
            dconv::DeformConvGrads g = dconv::deform_conv2d_grad(x->val, of, kk, y->grad);
            for (std::int64_t i = 0; i < x->grad.numel(); ++i) x->grad[i] += g.d_feature[i];
            for (std::int64_t i = 0; i < wl->grad.numel(); ++i) wl->grad[i] += g.d_weights[i];
            for (std::int64_t i = 0; i < bl->grad.numel(); ++i) bl->grad[i] += g.d_bias[i];
            for (std::int64_t i = 0; i < offsets->grad.numel(); ++i)
                offsets->grad[i] += g.d_offsets[i];
        });
    }
    return y;
}

Var mean_abs_error(Tape& t, const Var& pred, const Tensor& target) {
    if (!pred->val.same_shape(target))
        throw std::invalid_argument("mean_abs_error: shape mismatch");
    const std::int64_t n = pred->val.numel();
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) acc += std::fabs(pred->val[i] - target[i]);
    Tensor out({1});
    out[0] = acc / static_cast<double>(n);
    Var y = t.make(std::move(out));
    auto tgt = std::make_shared<Tensor>(target);
    t.push([pred, y, tgt, n] {
        const double g = y->grad[0] / static_cast<double>(n);
        for (std::int64_t i = 0; i < n; ++i) {
            const double d = pred->val[i] - (*tgt)[i];
            pred->grad[i] += d > 0.0 ? g : (d < 0.0 ? -g : 0.0);
        }
    });
    return y;
}

Var mean_scalars(Tape& t, const std::vector<Var>& xs) {
    if (xs.empty()) throw std::invalid_argument("mean_scalars: empty input");
    Tensor out({1});
    double acc = 0.0;
    for (const Var& x : xs) {
        if (x->val.numel() != 1)
            throw std::invalid_argument("mean_scalars: inputs must be scalar");
        acc += x->val[0];
    }
    out[0] = acc / static_cast<double>(xs.size());
    Var y = t.make(std::move(out));
    if (t.recording()) {
        auto srcs = xs;
        t.push([srcs, y] {
            const double g = y->grad[0] / static_cast<double>(srcs.size());
            for (const Var& x : srcs) x->grad[0] += g;
        });
    }
    return y;
}

}  // namespace lfdf::ad
