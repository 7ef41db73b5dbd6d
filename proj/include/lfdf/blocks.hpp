#pragma once

#include <memory>
#include <string>
#include <vector>

#include "lfdf/autodiff.hpp"

namespace lfdf::net {

using ad::Param;
using ad::Tape;
using ad::Var;

struct BlockConfig {
    int channels = 32;
    int aspp_dilations[3] = {1, 2, 4};
    double leaky_slope = 0.1;
    int imdb_narrow = 32;   // preserved split
    int imdb_wide = 96;     // refined split
    int imdb_refined = 128; // refine conv output = narrow + wide
    int imdb_stages = 3;
};

struct Conv2dLayer {
    Param w, b;
    int dilation = 1;

    Conv2dLayer() = default;
    Conv2dLayer(const std::string& name, int c_out, int c_in, int k, int dil = 1)
        : w(name + ".w", Tensor({c_out, c_in, k, k})), b(name + ".b", Tensor({c_out})),
          dilation(dil) {}

    Var forward(Tape& t, const Var& x) const { return ad::conv2d(t, x, w, b, dilation); }

    void collect(std::vector<Param*>& out) {
        out.push_back(&w);
        out.push_back(&b);
    }

    int c_out() const { return w.value.dim(0); }
    int c_in() const { return w.value.dim(1); }
    int k() const { return w.value.dim(2); }

    std::int64_t param_count() const { return w.value.numel() + b.value.numel(); }
    double flops(int h, int w_) const {
        return 2.0 * h * w_ * k() * k() * c_in() * c_out();
    }

    void kaiming_init(Rng& rng, double slope);
    void zero_init();
};

// Interface for the interchangeable spatial units: a residual ASPP block or a
// plain residual block (the ablations swap one for the other).
struct SpatialBlock {
    virtual ~SpatialBlock() = default;
    virtual Var forward(Tape& t, const Var& x) const = 0;
    virtual void collect(std::vector<Param*>& out) = 0;
    virtual std::int64_t param_count() const = 0;
    virtual double flops(int h, int w) const = 0;
    virtual void kaiming_init(Rng& rng) = 0;
};

// conv -> LReLU -> conv, plus identity.
struct ResidualBlock final : SpatialBlock {
    Conv2dLayer c1, c2;
    double slope;

    ResidualBlock(const std::string& name, int channels, double leaky_slope = 0.1)
        : c1(name + ".c1", channels, channels, 3), c2(name + ".c2", channels, channels, 3),
          slope(leaky_slope) {}

    Var forward(Tape& t, const Var& x) const override;
    void collect(std::vector<Param*>& out) override;
    std::int64_t param_count() const override { return c1.param_count() + c2.param_count(); }
    double flops(int h, int w) const override { return c1.flops(h, w) + c2.flops(h, w); }
    void kaiming_init(Rng& rng) override;
};

// Three parallel dilated 3x3 convs (rates 1, 2, 4), LReLU each, concat, 1x1
// fuse, plus identity. Receptive field 9x9.
struct ResidualAsppBlock final : SpatialBlock {
    Conv2dLayer d1, d2, d4, fuse;
    double slope;

    ResidualAsppBlock(const std::string& name, int channels, double leaky_slope = 0.1,
                      const int* dilations = nullptr);

    Var forward(Tape& t, const Var& x) const override;
    void collect(std::vector<Param*>& out) override;
    std::int64_t param_count() const override {
        return d1.param_count() + d2.param_count() + d4.param_count() + fuse.param_count();
    }
    double flops(int h, int w) const override {
        return d1.flops(h, w) + d2.flops(h, w) + d4.flops(h, w) + fuse.flops(h, w);
    }
    void kaiming_init(Rng& rng) override;
};

// A chain of spatial blocks, ASPP or plain residual depending on use_aspp.
std::vector<std::unique_ptr<SpatialBlock>> make_spatial_chain(const std::string& name,
                                                              int count, int channels,
                                                              bool use_aspp,
                                                              double leaky_slope = 0.1);

// Information multi-distillation block. Head conv widens to narrow+wide; each
// stage preserves the narrow split and refines the wide one; all preserved
// narrows plus the last stage feed a 1x1 bottleneck, with a local residual.
struct Imdb {
    Conv2dLayer head;
    std::vector<Conv2dLayer> refine;
    Conv2dLayer bottleneck;
    int narrow, wide;
    double slope;

    Imdb(const std::string& name, int channels, int narrow_ch, int wide_ch, int stages,
         double leaky_slope = 0.1);

    Var forward(Tape& t, const Var& x) const;
    void collect(std::vector<Param*>& out);
    std::int64_t param_count() const;
    double flops(int h, int w) const;
    void kaiming_init(Rng& rng);

    int bottleneck_in() const { return bottleneck.c_in(); }
};

}  // namespace lfdf::net
