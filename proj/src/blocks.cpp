#include "lfdf/blocks.hpp"

#include <cmath>
#include <stdexcept>

namespace lfdf::net {

void Conv2dLayer::kaiming_init(Rng& rng, double slope) {
    const double fan_in = static_cast<double>(c_in()) * k() * k();
    const double std = std::sqrt(2.0 / ((1.0 + slope * slope) * fan_in));
    rng.fill_normal(w.value, std);
    b.value.fill(0.0);
}

void Conv2dLayer::zero_init() {
    w.value.fill(0.0);
    b.value.fill(0.0);
}

Var ResidualBlock::forward(Tape& t, const Var& x) const {
    Var y = ad::leaky_relu(t, c1.forward(t, x), slope);
    y = c2.forward(t, y);
    return ad::add(t, y, x);
}

void ResidualBlock::collect(std::vector<Param*>& out) {
    c1.collect(out);
    c2.collect(out);
}

void ResidualBlock::kaiming_init(Rng& rng) {
    c1.kaiming_init(rng, slope);
    c2.kaiming_init(rng, slope);
}

ResidualAsppBlock::ResidualAsppBlock(const std::string& name, int channels,
                                     double leaky_slope, const int* dilations) {
    static const int kDefault[3] = {1, 2, 4};
    const int* d = dilations ? dilations : kDefault;
    d1 = Conv2dLayer(name + ".d1", channels, channels, 3, d[0]);
    d2 = Conv2dLayer(name + ".d2", channels, channels, 3, d[1]);
    d4 = Conv2dLayer(name + ".d4", channels, channels, 3, d[2]);
    fuse = Conv2dLayer(name + ".fuse", channels, 3 * channels, 1);
    slope = leaky_slope;
}

Var ResidualAsppBlock::forward(Tape& t, const Var& x) const {
    Var a = ad::leaky_relu(t, d1.forward(t, x), slope);
    Var b2 = ad::leaky_relu(t, d2.forward(t, x), slope);
    Var c = ad::leaky_relu(t, d4.forward(t, x), slope);
    Var y = fuse.forward(t, ad::concat_c(t, {a, b2, c}));
    return ad::add(t, y, x);
}

void ResidualAsppBlock::collect(std::vector<Param*>& out) {
    d1.collect(out);
    d2.collect(out);
    d4.collect(out);
    fuse.collect(out);
}

void ResidualAsppBlock::kaiming_init(Rng& rng) {
    d1.kaiming_init(rng, slope);
    d2.kaiming_init(rng, slope);
    d4.kaiming_init(rng, slope);
    fuse.kaiming_init(rng, slope);
}

std::vector<std::unique_ptr<SpatialBlock>> make_spatial_chain(const std::string& name,
                                                              int count, int channels,
                                                              bool use_aspp,
                                                              double leaky_slope) {
    std::vector<std::unique_ptr<SpatialBlock>> chain;
    chain.reserve(count);
    for (int i = 0; i < count; ++i) {
        const std::string n = name + "." + std::to_string(i);
        if (use_aspp)
            chain.push_back(std::make_unique<ResidualAsppBlock>(n, channels, leaky_slope));
        else
            chain.push_back(std::make_unique<ResidualBlock>(n, channels, leaky_slope));
    }
    return chain;
}

Imdb::Imdb(const std::string& name, int channels, int narrow_ch, int wide_ch, int stages,
           double leaky_slope)
    : narrow(narrow_ch), wide(wide_ch), slope(leaky_slope) {
    if (stages < 1) throw std::invalid_argument("Imdb: stages must be >= 1");
    const int refined = narrow_ch + wide_ch;
    head = Conv2dLayer(name + ".head", refined, channels, 3);
    for (int s = 0; s < stages; ++s)
        refine.emplace_back(name + ".refine." + std::to_string(s), refined, wide_ch, 3);
    bottleneck = Conv2dLayer(name + ".bottleneck", channels,
                             stages * narrow_ch + refined, 1);
}

Var Imdb::forward(Tape& t, const Var& x) const {
    Var cur = ad::leaky_relu(t, head.forward(t, x), slope);
    std::vector<Var> kept;
    for (const Conv2dLayer& r : refine) {
        kept.push_back(ad::slice_c(t, cur, 0, narrow));
        Var widef = ad::slice_c(t, cur, narrow, wide);
        cur = ad::leaky_relu(t, r.forward(t, widef), slope);
    }
    kept.push_back(cur);
    Var y = bottleneck.forward(t, ad::concat_c(t, kept));
    return ad::add(t, y, x);
}

void Imdb::collect(std::vector<Param*>& out) {
    head.collect(out);
    for (Conv2dLayer& r : refine) r.collect(out);
    bottleneck.collect(out);
}

std::int64_t Imdb::param_count() const {
    std::int64_t n = head.param_count() + bottleneck.param_count();
    for (const Conv2dLayer& r : refine) n += r.param_count();
    return n;
}

double Imdb::flops(int h, int w) const {
    double f = head.flops(h, w) + bottleneck.flops(h, w);
    for (const Conv2dLayer& r : refine) f += r.flops(h, w);
    return f;
}

void Imdb::kaiming_init(Rng& rng) {
    head.kaiming_init(rng, slope);
    for (Conv2dLayer& r : refine) r.kaiming_init(rng, slope);
    bottleneck.kaiming_init(rng, slope);
}

}  // namespace lfdf::net
