#include "lfdf/network.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace lfdf::net {

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::no_dcn: return "no_dcn";
        case Variant::no_adam: return "no_adam";
        case Variant::no_dist: return "no_dist";
        case Variant::no_aspp_fem: return "no_aspp_fem";
        case Variant::no_aspp_ofb: return "no_aspp_ofb";
    }
    return "full";
}

Variant variant_from_name(const std::string& s) {
    for (Variant v : {Variant::full, Variant::no_dcn, Variant::no_adam, Variant::no_dist,
                      Variant::no_aspp_fem, Variant::no_aspp_ofb})
        if (s == variant_name(v)) return v;
    throw std::invalid_argument("unknown variant: " + s);
}

void NetworkConfig::validate() const {
    if (angular < 1 || angular % 2 == 0)
        throw std::invalid_argument("NetworkConfig: angular must be odd and positive");
    if (channels < 1) throw std::invalid_argument("NetworkConfig: channels must be positive");
    if (align_stages < 0 || recon_blocks < 0 || fem_stages < 0)
        throw std::invalid_argument("NetworkConfig: negative stage count");
    if (alpha < 1) throw std::invalid_argument("NetworkConfig: alpha must be >= 1");
    if (aspp_per_module < 1 || imdb_stages < 1)
        throw std::invalid_argument("NetworkConfig: module sizes must be >= 1");
    if (!(leaky_slope > 0.0) || leaky_slope >= 1.0)
        throw std::invalid_argument("NetworkConfig: leaky_slope out of range");
}

nlohmann::json NetworkConfig::to_json() const {
    return {{"angular", angular},
            {"channels", channels},
            {"align_stages", align_stages},
            {"recon_blocks", recon_blocks},
            {"alpha", alpha},
            {"variant", variant_name(variant)},
            {"fem_stages", fem_stages},
            {"aspp_per_module", aspp_per_module},
            {"imdb_stages", imdb_stages},
            {"leaky_slope", leaky_slope}};
}

NetworkConfig NetworkConfig::from_json(const nlohmann::json& j) {
    NetworkConfig c;
    c.angular = j.value("angular", c.angular);
    c.channels = j.value("channels", c.channels);
    c.align_stages = j.value("align_stages", c.align_stages);
    c.recon_blocks = j.value("recon_blocks", c.recon_blocks);
    c.alpha = j.value("alpha", c.alpha);
    if (j.contains("variant")) c.variant = variant_from_name(j.at("variant").get<std::string>());
    c.fem_stages = j.value("fem_stages", c.fem_stages);
    c.aspp_per_module = j.value("aspp_per_module", c.aspp_per_module);
    c.imdb_stages = j.value("imdb_stages", c.imdb_stages);
    c.leaky_slope = j.value("leaky_slope", c.leaky_slope);
    c.validate();
    return c;
}

namespace {

void kaiming_tensor(Rng& rng, Tensor& w, double slope) {
    const double fan_in = static_cast<double>(w.dim(1)) * w.dim(2) * w.dim(3);
    rng.fill_normal(w, std::sqrt(2.0 / ((1.0 + slope * slope) * fan_in)));
}

}  // namespace

OffsetBranch::OffsetBranch(const std::string& name, int channels, int offset_ch,
                           bool use_aspp, int chain_len, double leaky_slope)
    : reduce(name + ".reduce", channels, 2 * channels, 1),
      head(name + ".head", offset_ch, channels, 1), slope(leaky_slope) {
    chain = make_spatial_chain(name + ".chain", chain_len, channels, use_aspp, leaky_slope);
}

Var OffsetBranch::forward(Tape& t, const Var& src, const Var& ref) const {
    Var x = ad::concat_c(t, {src, ref});
    x = ad::leaky_relu(t, reduce.forward(t, x), slope);
    for (const auto& b : chain) x = b->forward(t, x);
    return head.forward(t, x);
}

void OffsetBranch::collect(std::vector<Param*>& out) {
    reduce.collect(out);
    for (auto& b : chain) b->collect(out);
    head.collect(out);
}

std::int64_t OffsetBranch::param_count() const {
    std::int64_t n = reduce.param_count() + head.param_count();
    for (const auto& b : chain) n += b->param_count();
    return n;
}

double OffsetBranch::flops(int h, int w) const {
    double f = reduce.flops(h, w) + head.flops(h, w);
    for (const auto& b : chain) f += b->flops(h, w);
    return f;
}

void OffsetBranch::init(Rng& rng) {
    reduce.kaiming_init(rng, slope);
    for (auto& b : chain) b->kaiming_init(rng);
    head.zero_init();
}

AlignStage::AlignStage(const std::string& name, const NetworkConfig& c)
    : cfg(c), dconv_w(name + ".dconv.w",
                      Tensor({c.channels, c.channels, NetworkConfig::kernel,
                              NetworkConfig::kernel})),
      dconv_b(name + ".dconv.b", Tensor({c.channels})),
      fuse(name + ".fuse", c.fused_channels(), c.fused_channels(), 1),
      squeeze(name + ".squeeze", c.channels, 2 * c.channels, 1) {
    if (c.variant != Variant::no_dcn)
        offsets = OffsetBranch(name + ".offsets", c.channels, c.offset_channels(),
                               c.variant != Variant::no_aspp_ofb, c.aspp_per_module,
                               c.leaky_slope);
    if (c.variant == Variant::no_dist)
        side_block = std::make_unique<ResidualBlock>(name + ".side", c.channels,
                                                     c.leaky_slope);
}

Var AlignStage::align(Tape& t, const Var& src, const Var& ref, bool force_rigid) const {
    if (cfg.variant == Variant::no_dcn || force_rigid)
        return ad::conv2d(t, src, dconv_w, dconv_b);
    Var off = offsets.forward(t, src, ref);
    return ad::deform_conv2d(t, src, off, dconv_w, dconv_b);
}

Var AlignStage::collect(Tape& t, const StageFeatures& in, bool force_rigid) const {
    std::vector<Var> parts;
    parts.reserve(in.sides.size() + 1);
    for (const Var& s : in.sides) parts.push_back(align(t, s, in.center, force_rigid));
    parts.push_back(in.center);  // center closes the concat
    return fuse.forward(t, ad::concat_c(t, parts));
}

StageFeatures AlignStage::distribute(Tape& t, const Var& fused, const StageFeatures& in,
                                     bool force_rigid) const {
    const int C = cfg.channels;
    const int n_sides = static_cast<int>(in.sides.size());
    StageFeatures out;
    out.sides.reserve(in.sides.size());
    for (int i = 0; i < n_sides; ++i) {
        if (side_block) {  // collection-only wiring: sides stay per-view
            out.sides.push_back(side_block->forward(t, in.sides[static_cast<std::size_t>(i)]));
            continue;
        }
        Var slice = ad::slice_c(t, fused, i * C, C);
        Var aligned = align(t, slice, in.sides[static_cast<std::size_t>(i)], force_rigid);
        out.sides.push_back(squeeze.forward(
            t, ad::concat_c(t, {aligned, in.sides[static_cast<std::size_t>(i)]})));
    }
    Var cslice = ad::slice_c(t, fused, n_sides * C, C);
    out.center = squeeze.forward(t, ad::concat_c(t, {cslice, in.center}));
    return out;
}

StageFeatures AlignStage::forward(Tape& t, const StageFeatures& in, bool force_rigid) const {
    Var fused = collect(t, in, force_rigid);
    return distribute(t, fused, in, force_rigid);
}

void AlignStage::collect_params(std::vector<Param*>& out) {
    if (cfg.variant != Variant::no_dcn) offsets.collect(out);
    out.push_back(&dconv_w);
    out.push_back(&dconv_b);
    fuse.collect(out);
    squeeze.collect(out);
    if (side_block) side_block->collect(out);
}

std::int64_t AlignStage::param_count() const {
    std::int64_t n = dconv_w.value.numel() + dconv_b.value.numel() + fuse.param_count() +
                     squeeze.param_count();
    if (cfg.variant != Variant::no_dcn) n += offsets.param_count();
    if (side_block) n += side_block->param_count();
    return n;
}

double AlignStage::flops(int h, int w) const {
    const int C = cfg.channels;
    const int k = NetworkConfig::kernel;
    const int n_sides = cfg.angular * cfg.angular - 1;
    const double px = static_cast<double>(h) * w;
    // one deformable conv: k² bilinear reads of C channels (4 MACs each),
    // then the usual k²·C·C accumulate
    const double dconv_flops = 2.0 * px * k * k * (4.0 * C + static_cast<double>(C) * C);

    double f = fuse.flops(h, w);
    if (side_block) {
        f += n_sides * (offsets.flops(h, w) + dconv_flops);  // collection only
        f += squeeze.flops(h, w);                            // center update
        f += n_sides * side_block->flops(h, w);
    } else if (cfg.variant == Variant::no_dcn) {
        const double rigid = 2.0 * px * k * k * static_cast<double>(C) * C;
        f += 2.0 * n_sides * rigid;
        f += (n_sides + 1) * squeeze.flops(h, w);
    } else {
        f += 2.0 * n_sides * (offsets.flops(h, w) + dconv_flops);
        f += (n_sides + 1) * squeeze.flops(h, w);
    }
    return f;
}

void AlignStage::init(Rng& rng) {
    if (cfg.variant != Variant::no_dcn) offsets.init(rng);
    kaiming_tensor(rng, dconv_w.value, cfg.leaky_slope);
    dconv_b.value.fill(0.0);
    fuse.kaiming_init(rng, cfg.leaky_slope);
    squeeze.kaiming_init(rng, cfg.leaky_slope);
    if (side_block) side_block->kaiming_init(rng);
}

LFDFNet::LFDFNet(const NetworkConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const int C = cfg_.channels;
    fem_head = Conv2dLayer("fem.head", C, 1, 1);
    const bool fem_aspp = cfg_.variant != Variant::no_aspp_fem;
    for (int s = 0; s < cfg_.fem_stages; ++s) {
        const std::string base = "fem.stage" + std::to_string(s);
        auto aspp = make_spatial_chain(base + ".aspp", cfg_.aspp_per_module, C, fem_aspp,
                                       cfg_.leaky_slope);
        for (auto& b : aspp) fem_chain.push_back(std::move(b));
        fem_chain.push_back(
            std::make_unique<ResidualBlock>(base + ".res", C, cfg_.leaky_slope));
    }

    for (int k = 0; k < cfg_.align_stages; ++k) {
        const std::string base = "stage" + std::to_string(k);
        if (cfg_.variant == Variant::no_adam)
            sisr_stages.push_back(
                std::make_unique<ResidualBlock>(base + ".sisr", C, cfg_.leaky_slope));
        else
            stages.push_back(std::make_unique<AlignStage>(base, cfg_));
    }

    recon_adapter = Conv2dLayer("recon.adapter", C, (cfg_.align_stages + 1) * C, 1);
    for (int n = 0; n < cfg_.recon_blocks; ++n)
        imdbs.emplace_back("recon.imdb" + std::to_string(n), C, C, 3 * C, cfg_.imdb_stages,
                           cfg_.leaky_slope);
    up_extend = Conv2dLayer("recon.up", cfg_.alpha * cfg_.alpha * C, C, 1);
    final_conv = Conv2dLayer("recon.final", 1, C, 1);

    build_param_registry();
}

void LFDFNet::build_param_registry() {
    params_.clear();
    fem_head.collect(params_);
    for (auto& b : fem_chain) b->collect(params_);
    for (auto& s : stages) s->collect_params(params_);
    for (auto& s : sisr_stages) s->collect(params_);
    recon_adapter.collect(params_);
    for (auto& b : imdbs) b.collect(params_);
    up_extend.collect(params_);
    final_conv.collect(params_);

    std::unordered_set<std::string> names;
    for (const Param* p : params_)
        if (!names.insert(p->name).second)
            throw std::logic_error("duplicate parameter name: " + p->name);
}

Param* LFDFNet::find_param(const std::string& name) {
    for (Param* p : params_)
        if (p->name == name) return p;
    return nullptr;
}

void LFDFNet::init_weights(std::uint64_t seed) {
    init_seed_ = seed;
    Rng rng(seed);
    fem_head.kaiming_init(rng, cfg_.leaky_slope);
    for (auto& b : fem_chain) b->kaiming_init(rng);
    for (auto& s : stages) s->init(rng);
    for (auto& s : sisr_stages) s->kaiming_init(rng);
    recon_adapter.kaiming_init(rng, cfg_.leaky_slope);
    for (auto& b : imdbs) b.kaiming_init(rng);
    up_extend.kaiming_init(rng, cfg_.leaky_slope);
    final_conv.kaiming_init(rng, cfg_.leaky_slope);
}

StageFeatures LFDFNet::extract_vars(Tape& t, const LightField& lr) const {
    const int A = cfg_.angular;
    const int ci = cfg_.center_index();
    StageFeatures out;
    for (int u = 0; u < A; ++u)
        for (int v = 0; v < A; ++v) {
            Var x = t.input(lr.view(u, v));
            x = ad::leaky_relu(t, fem_head.forward(t, x), cfg_.leaky_slope);
            for (const auto& b : fem_chain) x = b->forward(t, x);
            if (u == ci && v == ci)
                out.center = x;
            else
                out.sides.push_back(x);
        }
    return out;
}

Var LFDFNet::reconstruct_view(Tape& t, const std::vector<Var>& stage_feats,
                              const Tensor& lr_view) const {
    Var x = stage_feats.size() == 1 ? stage_feats[0] : ad::concat_c(t, stage_feats);
    x = ad::leaky_relu(t, recon_adapter.forward(t, x), cfg_.leaky_slope);
    for (const Imdb& b : imdbs) x = b.forward(t, x);
    x = up_extend.forward(t, x);
    x = ad::pixel_shuffle(t, x, cfg_.alpha);
    x = final_conv.forward(t, x);
    Tensor skip = resize_bicubic(lr_view, cfg_.alpha, false);
    return ad::add_const(t, x, skip);
}

std::vector<Var> LFDFNet::forward_vars(Tape& t, const LightField& lr,
                                       bool force_rigid) const {
    const int A = cfg_.angular;
    if (lr.views_u() != A || lr.views_v() != A)
        throw std::invalid_argument("forward: angular size mismatch");
    if (lr.channels() != 1)
        throw std::invalid_argument("forward: expected a single-channel light field");

    // history[k] holds every view's feature after stage k
    std::vector<StageFeatures> history;
    history.reserve(static_cast<std::size_t>(cfg_.align_stages) + 1);
    history.push_back(extract_vars(t, lr));

    for (int k = 0; k < cfg_.align_stages; ++k) {
        const StageFeatures& prev = history.back();
        if (cfg_.variant == Variant::no_adam) {
            StageFeatures nxt;
            nxt.center = sisr_stages[static_cast<std::size_t>(k)]->forward(t, prev.center);
            for (const Var& s : prev.sides)
                nxt.sides.push_back(sisr_stages[static_cast<std::size_t>(k)]->forward(t, s));
            history.push_back(std::move(nxt));
        } else {
            history.push_back(
                stages[static_cast<std::size_t>(k)]->forward(t, prev, force_rigid));
        }
    }

    const int ci = cfg_.center_index();
    std::vector<Var> out;
    out.reserve(static_cast<std::size_t>(A) * A);
    int side = 0;
    for (int u = 0; u < A; ++u)
        for (int v = 0; v < A; ++v) {
            const bool is_center = (u == ci && v == ci);
            std::vector<Var> feats;
            feats.reserve(history.size());
            for (const StageFeatures& h : history)
                feats.push_back(is_center ? h.center
                                          : h.sides[static_cast<std::size_t>(side)]);
            out.push_back(reconstruct_view(t, feats, lr.view(u, v)));
            if (!is_center) ++side;
        }
    return out;
}

LightField LFDFNet::forward(const LightField& lr, bool force_rigid) const {
    Tape t(false);
    std::vector<Var> views = forward_vars(t, lr, force_rigid);
    const int A = cfg_.angular;
    const int H2 = lr.height() * cfg_.alpha, W2 = lr.width() * cfg_.alpha;
    LightField out(Tensor({A, A, H2, W2, 1}), ColorSpace::Y, lr.value_range);
    std::size_t idx = 0;
    for (int u = 0; u < A; ++u)
        for (int v = 0; v < A; ++v, ++idx) {
            Tensor img = views[idx]->val;
            for (std::int64_t i = 0; i < img.numel(); ++i)
                img[i] = std::clamp(img[i], lr.value_range.lo, lr.value_range.hi);
            out.set_view(u, v, img);
        }
    return out;
}

ViewFeatures LFDFNet::feature_extract(const LightField& lr) const {
    Tape t(false);
    StageFeatures f = extract_vars(t, lr);
    ViewFeatures out;
    out.center = f.center->val;
    for (const Var& s : f.sides) out.sides.push_back(s->val);
    return out;
}

dconv::OffsetField LFDFNet::offsets_for(int stage, const Tensor& src,
                                        const Tensor& ref) const {
    if (stage < 0 || stage >= static_cast<int>(stages.size()))
        throw std::out_of_range("offsets_for: no such stage");
    if (cfg_.variant == Variant::no_dcn)
        throw std::logic_error("offsets_for: this variant has no offset branch");
    Tape t(false);
    Var off = stages[static_cast<std::size_t>(stage)]->offsets.forward(t, t.input(src),
                                                                       t.input(ref));
    dconv::OffsetField f;
    f.kernel_size = NetworkConfig::kernel;
    f.data = off->val;
    return f;
}

std::int64_t LFDFNet::param_count() const {
    std::int64_t n = 0;
    for (const Param* p : params_) n += p->value.numel();
    return n;
}

double LFDFNet::estimate_flops(int h, int w) const {
    const int A2 = cfg_.angular * cfg_.angular;
    double f = static_cast<double>(A2) * fem_head.flops(h, w);
    for (const auto& b : fem_chain) f += static_cast<double>(A2) * b->flops(h, w);
    for (const auto& s : stages) f += s->flops(h, w);
    for (const auto& s : sisr_stages) f += static_cast<double>(A2) * s->flops(h, w);
    double recon = recon_adapter.flops(h, w);
    for (const Imdb& b : imdbs) recon += b.flops(h, w);
    recon += up_extend.flops(h, w);
    recon += final_conv.flops(h * cfg_.alpha, w * cfg_.alpha);
    return f + static_cast<double>(A2) * recon;
}

nlohmann::json LFDFNet::manifest() const {
    return {{"config", cfg_.to_json()},
            {"param_count", param_count()},
            {"init_seed", init_seed_},
            {"design", {{"global_residual", "bicubic"},
                        {"fuse_concat_order", "sides-raster-then-center"},
                        {"squeeze_concat_order", "fused-then-previous"},
                        {"offset_branch_inputs", "source-then-reference"},
                        {"recon_concat_order", "stage-ascending"},
                        {"init", "kaiming-leaky, zero offset head"}}}};
}

}  // namespace lfdf::net
