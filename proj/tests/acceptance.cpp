// End-to-end acceptance run. Each numbered criterion prints one [PASS]/[FAIL]
// line with its measured values and pinned tolerances; the exit code is the
// number of failures. Artifacts (sweep table, figures) land in
// ./acceptance_artifacts next to the working directory of the run.

#include <sys/types.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "lfdf/evalkit.hpp"
#include "lfdf/figures.hpp"
#include "lfdf/lf_io.hpp"
#include "lfdf/network.hpp"
#include "lfdf/synthlf.hpp"
#include "lfdf/trainer.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace lfdf;

namespace {

struct Stopwatch {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    }
};

struct Outcome {
    bool pass = false;
    std::string detail;
};

// Shared between criteria: the toy model trained in #7 is reused by #8.
struct Context {
    fs::path scratch;
    fs::path artifacts;
    net::NetworkConfig toy_cfg;
    std::string toy_ckpt;  // set when criterion 7 finished training
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

Tensor random_tensor(Rng& rng, std::vector<int> shape, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    rng.fill_uniform(t, lo, hi);
    return t;
}

void save_rendered(const fs::path& root, int index, const synth::SceneSpec& spec) {
    synth::RenderResult r = synth::render(spec, 1);
    io::SceneMeta meta;
    meta.angular_res = {spec.angular, spec.angular};
    meta.spatial_res = {spec.height, spec.width};
    meta.baseline_mult = 1;
    char name[32];
    std::snprintf(name, sizeof name, "scene_%04d", index);
    io::save_scene((root / name).string(), r.lf, meta);
}

// Renders scenes drawn from the generator into an on-disk dataset.
void write_scene_set(const fs::path& root, std::uint64_t seed0, int count, int angular,
                     int h, int w) {
    for (int i = 0; i < count; ++i)
        save_rendered(root, i,
                      synth::random_scene(Rng::mix(seed0, static_cast<std::uint64_t>(i)),
                                          angular, h, w, 2));
}

// Checker-heavy layered scenes for the learning criterion: fine cells alias
// under bicubic, and the sub-pixel view shifts carry recoverable detail, so
// a learned model has real headroom over the single-view baseline.
synth::SceneSpec toy_scene(std::uint64_t seed) {
    using synth::MaskSpec;
    using synth::TextureSpec;
    Rng rng(Rng::mix(seed, 0xcafe));
    synth::SceneSpec s;
    s.angular = 3;
    s.height = 64;
    s.width = 64;
    s.unit_disparity = 0.35;
    s.seed = seed;

    synth::Layer bg;
    bg.depth = 4.0;
    bg.texture = TextureSpec{TextureSpec::Kind::checker, rng.uniform(3.0, 4.5), 1};
    s.layers.push_back(bg);

    synth::Layer mid;
    mid.depth = 2.0;
    mid.texture = TextureSpec{TextureSpec::Kind::checker, rng.uniform(2.5, 3.5), 2};
    mid.mask.kind = MaskSpec::Kind::rect;
    mid.mask.y0 = rng.uniform(4.0, 16.0);
    mid.mask.x0 = rng.uniform(4.0, 16.0);
    mid.mask.h = rng.uniform(20.0, 34.0);
    mid.mask.w = rng.uniform(20.0, 34.0);
    s.layers.push_back(mid);

    synth::Layer near;
    near.depth = 1.2;
    near.texture = TextureSpec{TextureSpec::Kind::checker, rng.uniform(3.5, 5.0), 3};
    near.mask.kind = MaskSpec::Kind::disk;
    near.mask.cy = rng.uniform(20.0, 44.0);
    near.mask.cx = rng.uniform(20.0, 44.0);
    near.mask.r = rng.uniform(8.0, 14.0);
    s.layers.push_back(near);
    return s;
}

void write_toy_set(const fs::path& root, std::uint64_t seed0, int count) {
    for (int i = 0; i < count; ++i)
        save_rendered(root, i, toy_scene(Rng::mix(seed0, static_cast<std::uint64_t>(i))));
}

// ---- 1: zero-offset deformable conv is a rigid conv --------------------

Outcome criterion1() {
    constexpr double kTol = 1e-6;
    constexpr double kBudget = 60.0;
    constexpr int kInstances = 50;
    Stopwatch sw;
    Rng rng(101);
    double worst = 0.0;
    for (int trial = 0; trial < kInstances; ++trial) {
        const int h = 3 + static_cast<int>(rng.below(8));
        const int w = 3 + static_cast<int>(rng.below(8));
        const int cin = 1 + static_cast<int>(rng.below(4));
        const int cout = 1 + static_cast<int>(rng.below(4));
        Tensor f = random_tensor(rng, {h, w, cin});
        dconv::ConvKernel kn(cout, cin, 3);
        rng.fill_uniform(kn.weights, -0.5, 0.5);
        rng.fill_uniform(kn.bias, -0.5, 0.5);
        dconv::OffsetField of;
        of.data = Tensor({h, w, 18});
        worst = std::max(worst, max_abs_diff(dconv::deform_conv2d(f, of, kn),
                                             oracle::conv2d(f, kn.weights, kn.bias)));
    }
    const double t = sw.seconds();
    Outcome o;
    o.pass = worst < kTol && t < kBudget;
    o.detail = "worst |diff| " + fmt(worst) + " over " + std::to_string(kInstances) +
               " instances in " + fmt(t) + "s (tol " + fmt(kTol) + ", budget " +
               fmt(kBudget) + "s)";
    return o;
}

// ---- 2: deformable conv gradients vs finite differences -----------------

Outcome criterion2() {
    constexpr double kTol = 1e-4;  // relative, with a 1e-3 magnitude floor
    constexpr double kBudget = 120.0;
    constexpr int kInstances = 20;
    constexpr double kStep = 1e-5;
    Stopwatch sw;
    Rng rng(202);
    double worst = 0.0;
    std::int64_t coords = 0;

    auto rel = [](double got, double want) {
        return std::abs(got - want) /
               std::max({std::abs(got), std::abs(want), 1e-3});
    };

    for (int trial = 0; trial < kInstances; ++trial) {
        const int h = 6, w = 6, cin = 2, cout = 2;
        Tensor f = random_tensor(rng, {h, w, cin});
        dconv::ConvKernel kn(cout, cin, 3);
        rng.fill_uniform(kn.weights, -0.5, 0.5);
        rng.fill_uniform(kn.bias, -0.5, 0.5);
        // keep every sampling coordinate strictly between integers so the
        // loss stays smooth under the probe step
        dconv::OffsetField of;
        of.kernel_size = 3;
        of.data = Tensor({h, w, 18});
        for (std::int64_t i = 0; i < of.data.numel(); ++i) {
            double v = rng.uniform(-1.2, 1.2);
            const double frac = v - std::floor(v);
            if (frac < 0.25) v += 0.25 - frac;
            if (frac > 0.75) v -= frac - 0.75;
            of.data[i] = v;
        }
        Tensor seed = random_tensor(rng, {h, w, cout});
        auto loss = [&] {
            Tensor out = dconv::deform_conv2d(f, of, kn);
            double acc = 0.0;
            for (std::int64_t i = 0; i < out.numel(); ++i) acc += out[i] * seed[i];
            return acc;
        };
        dconv::DeformConvGrads g = dconv::deform_conv2d_grad(f, of, kn, seed);

        for (std::int64_t i = 0; i < f.numel(); ++i, ++coords)
            worst = std::max(worst, rel(g.d_feature[i], oracle::central_fd(loss, f[i], kStep)));
        for (std::int64_t i = 0; i < kn.weights.numel(); ++i, ++coords)
            worst = std::max(worst,
                             rel(g.d_weights[i], oracle::central_fd(loss, kn.weights[i], kStep)));
        for (std::int64_t i = 0; i < kn.bias.numel(); ++i, ++coords)
            worst = std::max(worst, rel(g.d_bias[i], oracle::central_fd(loss, kn.bias[i], kStep)));
        for (std::int64_t i = 0; i < of.data.numel(); ++i, ++coords)
            worst = std::max(worst,
                             rel(g.d_offsets[i], oracle::central_fd(loss, of.data[i], kStep)));
    }
    const double t = sw.seconds();
    Outcome o;
    o.pass = worst < kTol && t < kBudget;
    o.detail = "worst rel err " + fmt(worst) + " over " + std::to_string(coords) +
               " coordinates, " + std::to_string(kInstances) + " instances in " + fmt(t) +
               "s (tol " + fmt(kTol) + " with 1e-3 floor, budget " + fmt(kBudget) + "s)";
    return o;
}

// ---- 3: offsets start at zero and sampling starts rigid -----------------

Outcome criterion3() {
    constexpr double kTol = 1e-6;
    net::NetworkConfig cfg;
    cfg.angular = 3;
    cfg.channels = 8;
    cfg.align_stages = 2;
    cfg.recon_blocks = 1;
    net::LFDFNet model(cfg);
    model.init_weights(303);

    Rng rng(304);
    LightField lr(random_tensor(rng, {3, 3, 12, 14, 1}, 0.0, 1.0), ColorSpace::Y);

    net::ViewFeatures feats = model.feature_extract(lr);
    double worst_offset = 0.0;
    for (int s = 0; s < cfg.align_stages; ++s)
        for (const Tensor& side : feats.sides) {
            dconv::OffsetField of = model.offsets_for(s, side, feats.center);
            for (std::int64_t i = 0; i < of.data.numel(); ++i)
                worst_offset = std::max(worst_offset, std::abs(of.data[i]));
        }

    LightField deform = model.forward(lr, false);
    LightField rigid = model.forward(lr, true);
    const double diff = max_abs_diff(deform.data, rigid.data);

    Outcome o;
    o.pass = worst_offset == 0.0 && diff < kTol;
    o.detail = "max |offset| " + fmt(worst_offset) +
               " (exactly zero required), deform-vs-rigid first forward |diff| " +
               fmt(diff) + " (tol " + fmt(kTol) + ")";
    return o;
}

// ---- 4: structural contract ---------------------------------------------

Outcome criterion4() {
    std::ostringstream why;
    bool ok = true;

    {  // 18 offset channels and an A^2 C fused feature, probed on a live stage
        net::NetworkConfig cfg;
        cfg.angular = 3;
        cfg.channels = 8;
        cfg.align_stages = 1;
        cfg.recon_blocks = 1;
        if (cfg.offset_channels() != 18) {
            ok = false;
            why << "offset channels " << cfg.offset_channels() << " != 18; ";
        }
        net::LFDFNet model(cfg);
        model.init_weights(404);
        Rng rng(405);
        LightField lr(random_tensor(rng, {3, 3, 10, 10, 1}, 0.0, 1.0), ColorSpace::Y);
        net::ViewFeatures feats = model.feature_extract(lr);
        dconv::OffsetField of = model.offsets_for(0, feats.sides[0], feats.center);
        if (of.data.dim(2) != 18) {
            ok = false;
            why << "offset field carries " << of.data.dim(2) << " channels; ";
        }
        ad::Tape t(false);
        net::StageFeatures sf;
        sf.center = t.input(feats.center);
        for (const Tensor& s : feats.sides) sf.sides.push_back(t.input(s));
        ad::Var fused = model.stages[0]->collect(t, sf);
        if (fused->val.dim(2) != cfg.fused_channels()) {
            ok = false;
            why << "fused channels " << fused->val.dim(2) << " != A^2*C = "
                << cfg.fused_channels() << "; ";
        }
        // the same kernel object must serve collection and distribution
        const ad::Param* shared = &model.stages[0]->dconv_w;
        int registered = 0;
        for (const ad::Param* p : model.params())
            if (p == shared) ++registered;
        if (registered != 1) {
            ok = false;
            why << "stage kernel registered " << registered << " times; ";
        }
    }

    for (int a : {3, 5})  // shape contract across angular and scale
        for (int alpha : {2, 4}) {
            net::NetworkConfig cfg;
            cfg.angular = a;
            cfg.channels = 4;
            cfg.align_stages = 1;
            cfg.recon_blocks = 1;
            cfg.alpha = alpha;
            cfg.fem_stages = 1;
            cfg.aspp_per_module = 1;
            cfg.imdb_stages = 2;
            net::LFDFNet model(cfg);
            model.init_weights(406);
            const int h = 6, w = 8;
            Rng rng(407);
            LightField lr(random_tensor(rng, {a, a, h, w, 1}, 0.0, 1.0), ColorSpace::Y);
            LightField sr = model.forward(lr);
            const bool good = sr.views_u() == a && sr.views_v() == a &&
                              sr.height() == alpha * h && sr.width() == alpha * w &&
                              sr.channels() == 1;
            if (!good) {
                ok = false;
                why << "A=" << a << " alpha=" << alpha << " produced [" << sr.views_u()
                    << "," << sr.views_v() << "," << sr.height() << "," << sr.width()
                    << "," << sr.channels() << "]; ";
            }
        }

    Outcome o;
    o.pass = ok;
    o.detail = ok ? "18 offset channels, A^2*C fusion, one shared kernel per stage, "
                    "[A,A,H,W,1]->[A,A,aH,aW,1] for A in {3,5} x alpha in {2,4}"
                  : why.str();
    return o;
}

// ---- 5: ablation variants cut the claimed connections -------------------

Outcome criterion5() {
    std::ostringstream why;
    bool ok = true;

    auto make = [](net::Variant v) {
        net::NetworkConfig cfg;
        cfg.angular = 3;
        cfg.channels = 4;
        cfg.align_stages = 1;
        cfg.recon_blocks = 1;
        cfg.fem_stages = 1;
        cfg.aspp_per_module = 1;
        cfg.imdb_stages = 2;
        cfg.variant = v;
        auto net = std::make_unique<net::LFDFNet>(cfg);
        net->init_weights(505);
        return net;
    };
    Rng rng(506);
    LightField base(random_tensor(rng, {3, 3, 8, 8, 1}, 0.0, 1.0), ColorSpace::Y);

    auto poke = [&](int u, int v) {
        LightField lf = base;
        Tensor view = lf.view(u, v);
        for (std::int64_t i = 0; i < view.numel(); ++i)
            view[i] = std::min(1.0, view[i] + 0.25);
        lf.set_view(u, v, view);
        return lf;
    };

    {  // no_adam: every output view is a function of its own input view only
        auto model = make(net::Variant::no_adam);
        LightField a = model->forward(base);
        LightField b = model->forward(poke(0, 1));
        for (int u = 0; u < 3 && ok; ++u)
            for (int v = 0; v < 3 && ok; ++v) {
                const double d = max_abs_diff(a.view(u, v), b.view(u, v));
                if (u == 0 && v == 1) {
                    if (d == 0.0) {
                        ok = false;
                        why << "no_adam: poked view did not change; ";
                    }
                } else if (d != 0.0) {
                    ok = false;
                    why << "no_adam: view (" << u << "," << v
                        << ") moved by " << fmt(d) << " when (0,1) changed; ";
                }
            }
    }
    if (ok) {  // no_dist: side views never see each other
        auto model = make(net::Variant::no_dist);
        LightField a = model->forward(base);
        LightField b = model->forward(poke(0, 1));
        const double other_side = max_abs_diff(a.view(2, 2), b.view(2, 2));
        const double poked = max_abs_diff(a.view(0, 1), b.view(0, 1));
        if (other_side != 0.0) {
            ok = false;
            why << "no_dist: side (2,2) moved by " << fmt(other_side)
                << " when side (0,1) changed; ";
        }
        if (poked == 0.0) {
            ok = false;
            why << "no_dist: poked side did not change; ";
        }
        // sanity: the full variant does propagate across sides
        auto full = make(net::Variant::full);
        const double full_cross =
            max_abs_diff(full->forward(base).view(2, 2), full->forward(poke(0, 1)).view(2, 2));
        if (full_cross == 0.0) {
            ok = false;
            why << "full variant failed to propagate side-to-side; ";
        }
    }

    Outcome o;
    o.pass = ok;
    o.detail = ok ? "no_adam is per-view bit-isolated; no_dist keeps sides mutually "
                    "isolated while full propagates (exact zero-diff checks)"
                  : why.str();
    return o;
}

// ---- 6: parameter counts ------------------------------------------------

Outcome criterion6() {
    constexpr double kReference = 3.94e6;  // design budget of the 5x5, alpha=2 model
    net::NetworkConfig cfg;  // production defaults: A=5, C=32, K=3, N=4
    net::LFDFNet full(cfg);
    const std::int64_t full_params = full.param_count();

    net::NetworkConfig nd = cfg;
    nd.variant = net::Variant::no_dcn;
    net::LFDFNet no_dcn(nd);

    bool ok = no_dcn.param_count() < full_params;
    std::ostringstream detail;
    detail << "full " << full_params << " (" << fmt(100.0 * (full_params - kReference) / kReference)
           << "% vs 3.94M reference), no_dcn " << no_dcn.param_count();

    std::int64_t prev = -1;
    detail << ", K sweep";
    for (int k = 1; k <= 4; ++k) {
        net::NetworkConfig ck = cfg;
        ck.align_stages = k;
        net::LFDFNet m(ck);
        detail << " " << m.param_count();
        if (m.param_count() <= prev) ok = false;
        prev = m.param_count();
    }
    if (!ok) detail << " [ordering violated]";

    Outcome o;
    o.pass = ok;
    o.detail = detail.str() + " (no_dcn < full and strictly increasing in K asserted; "
                              "absolute size reported, not asserted)";
    return o;
}

// ---- 7: the toy recipe learns -------------------------------------------

Outcome criterion7(Context& ctx) {
    constexpr double kWallBudget = 1200.0;  // 20 minutes
    constexpr int kStepCap = 1500;
    constexpr double kLossRatio = 0.5;
    constexpr double kPsnrMargin = 0.3;  // dB over bicubic on held-out scenes
    Stopwatch sw;

    const fs::path train_root = ctx.scratch / "c7_train";
    const fs::path held_root = ctx.scratch / "c7_held";
    write_toy_set(train_root, 700, 8);
    write_toy_set(held_root, 900, 2);

    net::NetworkConfig nc;
    nc.angular = 3;
    nc.channels = 8;
    nc.align_stages = 1;
    nc.recon_blocks = 1;
    nc.alpha = 2;

    train::TrainConfig tc;
    tc.batch_size = 6;
    tc.lr0 = 2e-3;
    tc.decay_every = 40;
    tc.total_epochs = 100;
    tc.patch_size = 32;
    tc.stride = 16;
    tc.alpha = 2;
    tc.seed = 7;
    tc.dataset_root = train_root.string();
    tc.out_dir = (ctx.scratch / "c7_run").string();

    train::FitResult fit = train::fit(tc, nc);
    const int steps = fit.steps_per_epoch * tc.total_epochs;
    const double first = fit.epoch_loss.front();
    const double last = fit.epoch_loss.back();

    train::Checkpoint ckpt = train::load_checkpoint(fit.last_checkpoint);
    net::LFDFNet model(ckpt.net_cfg);
    train::restore(ckpt, model);
    eval::NetResolver net_res(&model, "toy");
    eval::BicubicResolver cubic;
    const double net_psnr = eval::evaluate(net_res, held_root.string(), 2).mean.psnr;
    const double cubic_psnr = eval::evaluate(cubic, held_root.string(), 2).mean.psnr;
    const double t = sw.seconds();

    ctx.toy_cfg = nc;
    ctx.toy_ckpt = fit.last_checkpoint;

    Outcome o;
    o.pass = steps <= kStepCap && t < kWallBudget && last < kLossRatio * first &&
             net_psnr >= cubic_psnr + kPsnrMargin;
    o.detail = std::to_string(steps) + " steps (cap " + std::to_string(kStepCap) +
               "), wall " + fmt(t) + "s (budget " + fmt(kWallBudget) + "s), loss " +
               fmt(first) + " -> " + fmt(last) + " (need < " + fmt(kLossRatio) +
               "x), held-out " + fmt(net_psnr) + " dB vs bicubic " + fmt(cubic_psnr) +
               " dB (margin " + fmt(net_psnr - cubic_psnr) + ", need >= " +
               fmt(kPsnrMargin) + ")";
    return o;
}

// ---- 8: baseline sweep with generator self-checks -----------------------

Outcome criterion8(const Context& ctx) {
    constexpr double kSlopeTol = 0.1;  // px/view on a single-surface scene
    std::ostringstream why;
    bool ok = true;

    synth::SceneSpec scene = synth::random_scene(808, 3, 64, 64, 3);
    const std::vector<int> kds{0, 1, 2, 3, 4};

    // generator assertion: the center view never moves with baseline
    synth::RenderResult at1 = synth::render(scene, 1);
    const int cu = scene.angular / 2;
    for (int kd : kds) {
        synth::RenderResult r = synth::render(scene, kd);
        const double d = max_abs_diff(r.lf.view(cu, cu), at1.lf.view(cu, cu));
        if (d != 0.0) {
            ok = false;
            why << "center view moved by " << fmt(d) << " at kd=" << kd << "; ";
        }
    }
    // generator assertion: disparity ranges scale exactly with the baseline
    const auto r1 = synth::disparity_range(scene, 1);
    const auto r2 = synth::disparity_range(scene, 2);
    const auto r0 = synth::disparity_range(scene, 0);
    if (r0 != std::pair<double, double>{0.0, 0.0}) {
        ok = false;
        why << "kd=0 range not exactly zero; ";
    }
    if (r2.first != 2.0 * r1.first || r2.second != 2.0 * r1.second) {
        ok = false;
        why << "kd=2 range is not exactly twice kd=1; ";
    }
    // generator assertion: EPI slope equals disparity on a one-surface scene
    synth::SceneSpec flat;
    flat.angular = 5;
    flat.height = 24;
    flat.width = 32;
    flat.unit_disparity = 0.9;
    flat.seed = 81;
    flat.layers.push_back(
        {1.0, synth::TextureSpec{synth::TextureSpec::Kind::noise, 6.0, 3},
         synth::MaskSpec{}});
    double slope_err = 0.0;
    for (int kd : {1, 2}) {
        synth::RenderResult fr = synth::render(flat, kd);
        Tensor epi = synth::epi_extract(fr.lf, synth::EpiAxis::row, 12, 2);
        slope_err = std::max(slope_err,
                             std::abs(synth::estimate_epi_slope(epi) - 0.9 * kd));
    }
    if (slope_err >= kSlopeTol) {
        ok = false;
        why << "EPI slope off by " << fmt(slope_err) << "; ";
    }

    // the sweep table itself, over bicubic plus the toy model from #7
    std::vector<const eval::SuperResolver*> models;
    eval::BicubicResolver cubic;
    models.push_back(&cubic);
    std::unique_ptr<net::LFDFNet> toy;
    std::unique_ptr<eval::NetResolver> toy_res;
    if (!ctx.toy_ckpt.empty()) {
        train::Checkpoint ckpt = train::load_checkpoint(ctx.toy_ckpt);
        toy = std::make_unique<net::LFDFNet>(ckpt.net_cfg);
        train::restore(ckpt, *toy);
        toy_res = std::make_unique<eval::NetResolver>(toy.get(), "toy");
        models.push_back(toy_res.get());
    }
    eval::SweepTable table = eval::disparity_sweep(models, scene, kds, 2);
    io::write_text((ctx.artifacts / "sweep.csv").string(), table.to_csv());
    io::write_text((ctx.artifacts / "sweep.json").string(),
                   table.to_json().dump(2) + "\n");
    std::vector<double> xs(kds.begin(), kds.end());
    fig::save_polyline_svg((ctx.artifacts / "psnr_vs_kd.svg").string(), xs, table.psnr,
                           table.models, "baseline multiplier", "psnr (dB)");
    for (int kd : kds) {
        synth::RenderResult r = synth::render(scene, kd);
        Tensor epi = synth::epi_extract(r.lf, synth::EpiAxis::row, scene.height / 2,
                                        scene.angular / 2);
        fig::save_epi_strip_png(
            (ctx.artifacts / ("epi_kd" + std::to_string(kd) + ".png")).string(), epi);
    }

    std::ostringstream trend;  // reported, never asserted
    for (std::size_t m = 0; m < table.models.size(); ++m) {
        trend << " | " << table.models[m] << ":";
        for (double v : table.psnr[m]) trend << " " << fmt(v);
    }

    Outcome o;
    o.pass = ok;
    o.detail = (ok ? "center fixed, ranges scale exactly, slope err " + fmt(slope_err) +
                         " < " + fmt(kSlopeTol)
                   : why.str()) +
               "; psnr-vs-kd trend (dB, reported only)" + trend.str() +
               "; artifacts in " + ctx.artifacts.string();
    return o;
}

// ---- 9: metric definitions ----------------------------------------------

Outcome criterion9(const Context& ctx) {
    constexpr double kPsnrTol = 1e-9;
    std::ostringstream why;
    bool ok = true;

    LightField a(Tensor::full({3, 3, 16, 16, 1}, 0.5), ColorSpace::Y);
    LightField b(Tensor::full({3, 3, 16, 16, 1}, 0.6), ColorSpace::Y);
    const double p = eval::psnr_y(a.view(0, 0), b.view(0, 0));
    if (std::abs(p - 20.0) > kPsnrTol) {
        ok = false;
        why << "psnr(0.5 vs 0.6) = " << fmt(p) << "; ";
    }

    Rng rng(909);
    Tensor img = random_tensor(rng, {16, 16, 1}, 0.0, 1.0);
    const double s = eval::ssim(img, img);
    if (s != 1.0) {
        ok = false;
        why << "ssim(x, x) = " << fmt(s) << "; ";
    }

    // aggregation: identity at alpha=1 makes every view infinite, and those
    // views must be counted rather than averaged
    const fs::path root = ctx.scratch / "c9_data";
    write_scene_set(root, 950, 2, 3, 24, 24);
    eval::IdentityResolver ident;
    eval::MetricReport inf_rep = eval::evaluate(ident, root.string(), 1);
    if (inf_rep.infinite_psnr_views != 2 * 9) {
        ok = false;
        why << "counted " << inf_rep.infinite_psnr_views << " infinite views, want 18; ";
    }
    if (std::isfinite(inf_rep.mean.psnr)) {
        ok = false;
        why << "all-lossless dataset mean psnr came out finite; ";
    }
    if (inf_rep.mean.ssim != 1.0) {
        ok = false;
        why << "lossless ssim mean " << fmt(inf_rep.mean.ssim) << " != 1; ";
    }

    // aggregation: scene means and the dataset mean recompute exactly from
    // the per-view grid, in the same left-to-right order
    eval::BicubicResolver cubic;
    eval::MetricReport rep = eval::evaluate(cubic, root.string(), 2);
    double scene_acc = 0.0;
    for (const eval::SceneReport& sr : rep.scenes) {
        double acc = 0.0;
        int n = 0;
        for (const eval::ViewScore& v : sr.grid)
            if (std::isfinite(v.psnr)) {
                acc += v.psnr;
                ++n;
            }
        if (acc / n != sr.mean.psnr) {
            ok = false;
            why << "scene " << sr.scene_id << " mean is not the exact grid mean; ";
        }
        scene_acc += sr.mean.psnr;
    }
    if (scene_acc / static_cast<double>(rep.scenes.size()) != rep.mean.psnr) {
        ok = false;
        why << "dataset mean is not the exact mean of scene means; ";
    }

    Outcome o;
    o.pass = ok;
    o.detail = ok ? "psnr(0.5,0.6) = " + fmt(p) + " within " + fmt(kPsnrTol) +
                        " of 20, ssim(x,x) == 1, infinite views counted (18/18), "
                        "aggregation recomputes exactly"
                  : why.str();
    return o;
}

// ---- 10: determinism and checkpoint round-trips -------------------------

Outcome criterion10(const Context& ctx) {
    std::ostringstream why;
    bool ok = true;

    const fs::path data = ctx.scratch / "c10_data";
    write_scene_set(data, 1000, 2, 3, 48, 48);

    net::NetworkConfig nc;
    nc.angular = 3;
    nc.channels = 4;
    nc.align_stages = 1;
    nc.recon_blocks = 1;
    nc.fem_stages = 1;
    nc.aspp_per_module = 1;
    nc.imdb_stages = 2;

    train::TrainConfig tc;
    tc.batch_size = 4;
    tc.lr0 = 5e-4;
    tc.total_epochs = 3;
    tc.patch_size = 24;
    tc.stride = 24;
    tc.seed = 123;
    tc.dataset_root = data.string();

    auto run = [&](const std::string& dir, const std::string& resume = "") {
        train::TrainConfig c = tc;
        c.out_dir = (ctx.scratch / dir).string();
        return train::fit(c, nc, resume);
    };

    train::FitResult r1 = run("c10_a");
    train::FitResult r2 = run("c10_b");
    if (r1.epoch_loss != r2.epoch_loss) {
        ok = false;
        why << "same seed produced different loss curves; ";
    }
    if (io::read_text((ctx.scratch / "c10_a" / "train_log.jsonl").string()) !=
        io::read_text((ctx.scratch / "c10_b" / "train_log.jsonl").string())) {
        ok = false;
        why << "training logs differ between identical runs; ";
    }
    const std::string bin_a = r1.last_checkpoint + ".bin";
    if (io::read_text(bin_a) != io::read_text(r2.last_checkpoint + ".bin")) {
        ok = false;
        why << "final checkpoints differ between identical runs; ";
    }

    // save -> load -> save must reproduce the byte stream
    train::Checkpoint c = train::load_checkpoint(r1.last_checkpoint);
    const std::string resaved = (ctx.scratch / "c10_resave").string();
    train::save_checkpoint(resaved, c);
    if (io::read_text(bin_a) != io::read_text(resaved + ".bin")) {
        ok = false;
        why << "save/load/save changed checkpoint bytes; ";
    }

    // a run resumed from epoch 1 must land exactly where the straight run did
    train::FitResult resumed =
        run("c10_resume", (ctx.scratch / "c10_a" / "ckpt_epoch_1").string());
    if (resumed.epoch_loss != r1.epoch_loss) {
        ok = false;
        why << "resumed loss history diverged; ";
    }
    if (io::read_text(bin_a) != io::read_text(resumed.last_checkpoint + ".bin")) {
        ok = false;
        why << "resumed final checkpoint differs from the straight run; ";
    }

    Outcome o;
    o.pass = ok;
    o.detail = ok ? "loss curves, logs and checkpoint bytes identical across reruns; "
                    "save/load/save and resume-from-epoch-1 both bit-exact"
                  : why.str();
    return o;
}

}  // namespace

int main() {
    Context ctx;
    ctx.scratch = fs::temp_directory_path() /
                  ("lfdf_acceptance_" + std::to_string(::getpid()));
    ctx.artifacts = fs::current_path() / "acceptance_artifacts";
    fs::create_directories(ctx.scratch);
    fs::create_directories(ctx.artifacts);

    using Entry = std::pair<const char*, std::function<Outcome()>>;
    const std::vector<Entry> criteria{
        {"zero-offset deformable conv equals rigid conv", [&] { return criterion1(); }},
        {"deformable conv gradients match finite differences", [&] { return criterion2(); }},
        {"offsets start at zero and sampling starts rigid", [&] { return criterion3(); }},
        {"structural contract (channels, fusion, sharing, shapes)",
         [&] { return criterion4(); }},
        {"variant isolation (no_adam, no_dist)", [&] { return criterion5(); }},
        {"parameter counts (no_dcn < full, monotone in K)", [&] { return criterion6(); }},
        {"toy training beats bicubic on held-out scenes", [&] { return criterion7(ctx); }},
        {"baseline sweep with generator self-checks", [&] { return criterion8(ctx); }},
        {"metric definitions and exact aggregation", [&] { return criterion9(ctx); }},
        {"determinism and checkpoint round-trips", [&] { return criterion10(ctx); }},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("threw: ") + e.what();
        }
        if (!o.pass) ++failures;
        std::printf("[%s] %2zu %s | %s\n", o.pass ? "PASS" : "FAIL", i + 1,
                    criteria[i].first, o.detail.c_str());
        std::fflush(stdout);
    }

    fs::remove_all(ctx.scratch);
    if (failures == 0)
        std::printf("all %zu acceptance criteria hold\n", criteria.size());
    else
        std::printf("%d of %zu acceptance criteria failed\n", failures, criteria.size());
    return failures;
}
