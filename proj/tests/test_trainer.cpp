#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "lfdf/lf_io.hpp"
#include "lfdf/synthlf.hpp"
#include "lfdf/trainer.hpp"

using namespace lfdf;
using namespace lfdf::train;

namespace {

net::NetworkConfig toy_net() {
    net::NetworkConfig c;
    c.angular = 3;
    c.channels = 4;
    c.align_stages = 1;
    c.recon_blocks = 1;
    c.alpha = 2;
    c.fem_stages = 1;
    c.aspp_per_module = 1;
    c.imdb_stages = 2;
    return c;
}

// A Y-channel HR/LR pair from a rendered scene patch.
Sample make_sample(std::uint64_t seed, int angular, int hr_size, int alpha) {
    synth::SceneSpec spec = synth::random_scene(seed, angular, hr_size, hr_size, 3);
    synth::RenderResult r = synth::render(spec, 1);
    LightField hr = rgb_to_y(r.lf);
    return Sample{degrade(hr, alpha), hr};
}

// L1 distance the trainer should report for a batch, computed directly from
// raw network outputs.
LightField raw_forward(const net::LFDFNet& net, const LightField& lr) {
    ad::Tape t(false);
    std::vector<ad::Var> outs = net.forward_vars(t, lr);
    const int A = lr.views_u(), a = net.config().alpha;
    LightField out(Tensor({A, A, lr.height() * a, lr.width() * a, 1}), ColorSpace::Y);
    for (int u = 0; u < A; ++u)
        for (int v = 0; v < A; ++v) out.set_view(u, v, outs[u * A + v]->val);
    return out;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name)
        : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string str() const { return path.string(); }
};

// Writes n rendered scenes in the dataset directory layout.
void write_dataset(const std::string& root, int n, int angular, int size,
                   std::uint64_t seed0) {
    for (int i = 0; i < n; ++i) {
        synth::SceneSpec spec = synth::random_scene(seed0 + i, angular, size, size, 3);
        synth::RenderResult r = synth::render(spec, 1);
        io::SceneMeta meta;
        meta.angular_res = {angular, angular};
        meta.spatial_res = {size, size};
        meta.baseline_mult = 1;
        meta.disparity_range = synth::disparity_range(spec, 1);
        char name[32];
        std::snprintf(name, sizeof name, "scene_%04d", i);
        io::save_scene((std::filesystem::path(root) / name).string(), r.lf, meta,
                       &r.disparity.data);
    }
}

}  // namespace

TEST_CASE("learning rate halves every 15 epochs from 2e-4") {
    TrainConfig cfg;
    CHECK(lr_at(cfg, 0) == doctest::Approx(2e-4).epsilon(1e-12));
    CHECK(lr_at(cfg, 14) == doctest::Approx(2e-4).epsilon(1e-12));
    CHECK(lr_at(cfg, 15) == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK(lr_at(cfg, 45) == doctest::Approx(2.5e-5).epsilon(1e-12));
    CHECK_THROWS(lr_at(cfg, -1));
    CHECK_THROWS(lr_at(cfg, cfg.total_epochs));
}

TEST_CASE("learning rate schedule is non-increasing with breaks only at multiples of 15") {
    TrainConfig cfg;
    for (int e = 1; e < cfg.total_epochs; ++e) {
        CHECK(lr_at(cfg, e) <= lr_at(cfg, e - 1));
        if (e % cfg.decay_every != 0)
            CHECK(lr_at(cfg, e) == lr_at(cfg, e - 1));
        else
            CHECK(lr_at(cfg, e) == doctest::Approx(0.5 * lr_at(cfg, e - 1)).epsilon(1e-12));
    }
}

TEST_CASE("train config validation and json roundtrip") {
    TrainConfig cfg;
    cfg.dataset_root = "/data/lf";
    cfg.out_dir = "/tmp/run";
    cfg.seed = 99;
    cfg.variant = net::Variant::no_dcn;
    CHECK_NOTHROW(cfg.validate());
    TrainConfig back = TrainConfig::from_json(cfg.to_json());
    CHECK(back.to_json() == cfg.to_json());

    TrainConfig bad = cfg;
    bad.patch_size = 33;  // not divisible by alpha=2
    CHECK_THROWS(bad.validate());
    bad = cfg;
    bad.batch_size = 0;
    CHECK_THROWS(bad.validate());
    bad = cfg;
    bad.decay_factor = 1.5;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("adam first step moves a parameter opposite its gradient at lr magnitude") {
    ad::Param p("w", Tensor({2}));
    p.value[0] = 1.0;
    p.value[1] = -2.0;
    std::vector<ad::Param*> params{&p};
    std::vector<Tensor> grads{Tensor({2})};
    grads[0][0] = 0.3;    // positive gradient: parameter must decrease
    grads[0][1] = -4.0;   // negative gradient: parameter must increase
    AdamState st;
    adam_update(params, grads, st, 1e-2);
    CHECK(st.steps == 1);
    // with bias correction the first step is lr * g/(|g|+eps) ~= lr * sign(g)
    CHECK(p.value[0] == doctest::Approx(1.0 - 1e-2).epsilon(1e-6));
    CHECK(p.value[1] == doctest::Approx(-2.0 + 1e-2).epsilon(1e-6));
}

TEST_CASE("adam state tracks repeated steps and rejects mismatched sizes") {
    ad::Param p("w", Tensor({1}));
    std::vector<ad::Param*> params{&p};
    std::vector<Tensor> g{Tensor({1})};
    g[0][0] = 1.0;
    AdamState st;
    for (int i = 0; i < 5; ++i) adam_update(params, g, st, 1e-3);
    CHECK(st.steps == 5);
    CHECK(p.value[0] < 0.0);

    std::vector<Tensor> wrong{Tensor({1}), Tensor({1})};
    CHECK_THROWS(adam_update(params, wrong, st, 1e-3));
}

TEST_CASE("batch loss is zero against the network's own output and |c| against a shift") {
    net::NetworkConfig nc = toy_net();
    net::LFDFNet model(nc);
    model.init_weights(7);
    Sample s = make_sample(31, nc.angular, 24, nc.alpha);
    LightField out = raw_forward(model, s.lr);

    Sample exact{s.lr, out};
    CHECK(batch_loss(model, {exact}) == doctest::Approx(0.0).epsilon(1e-15));

    LightField shifted = out;
    for (std::int64_t i = 0; i < shifted.data.numel(); ++i) shifted.data[i] += 0.125;
    Sample off{s.lr, shifted};
    CHECK(batch_loss(model, {off}) == doctest::Approx(0.125).epsilon(1e-12));

    CHECK(batch_loss(model, {exact, off}) == doctest::Approx(0.0625).epsilon(1e-12));
}

TEST_CASE("train step rejects malformed pairs and poisons abort loudly") {
    net::NetworkConfig nc = toy_net();
    net::LFDFNet model(nc);
    model.init_weights(3);
    AdamState adam;
    Sample s = make_sample(77, nc.angular, 24, nc.alpha);

    Sample bad = s;
    bad.hr = s.lr;  // HR size inconsistent with alpha
    CHECK_THROWS(train_step(model, adam, {bad}, 1e-4));
    CHECK_THROWS(train_step(model, adam, {}, 1e-4));

    model.params()[0]->value[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(train_step(model, adam, {s}, 1e-4), std::runtime_error);
}

TEST_CASE("train step lowers the loss on a fixed batch") {
    net::NetworkConfig nc = toy_net();
    net::LFDFNet model(nc);
    model.init_weights(11);
    AdamState adam;
    Sample s = make_sample(5, nc.angular, 24, nc.alpha);
    std::vector<Sample> batch{s};

    const double first = train_step(model, adam, batch, 1e-3);
    double last = first;
    for (int i = 0; i < 29; ++i) last = train_step(model, adam, batch, 1e-3);
    CHECK(adam.steps == 30);
    CHECK(last < first);
}

TEST_CASE("overfitting a single patch cuts the loss by at least 90 percent") {
    net::NetworkConfig nc = toy_net();
    net::LFDFNet model(nc);
    model.init_weights(2);
    AdamState adam;
    Sample s = make_sample(13, nc.angular, 32, nc.alpha);
    std::vector<Sample> batch{s};

    const double first = train_step(model, adam, batch, 2e-3);
    double last = first;
    for (int i = 0; i < 499; ++i) last = train_step(model, adam, batch, 2e-3);
    CHECK(last <= 0.1 * first);
}

TEST_CASE("symmetry draws cover the whole 8-element group") {
    Rng rng(123);
    std::set<int> seen;
    for (int i = 0; i < 300; ++i) {
        Symmetry s = draw_symmetry(rng);
        CHECK(s.rot90 >= 0);
        CHECK(s.rot90 < 4);
        seen.insert((s.flip_h ? 8 : 0) + (s.flip_v ? 4 : 0) + s.rot90);
    }
    CHECK(seen.size() == 8);
}

TEST_CASE("checkpoints roundtrip bit-identically and restore forward behavior") {
    TempDir dir("lfdf_ckpt_test");
    net::NetworkConfig nc = toy_net();
    net::LFDFNet model(nc);
    model.init_weights(21);
    AdamState adam;
    Sample s = make_sample(3, nc.angular, 24, nc.alpha);
    train_step(model, adam, {s}, 1e-3);
    train_step(model, adam, {s}, 1e-3);

    TrainConfig tc;
    tc.dataset_root = "unused";
    tc.out_dir = dir.str();
    const std::string prefix = dir.str() + "/ckpt_epoch_3";
    save_checkpoint(prefix, snapshot(model, adam, tc, 3, {0.5, 0.25, 0.125}));

    Checkpoint back = load_checkpoint(prefix);
    CHECK(back.epoch == 3);
    CHECK(back.adam_steps == 2);
    CHECK(back.history == std::vector<double>{0.5, 0.25, 0.125});
    CHECK(back.net_cfg.to_json() == nc.to_json());
    REQUIRE(back.names.size() == model.params().size());
    for (std::size_t i = 0; i < back.names.size(); ++i) {
        CHECK(back.names[i] == model.params()[i]->name);
        CHECK(max_abs_diff(back.values[i], model.params()[i]->value) == 0.0);
        CHECK(max_abs_diff(back.m[i], adam.m[i]) == 0.0);
        CHECK(max_abs_diff(back.v[i], adam.v[i]) == 0.0);
    }

    net::LFDFNet fresh(nc);
    fresh.init_weights(999);  // deliberately different weights
    AdamState fresh_adam;
    restore(back, fresh, &fresh_adam);
    CHECK(fresh_adam.steps == 2);
    LightField a = raw_forward(model, s.lr);
    LightField b = raw_forward(fresh, s.lr);
    CHECK(max_abs_diff(a.data, b.data) == 0.0);

    CHECK_THROWS(load_checkpoint(dir.str() + "/ckpt_epoch_9"));

    net::NetworkConfig other = nc;
    other.channels = 6;
    net::LFDFNet mismatched(other);
    mismatched.init_weights(1);
    CHECK_THROWS(restore(back, mismatched));
}

TEST_CASE("training patch loading tiles, converts to Y and crops the angular array") {
    TempDir data("lfdf_patch_data");
    write_dataset(data.str(), 2, 5, 64, 900);

    TrainConfig cfg;
    cfg.dataset_root = data.str();
    cfg.patch_size = 32;
    cfg.stride = 32;
    auto patches = load_training_patches(cfg, 3);
    CHECK(patches.size() == 8);  // 2 scenes x 2x2 tiling
    for (const LightField& p : patches) {
        CHECK(p.views_u() == 3);
        CHECK(p.views_v() == 3);
        CHECK(p.height() == 32);
        CHECK(p.width() == 32);
        CHECK(p.channels() == 1);
        CHECK(p.color_space == ColorSpace::Y);
    }

    TempDir empty("lfdf_patch_empty");
    TrainConfig none = cfg;
    none.dataset_root = empty.str();
    CHECK_THROWS(load_training_patches(none, 3));
}

TEST_CASE("fit runs deterministically, logs steps and resumes from a checkpoint") {
    TempDir data("lfdf_fit_data");
    write_dataset(data.str(), 2, 3, 64, 400);

    net::NetworkConfig nc = toy_net();
    TrainConfig cfg;
    cfg.dataset_root = data.str();
    cfg.batch_size = 4;
    cfg.total_epochs = 2;
    cfg.patch_size = 32;
    cfg.stride = 32;
    cfg.alpha = nc.alpha;
    cfg.seed = 77;
    cfg.lr0 = 1e-3;
    cfg.decay_every = 1;  // exercise the schedule inside two epochs

    TempDir run_a("lfdf_fit_a");
    cfg.out_dir = run_a.str();
    FitResult a = fit(cfg, nc);
    CHECK(a.steps_per_epoch == 2);
    REQUIRE(a.epoch_loss.size() == 2);
    CHECK(a.last_checkpoint == run_a.str() + "/ckpt_epoch_2");

    // the step log is JSON lines with the scheduled lr
    std::ifstream log(run_a.path / "train_log.jsonl");
    REQUIRE(log.good());
    std::string line;
    int lines = 0;
    while (std::getline(log, line)) {
        nlohmann::json j = nlohmann::json::parse(line);
        CHECK(j.at("step").get<int>() == lines + 1);
        const int epoch = j.at("epoch").get<int>();
        CHECK(j.at("lr").get<double>() == doctest::Approx(lr_at(cfg, epoch)).epsilon(1e-12));
        CHECK(std::isfinite(j.at("loss").get<double>()));
        ++lines;
    }
    CHECK(lines == 4);

    // same config, fresh directory: identical loss curve
    TempDir run_b("lfdf_fit_b");
    cfg.out_dir = run_b.str();
    FitResult b = fit(cfg, nc);
    CHECK(b.epoch_loss == a.epoch_loss);

    // resuming epoch 1's checkpoint replays epoch 2 exactly
    TempDir run_c("lfdf_fit_c");
    cfg.out_dir = run_c.str();
    FitResult c = fit(cfg, nc, run_a.str() + "/ckpt_epoch_1");
    REQUIRE(c.epoch_loss.size() == 2);
    CHECK(c.epoch_loss[0] == a.epoch_loss[0]);
    CHECK(c.epoch_loss[1] == a.epoch_loss[1]);
    Checkpoint fin_a = load_checkpoint(run_a.str() + "/ckpt_epoch_2");
    Checkpoint fin_c = load_checkpoint(run_c.str() + "/ckpt_epoch_2");
    REQUIRE(fin_a.values.size() == fin_c.values.size());
    for (std::size_t i = 0; i < fin_a.values.size(); ++i)
        CHECK(max_abs_diff(fin_a.values[i], fin_c.values[i]) == 0.0);

    // config mismatches are rejected up front
    TrainConfig wrong = cfg;
    wrong.alpha = 4;
    wrong.patch_size = 32;
    CHECK_THROWS(fit(wrong, nc));
    net::NetworkConfig other = nc;
    other.variant = net::Variant::no_dcn;
    CHECK_THROWS(fit(cfg, other));
    CHECK_THROWS(fit(cfg, nc, run_a.str() + "/ckpt_epoch_99"));
}
