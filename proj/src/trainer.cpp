#include "lfdf/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "lfdf/lf_io.hpp"

namespace fs = std::filesystem;

namespace lfdf::train {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;

}  // namespace

void TrainConfig::validate() const {
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size < 1");
    if (!(lr0 > 0.0)) throw std::invalid_argument("TrainConfig: lr0 must be positive");
    if (!(decay_factor > 0.0) || decay_factor > 1.0)
        throw std::invalid_argument("TrainConfig: decay_factor must be in (0, 1]");
    if (decay_every < 1) throw std::invalid_argument("TrainConfig: decay_every < 1");
    if (total_epochs < 0) throw std::invalid_argument("TrainConfig: total_epochs < 0");
    if (patch_size < 1 || stride < 1)
        throw std::invalid_argument("TrainConfig: patch geometry must be positive");
    if (alpha < 1) throw std::invalid_argument("TrainConfig: alpha < 1");
    if (patch_size % alpha != 0)
        throw std::invalid_argument("TrainConfig: patch_size must be divisible by alpha");
}

nlohmann::json TrainConfig::to_json() const {
    return {{"batch_size", batch_size},
            {"lr0", lr0},
            {"decay_factor", decay_factor},
            {"decay_every", decay_every},
            {"total_epochs", total_epochs},
            {"patch_size", patch_size},
            {"stride", stride},
            {"alpha", alpha},
            {"seed", seed},
            {"dataset_root", dataset_root},
            {"out_dir", out_dir},
            {"variant", net::variant_name(variant)}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.batch_size = j.value("batch_size", c.batch_size);
    c.lr0 = j.value("lr0", c.lr0);
    c.decay_factor = j.value("decay_factor", c.decay_factor);
    c.decay_every = j.value("decay_every", c.decay_every);
    c.total_epochs = j.value("total_epochs", c.total_epochs);
    c.patch_size = j.value("patch_size", c.patch_size);
    c.stride = j.value("stride", c.stride);
    c.alpha = j.value("alpha", c.alpha);
    c.seed = j.value("seed", c.seed);
    c.dataset_root = j.value("dataset_root", c.dataset_root);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.variant = net::variant_from_name(j.value("variant", "full"));
    c.validate();
    return c;
}

double lr_at(const TrainConfig& cfg, int epoch) {
    if (epoch < 0 || epoch >= cfg.total_epochs)
        throw std::out_of_range("lr_at: epoch outside [0, total_epochs)");
    return cfg.lr0 * std::pow(cfg.decay_factor, epoch / cfg.decay_every);
}

void AdamState::init(const std::vector<ad::Param*>& params) {
    m.clear();
    v.clear();
    m.reserve(params.size());
    v.reserve(params.size());
    for (const ad::Param* p : params) {
        m.push_back(Tensor(p->value.shape()));
        v.push_back(Tensor(p->value.shape()));
    }
    steps = 0;
}

void adam_update(const std::vector<ad::Param*>& params, const std::vector<Tensor>& grads,
                 AdamState& state, double lr) {
    if (state.empty()) state.init(params);
    if (grads.size() != params.size() || state.m.size() != params.size())
        throw std::invalid_argument("adam_update: state/gradient size mismatch");
    state.steps += 1;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(state.steps));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(state.steps));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& w = params[i]->value;
        Tensor& mi = state.m[i];
        Tensor& vi = state.v[i];
        const Tensor& g = grads[i];
        for (std::int64_t j = 0; j < w.numel(); ++j) {
            mi[j] = kBeta1 * mi[j] + (1.0 - kBeta1) * g[j];
            vi[j] = kBeta2 * vi[j] + (1.0 - kBeta2) * g[j] * g[j];
            w[j] -= lr * (mi[j] / bc1) / (std::sqrt(vi[j] / bc2) + kEps);
        }
    }
}

namespace {

void check_pair(const net::NetworkConfig& cfg, const Sample& s) {
    const int A = cfg.angular, a = cfg.alpha;
    if (s.lr.views_u() != A || s.lr.views_v() != A || s.hr.views_u() != A ||
        s.hr.views_v() != A)
        throw std::invalid_argument("train: sample angular size does not match the network");
    if (s.lr.channels() != 1 || s.hr.channels() != 1)
        throw std::invalid_argument("train: samples must be Y-channel light fields");
    if (s.hr.height() != s.lr.height() * a || s.hr.width() != s.lr.width() * a)
        throw std::invalid_argument("train: HR/LR sizes inconsistent with alpha");
}

// Scalar L1 over all views of one sample; usable on recording and
// non-recording tapes alike.
ad::Var sample_loss(ad::Tape& t, const net::LFDFNet& net, const Sample& s) {
    std::vector<ad::Var> outs = net.forward_vars(t, s.lr);
    const int A = s.hr.views_u();
    std::vector<ad::Var> per_view;
    per_view.reserve(outs.size());
    for (int u = 0; u < A; ++u)
        for (int v = 0; v < A; ++v)
            per_view.push_back(ad::mean_abs_error(t, outs[u * A + v], s.hr.view(u, v)));
    return ad::mean_scalars(t, per_view);
}

}  // namespace

double batch_loss(const net::LFDFNet& net, const std::vector<Sample>& batch) {
    if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
    double sum = 0.0;
    for (const Sample& s : batch) {
        check_pair(net.config(), s);
        ad::Tape t(false);
        sum += sample_loss(t, net, s)->val[0];
    }
    return sum / static_cast<double>(batch.size());
}

double train_step(net::LFDFNet& net, AdamState& adam, const std::vector<Sample>& batch,
                  double lr) {
    if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
    const std::vector<ad::Param*>& params = net.params();
    std::vector<Tensor> grads;
    grads.reserve(params.size());
    for (const ad::Param* p : params) grads.push_back(Tensor(p->value.shape()));

    double loss_sum = 0.0;
    for (const Sample& s : batch) {
        check_pair(net.config(), s);
        ad::Tape t(true);
        ad::Var loss = sample_loss(t, net, s);
        t.backward(loss);
        loss_sum += loss->val[0];
        std::vector<Tensor> g = t.grads_of(params);
        for (std::size_t i = 0; i < grads.size(); ++i)
            for (std::int64_t j = 0; j < grads[i].numel(); ++j) grads[i][j] += g[i][j];
    }
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    const double loss = loss_sum * inv_b;
    if (!std::isfinite(loss))
        throw std::runtime_error("train_step: non-finite loss " + std::to_string(loss));
    for (Tensor& g : grads)
        for (std::int64_t j = 0; j < g.numel(); ++j) g[j] *= inv_b;
    adam_update(params, grads, adam, lr);
    return loss;
}

Symmetry draw_symmetry(Rng& rng) {
    static const std::vector<Symmetry> group = augmentation_group();
    return group[static_cast<std::size_t>(rng.below(static_cast<std::int64_t>(group.size())))];
}

void save_checkpoint(const std::string& prefix, const Checkpoint& c) {
    nlohmann::json tensors = nlohmann::json::array();
    std::int64_t total = 0;
    for (std::size_t i = 0; i < c.names.size(); ++i) {
        tensors.push_back({{"name", c.names[i]}, {"shape", c.values[i].shape()}});
        total += c.values[i].numel();
    }
    nlohmann::json j{{"format_version", c.version},
                     {"epoch", c.epoch},
                     {"adam_steps", c.adam_steps},
                     {"network", c.net_cfg.to_json()},
                     {"train", c.train_cfg.to_json()},
                     {"manifest", c.manifest},
                     {"history", c.history},
                     {"tensors", tensors},
                     {"blob_doubles", 3 * total}};
    io::write_text(prefix + ".json", j.dump(2) + "\n");

    std::ofstream f(prefix + ".bin", std::ios::binary);
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + prefix + ".bin");
    auto dump = [&f](const std::vector<Tensor>& ts) {
        for (const Tensor& t : ts)
            f.write(reinterpret_cast<const char*>(t.data()),
                    static_cast<std::streamsize>(t.numel() * sizeof(double)));
    };
    dump(c.values);
    dump(c.m);
    dump(c.v);
    if (!f) throw std::runtime_error("save_checkpoint: write failed for " + prefix + ".bin");
}

Checkpoint load_checkpoint(const std::string& prefix) {
    nlohmann::json j = nlohmann::json::parse(io::read_text(prefix + ".json"));
    Checkpoint c;
    c.version = j.at("format_version").get<int>();
    if (c.version != 1)
        throw std::runtime_error("load_checkpoint: unsupported format version");
    c.epoch = j.at("epoch").get<int>();
    c.adam_steps = j.at("adam_steps").get<std::int64_t>();
    c.net_cfg = net::NetworkConfig::from_json(j.at("network"));
    c.train_cfg = TrainConfig::from_json(j.at("train"));
    c.manifest = j.value("manifest", nlohmann::json::object());
    c.history = j.value("history", std::vector<double>{});

    std::int64_t total = 0;
    for (const auto& tj : j.at("tensors")) {
        c.names.push_back(tj.at("name").get<std::string>());
        std::vector<int> shape = tj.at("shape").get<std::vector<int>>();
        c.values.push_back(Tensor(shape));
        c.m.push_back(Tensor(shape));
        c.v.push_back(Tensor(shape));
        total += c.values.back().numel();
    }
    if (j.at("blob_doubles").get<std::int64_t>() != 3 * total)
        throw std::runtime_error("load_checkpoint: manifest/blob size mismatch");

    std::ifstream f(prefix + ".bin", std::ios::binary);
    if (!f) throw std::runtime_error("load_checkpoint: cannot open " + prefix + ".bin");
    auto slurp = [&f, &prefix](std::vector<Tensor>& ts) {
        for (Tensor& t : ts) {
            f.read(reinterpret_cast<char*>(t.data()),
                   static_cast<std::streamsize>(t.numel() * sizeof(double)));
            if (!f) throw std::runtime_error("load_checkpoint: truncated " + prefix + ".bin");
        }
    };
    slurp(c.values);
    slurp(c.m);
    slurp(c.v);
    return c;
}

Checkpoint snapshot(const net::LFDFNet& net, const AdamState& adam,
                    const TrainConfig& train_cfg, int epoch, std::vector<double> history) {
    Checkpoint c;
    c.epoch = epoch;
    c.net_cfg = net.config();
    c.train_cfg = train_cfg;
    c.manifest = net.manifest();
    c.history = std::move(history);
    c.adam_steps = adam.steps;
    const std::vector<ad::Param*>& params = net.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
        c.names.push_back(params[i]->name);
        c.values.push_back(params[i]->value);
        c.m.push_back(adam.empty() ? Tensor(params[i]->value.shape()) : adam.m[i]);
        c.v.push_back(adam.empty() ? Tensor(params[i]->value.shape()) : adam.v[i]);
    }
    return c;
}

void restore(const Checkpoint& c, net::LFDFNet& net, AdamState* adam) {
    std::vector<ad::Param*>& params = net.params();
    if (c.names.size() != params.size())
        throw std::runtime_error("restore: checkpoint has a different parameter count");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (c.names[i] != params[i]->name)
            throw std::runtime_error("restore: parameter name mismatch at " + c.names[i]);
        if (c.values[i].shape() != params[i]->value.shape())
            throw std::runtime_error("restore: shape mismatch at " + c.names[i]);
        params[i]->value = c.values[i];
    }
    if (adam) {
        adam->m = c.m;
        adam->v = c.v;
        adam->steps = c.adam_steps;
    }
}

std::vector<LightField> load_training_patches(const TrainConfig& cfg, int angular) {
    std::vector<std::string> scenes = io::list_scenes(cfg.dataset_root);
    if (scenes.empty())
        throw std::runtime_error("load_training_patches: no scenes under " +
                                 cfg.dataset_root);
    std::vector<LightField> patches;
    for (const std::string& dir : scenes) {
        LightField lf = io::load_scene(dir);
        LightField y = lf.color_space == ColorSpace::RGB ? rgb_to_y(lf) : lf;
        if (y.views_u() != angular || y.views_v() != angular)
            y = crop_angular(y, angular);
        for (LightField& p : extract_patches(y, cfg.patch_size, cfg.stride))
            patches.push_back(std::move(p));
    }
    if (patches.empty())
        throw std::runtime_error("load_training_patches: scenes smaller than one patch");
    return patches;
}

FitResult fit(const TrainConfig& train_cfg, const net::NetworkConfig& net_cfg,
              const std::string& resume) {
    train_cfg.validate();
    net_cfg.validate();
    if (train_cfg.alpha != net_cfg.alpha)
        throw std::invalid_argument("fit: train/network alpha disagree");
    if (train_cfg.variant != net_cfg.variant)
        throw std::invalid_argument("fit: train/network variant disagree");
    if (train_cfg.out_dir.empty()) throw std::invalid_argument("fit: out_dir not set");

    net::LFDFNet net(net_cfg);
    AdamState adam;
    int epochs_done = 0;
    std::vector<double> history;
    if (resume.empty()) {
        net.init_weights(train_cfg.seed);
        adam.init(net.params());
    } else {
        Checkpoint c = load_checkpoint(resume);
        if (c.net_cfg.to_json() != net_cfg.to_json())
            throw std::runtime_error("fit: resume checkpoint was trained on another config");
        restore(c, net, &adam);
        epochs_done = c.epoch;
        history = c.history;
    }

    if (epochs_done >= train_cfg.total_epochs) {
        // nothing left to run, but still leave a loadable checkpoint behind
        fs::create_directories(train_cfg.out_dir);
        FitResult result;
        result.epoch_loss = history;
        result.last_checkpoint =
            (fs::path(train_cfg.out_dir) / ("ckpt_epoch_" + std::to_string(epochs_done)))
                .string();
        save_checkpoint(result.last_checkpoint,
                        snapshot(net, adam, train_cfg, epochs_done, history));
        return result;
    }

    std::vector<LightField> patches = load_training_patches(train_cfg, net_cfg.angular);
    const int n = static_cast<int>(patches.size());
    const int steps_per_epoch = (n + train_cfg.batch_size - 1) / train_cfg.batch_size;

    fs::create_directories(train_cfg.out_dir);
    std::ofstream log(fs::path(train_cfg.out_dir) / "train_log.jsonl",
                      resume.empty() ? std::ios::trunc : std::ios::app);
    if (!log) throw std::runtime_error("fit: cannot open training log");

    FitResult result;
    result.epoch_loss = history;
    result.steps_per_epoch = steps_per_epoch;

    for (int epoch = epochs_done; epoch < train_cfg.total_epochs; ++epoch) {
        // every epoch gets its own stream so a resumed run replays the same draws
        Rng rng(Rng::mix(train_cfg.seed, static_cast<std::uint64_t>(epoch)));
        std::vector<int> order(patches.size());
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);

        const double lr = lr_at(train_cfg, epoch);
        double epoch_sum = 0.0;
        int epoch_steps = 0;
        for (int start = 0; start < n; start += train_cfg.batch_size) {
            const int end = std::min(n, start + train_cfg.batch_size);
            std::vector<Sample> batch;
            batch.reserve(static_cast<std::size_t>(end - start));
            for (int i = start; i < end; ++i) {
                LightField hr = augment(patches[static_cast<std::size_t>(order[i])],
                                        draw_symmetry(rng));
                Sample s{degrade(hr, train_cfg.alpha), std::move(hr)};
                batch.push_back(std::move(s));
            }
            double loss = 0.0;
            try {
                loss = train_step(net, adam, batch, lr);
            } catch (const std::exception& e) {
                throw std::runtime_error("fit: epoch " + std::to_string(epoch) + " step " +
                                         std::to_string(epoch_steps + 1) + ": " + e.what());
            }
            epoch_sum += loss;
            epoch_steps += 1;
            const std::int64_t step =
                static_cast<std::int64_t>(epoch) * steps_per_epoch + epoch_steps;
            log << nlohmann::json{{"step", step}, {"epoch", epoch}, {"lr", lr},
                                  {"loss", loss}}
                       .dump()
                << "\n";
        }
        log.flush();

        result.epoch_loss.push_back(epoch_sum / std::max(1, epoch_steps));
        const std::string prefix =
            (fs::path(train_cfg.out_dir) / ("ckpt_epoch_" + std::to_string(epoch + 1)))
                .string();
        save_checkpoint(prefix,
                        snapshot(net, adam, train_cfg, epoch + 1, result.epoch_loss));
        result.last_checkpoint = prefix;
    }
    return result;
}

}  // namespace lfdf::train
