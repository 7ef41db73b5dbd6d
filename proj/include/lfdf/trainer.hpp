#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "lfdf/network.hpp"

namespace lfdf::train {

struct TrainConfig {
    int batch_size = 8;
    double lr0 = 2e-4;
    double decay_factor = 0.5;
    int decay_every = 15;  // epochs per lr halving
    int total_epochs = 50;
    int patch_size = 32;  // HR patch edge
    int stride = 32;
    int alpha = 2;
    std::uint64_t seed = 0;
    std::string dataset_root;
    std::string out_dir;
    net::Variant variant = net::Variant::full;

    void validate() const;  // positivity, patch_size % alpha == 0

    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

// lr0 * decay_factor^(epoch / decay_every); throws outside [0, total_epochs).
double lr_at(const TrainConfig& cfg, int epoch);

// One training pair, Y channel: lr is the degraded input, hr the target.
struct Sample {
    LightField lr;
    LightField hr;
};

struct AdamState {
    std::vector<Tensor> m, v;  // aligned with the parameter registry
    std::int64_t steps = 0;

    void init(const std::vector<ad::Param*>& params);
    bool empty() const { return m.empty(); }
};

// In-place Adam update with bias correction (betas 0.9/0.999, eps 1e-8).
void adam_update(const std::vector<ad::Param*>& params, const std::vector<Tensor>& grads,
                 AdamState& state, double lr);

// Mean L1 over all views and pixels of the batch, without touching weights.
double batch_loss(const net::LFDFNet& net, const std::vector<Sample>& batch);

// Forward + backward over the batch, one Adam step. Returns the batch loss;
// throws on a non-finite loss.
double train_step(net::LFDFNet& net, AdamState& adam, const std::vector<Sample>& batch,
                  double lr);

// The symmetry draw used for 8x augmentation during training.
Symmetry draw_symmetry(Rng& rng);

struct Checkpoint {
    int version = 1;
    int epoch = 0;  // completed epochs
    net::NetworkConfig net_cfg;
    TrainConfig train_cfg;
    nlohmann::json manifest;
    std::vector<double> history;  // mean loss per completed epoch
    std::vector<std::string> names;
    std::vector<Tensor> values, m, v;
    std::int64_t adam_steps = 0;
};

// prefix.json carries config and tensor shapes; prefix.bin the raw doubles
// (values, then Adam m, then Adam v, registry order, little-endian).
void save_checkpoint(const std::string& prefix, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& prefix);

Checkpoint snapshot(const net::LFDFNet& net, const AdamState& adam,
                    const TrainConfig& train_cfg, int epoch, std::vector<double> history);

// Copies parameters (and Adam state, when given) into a net built from the
// same config; throws on any name or shape mismatch.
void restore(const Checkpoint& c, net::LFDFNet& net, AdamState* adam = nullptr);

struct FitResult {
    std::vector<double> epoch_loss;
    std::string last_checkpoint;  // prefix of the newest ckpt_epoch_{E}
    int steps_per_epoch = 0;
};

// Full training loop: shuffled patch passes with on-the-fly augmentation and
// degradation, per-epoch checkpoints under out_dir, JSON-lines step log.
// resume names a checkpoint prefix to continue from.
FitResult fit(const TrainConfig& train_cfg, const net::NetworkConfig& net_cfg,
              const std::string& resume = {});

// The HR patch pool fit trains on: every scene under dataset_root converted
// to Y, angular-cropped to `angular`, tiled into patch_size/stride windows.
std::vector<LightField> load_training_patches(const TrainConfig& cfg, int angular);

}  // namespace lfdf::train
