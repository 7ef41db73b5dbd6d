#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "lfdf/blocks.hpp"
#include "lfdf/dconv.hpp"
#include "lfdf/lightfield.hpp"

namespace lfdf::net {

// Ablation wirings. full is the production network; the others disable one
// mechanism each while keeping depth and feature width unchanged.
enum class Variant { full, no_dcn, no_adam, no_dist, no_aspp_fem, no_aspp_ofb };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& s);

struct NetworkConfig {
    int angular = 5;       // A: views per axis (odd, so a center view exists)
    int channels = 32;     // C: feature depth
    int align_stages = 3;  // K: collect-and-distribute stages
    int recon_blocks = 4;  // N: distillation blocks per view
    int alpha = 2;         // upscale factor
    Variant variant = Variant::full;

    // depth knobs below are fixed choices of the reference architecture,
    // exposed so toy-scale configs can shrink the network
    int fem_stages = 2;       // (ASPP module + residual block) pairs
    int aspp_per_module = 2;  // ASPP blocks inside one ASPP module
    int imdb_stages = 3;      // distillation splits per block
    double leaky_slope = 0.1;

    static constexpr int kernel = 3;  // deformable kernel size

    int offset_channels() const { return 2 * kernel * kernel; }  // 18
    int center_index() const { return angular / 2; }
    int fused_channels() const { return angular * angular * channels; }

    void validate() const;  // throws on A even, nonpositive sizes, alpha < 1

    nlohmann::json to_json() const;
    static NetworkConfig from_json(const nlohmann::json& j);
};

// Features of all A*A views at one stage: center plus sides in raster order
// over (u, v) with the center skipped.
struct StageFeatures {
    Var center;
    std::vector<Var> sides;
};

// Tensor-level snapshot of StageFeatures for inspection and tests.
struct ViewFeatures {
    Tensor center;
    std::vector<Tensor> sides;
};

// Predicts sampling offsets that align `src` toward `ref`:
// concat(src, ref) -> 1x1 reduce -> spatial chain -> 1x1 head (zero-init).
struct OffsetBranch {
    Conv2dLayer reduce;
    std::vector<std::unique_ptr<SpatialBlock>> chain;
    Conv2dLayer head;
    double slope = 0.1;

    OffsetBranch() = default;
    OffsetBranch(const std::string& name, int channels, int offset_ch, bool use_aspp,
                 int chain_len, double leaky_slope);

    Var forward(Tape& t, const Var& src, const Var& ref) const;
    void collect(std::vector<Param*>& out);
    std::int64_t param_count() const;
    double flops(int h, int w) const;
    void init(Rng& rng);  // Kaiming body, zero head
};

// One collect-and-distribute stage. The offset branch and the deformable
// kernel are each single objects reused by both halves and by every view.
struct AlignStage {
    NetworkConfig cfg;
    OffsetBranch offsets;
    Param dconv_w, dconv_b;  // shared deformable kernel
    Conv2dLayer fuse;        // 1x1, A²C -> A²C
    Conv2dLayer squeeze;     // 1x1, 2C -> C
    std::unique_ptr<ResidualBlock> side_block;  // per-view path of no_adam / no_dist

    AlignStage(const std::string& name, const NetworkConfig& cfg);

    // Aligns every side to the center and fuses: returns [H, W, A²C].
    Var collect(Tape& t, const StageFeatures& in, bool force_rigid = false) const;
    // Splits the fused feature back out and updates every view.
    StageFeatures distribute(Tape& t, const Var& fused, const StageFeatures& in,
                             bool force_rigid = false) const;
    StageFeatures forward(Tape& t, const StageFeatures& in, bool force_rigid = false) const;

    void collect_params(std::vector<Param*>& out);
    std::int64_t param_count() const;
    double flops(int h, int w) const;
    void init(Rng& rng);

private:
    Var align(Tape& t, const Var& src, const Var& ref, bool force_rigid) const;
};

class LFDFNet {
public:
    explicit LFDFNet(const NetworkConfig& cfg);

    // the parameter registry holds raw pointers into members
    LFDFNet(const LFDFNet&) = delete;
    LFDFNet& operator=(const LFDFNet&) = delete;

    const NetworkConfig& config() const { return cfg_; }

    // Stable, order-deterministic parameter registry; shared tensors appear once.
    const std::vector<Param*>& params() const { return params_; }
    std::vector<Param*>& params() { return params_; }
    Param* find_param(const std::string& name);

    // Kaiming for everything except the offset heads, which start at zero.
    void init_weights(std::uint64_t seed);

    // Per-view SR outputs [alpha*H, alpha*W, 1], raster order over (u, v).
    // force_rigid routes every deformable conv through its rigid counterpart
    // with the same kernel (used to verify the zero-offset contract).
    std::vector<Var> forward_vars(Tape& t, const LightField& lr,
                                  bool force_rigid = false) const;
    LightField forward(const LightField& lr, bool force_rigid = false) const;

    // Tensor-level probes used by tests.
    ViewFeatures feature_extract(const LightField& lr) const;
    dconv::OffsetField offsets_for(int stage, const Tensor& src, const Tensor& ref) const;

    std::int64_t param_count() const;
    double estimate_flops(int h, int w) const;

    nlohmann::json manifest() const;

    // Exposed structure (tests reach into these; treat as read-only).
    Conv2dLayer fem_head;
    std::vector<std::unique_ptr<SpatialBlock>> fem_chain;
    std::vector<std::unique_ptr<AlignStage>> stages;
    std::vector<std::unique_ptr<ResidualBlock>> sisr_stages;  // no_adam path
    Conv2dLayer recon_adapter;  // 1x1, (K+1)C -> C
    std::vector<Imdb> imdbs;
    Conv2dLayer up_extend;  // 1x1, C -> alpha²C
    Conv2dLayer final_conv; // 1x1, C -> 1

private:
    NetworkConfig cfg_;
    std::vector<Param*> params_;
    std::uint64_t init_seed_ = 0;

    StageFeatures extract_vars(Tape& t, const LightField& lr) const;
    Var reconstruct_view(Tape& t, const std::vector<Var>& stage_feats,
                         const Tensor& lr_view) const;
    void build_param_registry();
};

}  // namespace lfdf::net
