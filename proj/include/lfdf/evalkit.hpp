#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lfdf/network.hpp"
#include "lfdf/synthlf.hpp"
#include "lfdf/trainer.hpp"

namespace lfdf::eval {

// 10*log10(1/MSE) over all elements; identical inputs give +infinity.
double psnr_y(const Tensor& a, const Tensor& b);

// Mean local SSIM of two single-channel images: 11x11 Gaussian window
// (sigma 1.5), K1=0.01, K2=0.03, dynamic range 1, valid windows only.
double ssim(const Tensor& a, const Tensor& b);

struct ViewScore {
    double psnr = 0.0;
    double ssim = 0.0;
};

struct SceneReport {
    std::string scene_id;
    int angular = 0;
    std::vector<ViewScore> grid;  // raster over (u, v)
    ViewScore mean;               // psnr averaged over finite views only
    int infinite_psnr_views = 0;
};

// The three-level protocol: per-view grids, per-scene means, dataset mean.
struct MetricReport {
    std::string dataset_id;
    std::string model_id;
    std::string manifest_hash;
    int alpha = 0;
    int angular = 0;
    std::vector<SceneReport> scenes;
    ViewScore mean;
    int infinite_psnr_views = 0;

    nlohmann::json to_json() const;
    static MetricReport from_json(const nlohmann::json& j);
    std::string to_csv() const;  // scene,u,v,psnr,ssim rows
};

// Per-view average of the per-scene grids, as an [A, A] tensor for heatmaps.
Tensor mean_view_grid(const MetricReport& report, bool psnr);

// A model under evaluation: maps a Y-channel LR light field to HR.
struct SuperResolver {
    virtual ~SuperResolver() = default;
    virtual std::string id() const = 0;
    virtual LightField upscale(const LightField& lr_y, int alpha) const = 0;
    // angular size the model requires, 0 for any
    virtual int angular() const { return 0; }
    virtual nlohmann::json manifest() const { return nlohmann::json::object(); }
};

// Per-view Keys bicubic upscaling; the reference baseline.
struct BicubicResolver : SuperResolver {
    std::string id() const override { return "bicubic"; }
    LightField upscale(const LightField& lr_y, int alpha) const override;
};

// Passthrough; only valid at alpha = 1.
struct IdentityResolver : SuperResolver {
    std::string id() const override { return "identity"; }
    LightField upscale(const LightField& lr_y, int alpha) const override;
};

// Wraps a trained (or freshly initialized) network.
struct NetResolver : SuperResolver {
    const net::LFDFNet* model = nullptr;
    std::string label = "net";

    NetResolver() = default;
    NetResolver(const net::LFDFNet* m, std::string l) : model(m), label(std::move(l)) {}

    std::string id() const override { return label; }
    LightField upscale(const LightField& lr_y, int alpha) const override;
    int angular() const override { return model->config().angular; }
    nlohmann::json manifest() const override { return model->manifest(); }
};

// Degrade -> upscale -> score every scene under dataset_root against its own
// HR views (converted to Y, angular-cropped to the model's requirement).
MetricReport evaluate(const SuperResolver& model, const std::string& dataset_root,
                      int alpha);

struct SweepTable {
    std::vector<std::string> models;
    std::vector<int> kds;
    std::vector<std::pair<double, double>> ranges;  // disparity range per kd
    std::vector<std::vector<double>> psnr;          // [model][kd] scene-mean dB

    nlohmann::json to_json() const;
    static SweepTable from_json(const nlohmann::json& j);
    std::string to_csv() const;
};

// PSNR of each model on one scene rendered at every baseline multiplier.
SweepTable disparity_sweep(const std::vector<const SuperResolver*>& models,
                           const synth::SceneSpec& scene, const std::vector<int>& kds,
                           int alpha);

struct AblationRow {
    std::string label;
    bool ok = false;
    std::string error;
    std::int64_t params = 0;
    double psnr = 0.0;
    double ssim = 0.0;
};

struct AblationTable {
    std::vector<AblationRow> rows;

    nlohmann::json to_json() const;
    std::string to_csv() const;
};

// Trains and scores every variant plus an alignment-stage-count sweep under
// one seed and budget. A failing row records its error; the run continues.
AblationTable ablate(const net::NetworkConfig& base,
                     const std::vector<net::Variant>& variants,
                     const std::vector<int>& k_sweep, const train::TrainConfig& budget,
                     const std::string& eval_root);

// FNV-1a hex digest used to tie reports to the emitting model.
std::string manifest_hash(const nlohmann::json& manifest);

}  // namespace lfdf::eval
