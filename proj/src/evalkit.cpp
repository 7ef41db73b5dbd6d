#include "lfdf/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "lfdf/lf_io.hpp"

namespace fs = std::filesystem;

namespace lfdf::eval {

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

void check_single_channel(const Tensor& t, const char* who) {
    const bool ok = t.rank() == 2 || (t.rank() == 3 && t.dim(2) == 1);
    if (!ok) throw std::invalid_argument(std::string(who) + ": expected a single-channel image");
}

const std::vector<double>& gaussian_window() {
    static const std::vector<double> w = [] {
        std::vector<double> k(kWin * kWin);
        const int r = kWin / 2;
        double sum = 0.0;
        for (int y = 0; y < kWin; ++y)
            for (int x = 0; x < kWin; ++x) {
                const double d2 = (y - r) * (y - r) + (x - r) * (x - r);
                k[y * kWin + x] = std::exp(-d2 / (2.0 * kSigma * kSigma));
                sum += k[y * kWin + x];
            }
        for (double& v : k) v /= sum;
        return k;
    }();
    return w;
}

}  // namespace

double psnr_y(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw std::invalid_argument("psnr_y: shape mismatch");
    if (a.numel() == 0) throw std::invalid_argument("psnr_y: empty image");
    double se = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i) {
        const double d = a[i] - b[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(a.numel());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const Tensor& a, const Tensor& b) {
    check_single_channel(a, "ssim");
    check_single_channel(b, "ssim");
    if (a.shape() != b.shape()) throw std::invalid_argument("ssim: shape mismatch");
    const int H = a.dim(0), W = a.dim(1);
    if (H < kWin || W < kWin)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");

    const std::vector<double>& win = gaussian_window();
    double total = 0.0;
    std::int64_t count = 0;
    for (int y = 0; y + kWin <= H; ++y)
        for (int x = 0; x + kWin <= W; ++x) {
            double ma = 0.0, mb = 0.0, maa = 0.0, mbb = 0.0, mab = 0.0;
            for (int i = 0; i < kWin; ++i)
                for (int j = 0; j < kWin; ++j) {
                    // flat (y, x) indexing covers both [H,W] and [H,W,1]
                    const double wgt = win[i * kWin + j];
                    const double va = a[static_cast<std::int64_t>(y + i) * W + (x + j)];
                    const double vb = b[static_cast<std::int64_t>(y + i) * W + (x + j)];
                    ma += wgt * va;
                    mb += wgt * vb;
                    maa += wgt * va * va;
                    mbb += wgt * vb * vb;
                    mab += wgt * va * vb;
                }
            const double va = maa - ma * ma;
            const double vb = mbb - mb * mb;
            const double cov = mab - ma * mb;
            const double num = (2.0 * ma * mb + kC1) * (2.0 * cov + kC2);
            const double den = (ma * ma + mb * mb + kC1) * (va + vb + kC2);
            total += num / den;
            count += 1;
        }
    return total / static_cast<double>(count);
}

nlohmann::json MetricReport::to_json() const {
    nlohmann::json scenes_j = nlohmann::json::array();
    for (const SceneReport& s : scenes) {
        nlohmann::json grid = nlohmann::json::array();
        for (const ViewScore& v : s.grid) grid.push_back({{"psnr", v.psnr}, {"ssim", v.ssim}});
        scenes_j.push_back({{"scene", s.scene_id},
                            {"angular", s.angular},
                            {"grid", grid},
                            {"mean_psnr", s.mean.psnr},
                            {"mean_ssim", s.mean.ssim},
                            {"infinite_psnr_views", s.infinite_psnr_views}});
    }
    return {{"type", "metric_report"},
            {"dataset", dataset_id},
            {"model", model_id},
            {"manifest_hash", manifest_hash},
            {"alpha", alpha},
            {"angular", angular},
            {"scenes", scenes_j},
            {"mean_psnr", mean.psnr},
            {"mean_ssim", mean.ssim},
            {"infinite_psnr_views", infinite_psnr_views}};
}

MetricReport MetricReport::from_json(const nlohmann::json& j) {
    MetricReport r;
    r.dataset_id = j.value("dataset", "");
    r.model_id = j.value("model", "");
    r.manifest_hash = j.value("manifest_hash", "");
    r.alpha = j.value("alpha", 0);
    r.angular = j.value("angular", 0);
    r.mean.psnr = j.value("mean_psnr", 0.0);
    r.mean.ssim = j.value("mean_ssim", 0.0);
    r.infinite_psnr_views = j.value("infinite_psnr_views", 0);
    for (const auto& sj : j.value("scenes", nlohmann::json::array())) {
        SceneReport s;
        s.scene_id = sj.value("scene", "");
        s.angular = sj.value("angular", 0);
        s.mean.psnr = sj.value("mean_psnr", 0.0);
        s.mean.ssim = sj.value("mean_ssim", 0.0);
        s.infinite_psnr_views = sj.value("infinite_psnr_views", 0);
        for (const auto& vj : sj.value("grid", nlohmann::json::array()))
            s.grid.push_back({vj.value("psnr", 0.0), vj.value("ssim", 0.0)});
        r.scenes.push_back(std::move(s));
    }
    return r;
}

std::string MetricReport::to_csv() const {
    std::ostringstream out;
    out << "scene,u,v,psnr,ssim\n";
    for (const SceneReport& s : scenes)
        for (int u = 0; u < s.angular; ++u)
            for (int v = 0; v < s.angular; ++v) {
                const ViewScore& vs = s.grid[static_cast<std::size_t>(u) * s.angular + v];
                out << s.scene_id << "," << u << "," << v << "," << vs.psnr << ","
                    << vs.ssim << "\n";
            }
    return out.str();
}

Tensor mean_view_grid(const MetricReport& report, bool psnr) {
    if (report.scenes.empty() || report.angular == 0)
        throw std::invalid_argument("mean_view_grid: empty report");
    const int A = report.angular;
    Tensor grid({A, A});
    for (const SceneReport& s : report.scenes)
        for (int i = 0; i < A * A; ++i)
            grid[i] += psnr ? s.grid[static_cast<std::size_t>(i)].psnr
                            : s.grid[static_cast<std::size_t>(i)].ssim;
    for (std::int64_t i = 0; i < grid.numel(); ++i)
        grid[i] /= static_cast<double>(report.scenes.size());
    return grid;
}

LightField BicubicResolver::upscale(const LightField& lr_y, int alpha) const {
    const int A = lr_y.views_u(), B = lr_y.views_v();
    LightField out(Tensor({A, B, lr_y.height() * alpha, lr_y.width() * alpha,
                           lr_y.channels()}),
                   lr_y.color_space, lr_y.value_range);
    for (int u = 0; u < A; ++u)
        for (int v = 0; v < B; ++v)
            out.set_view(u, v, resize_bicubic(lr_y.view(u, v), alpha, false,
                                              lr_y.value_range.lo, lr_y.value_range.hi));
    return out;
}

LightField IdentityResolver::upscale(const LightField& lr_y, int alpha) const {
    if (alpha != 1)
        throw std::invalid_argument("IdentityResolver: only valid at alpha = 1");
    return lr_y;
}

LightField NetResolver::upscale(const LightField& lr_y, int alpha) const {
    if (!model) throw std::invalid_argument("NetResolver: no model attached");
    if (alpha != model->config().alpha)
        throw std::invalid_argument("NetResolver: alpha does not match the network");
    LightField sr = model->forward(lr_y);
    // the network's residual head is unbounded; deliverable images are not
    for (std::int64_t i = 0; i < sr.data.numel(); ++i)
        sr.data[i] = std::clamp(sr.data[i], sr.value_range.lo, sr.value_range.hi);
    return sr;
}

namespace {

ViewScore finite_mean(const std::vector<ViewScore>& grid, int* infinite_out) {
    ViewScore m;
    int finite = 0, infinite = 0;
    for (const ViewScore& v : grid) {
        m.ssim += v.ssim;
        if (std::isinf(v.psnr)) {
            infinite += 1;
        } else {
            m.psnr += v.psnr;
            finite += 1;
        }
    }
    m.ssim /= static_cast<double>(grid.size());
    m.psnr = finite > 0 ? m.psnr / static_cast<double>(finite)
                        : std::numeric_limits<double>::infinity();
    if (infinite_out) *infinite_out = infinite;
    return m;
}

}  // namespace

MetricReport evaluate(const SuperResolver& model, const std::string& dataset_root,
                      int alpha) {
    std::vector<std::string> scenes = io::list_scenes(dataset_root);
    if (scenes.empty())
        throw std::runtime_error("evaluate: no scenes under " + dataset_root);

    MetricReport report;
    report.dataset_id = dataset_root;
    report.model_id = model.id();
    report.manifest_hash = manifest_hash(model.manifest());
    report.alpha = alpha;

    std::vector<ViewScore> scene_means;
    for (const std::string& dir : scenes) {
        LightField hr = io::load_scene(dir);
        LightField hr_y = hr.color_space == ColorSpace::RGB ? rgb_to_y(hr) : hr;
        if (model.angular() > 0 && (hr_y.views_u() != model.angular() ||
                                    hr_y.views_v() != model.angular()))
            hr_y = crop_angular(hr_y, model.angular());
        LightField lr_y = degrade(hr_y, alpha);
        LightField sr = model.upscale(lr_y, alpha);
        if (sr.data.shape() != hr_y.data.shape())
            throw std::runtime_error("evaluate: model output shape mismatch in " + dir);

        SceneReport sr_rep;
        sr_rep.scene_id = fs::path(dir).filename().string();
        sr_rep.angular = hr_y.views_u();
        for (int u = 0; u < hr_y.views_u(); ++u)
            for (int v = 0; v < hr_y.views_v(); ++v) {
                const Tensor got = sr.view(u, v);
                const Tensor want = hr_y.view(u, v);
                sr_rep.grid.push_back({psnr_y(got, want), ssim(got, want)});
            }
        sr_rep.mean = finite_mean(sr_rep.grid, &sr_rep.infinite_psnr_views);
        report.angular = sr_rep.angular;
        report.infinite_psnr_views += sr_rep.infinite_psnr_views;
        scene_means.push_back(sr_rep.mean);
        report.scenes.push_back(std::move(sr_rep));
    }
    report.mean = finite_mean(scene_means, nullptr);
    return report;
}

nlohmann::json SweepTable::to_json() const {
    nlohmann::json ranges_j = nlohmann::json::array();
    for (const auto& [lo, hi] : ranges) ranges_j.push_back({lo, hi});
    return {{"type", "sweep_table"},
            {"models", models},
            {"kds", kds},
            {"disparity_ranges", ranges_j},
            {"psnr", psnr}};
}

SweepTable SweepTable::from_json(const nlohmann::json& j) {
    SweepTable t;
    t.models = j.at("models").get<std::vector<std::string>>();
    t.kds = j.at("kds").get<std::vector<int>>();
    for (const auto& rj : j.at("disparity_ranges"))
        t.ranges.emplace_back(rj.at(0).get<double>(), rj.at(1).get<double>());
    t.psnr = j.at("psnr").get<std::vector<std::vector<double>>>();
    return t;
}

std::string SweepTable::to_csv() const {
    std::ostringstream out;
    out << "model";
    for (std::size_t k = 0; k < kds.size(); ++k)
        out << ",kd=" << kds[k] << " (disp " << ranges[k].first << ".." << ranges[k].second
            << ")";
    out << "\n";
    for (std::size_t m = 0; m < models.size(); ++m) {
        out << models[m];
        for (double v : psnr[m]) out << "," << v;
        out << "\n";
    }
    return out.str();
}

SweepTable disparity_sweep(const std::vector<const SuperResolver*>& models,
                           const synth::SceneSpec& scene, const std::vector<int>& kds,
                           int alpha) {
    SweepTable table;
    table.kds = kds;
    for (const SuperResolver* m : models) table.models.push_back(m->id());
    table.psnr.assign(models.size(), std::vector<double>(kds.size(), 0.0));

    for (std::size_t k = 0; k < kds.size(); ++k) {
        table.ranges.push_back(synth::disparity_range(scene, kds[k]));
        synth::RenderResult r = synth::render(scene, kds[k]);
        LightField hr_y = rgb_to_y(r.lf);
        for (std::size_t m = 0; m < models.size(); ++m) {
            LightField hr = hr_y;
            if (models[m]->angular() > 0 && hr.views_u() != models[m]->angular())
                hr = crop_angular(hr, models[m]->angular());
            LightField lr = degrade(hr, alpha);
            LightField sr = models[m]->upscale(lr, alpha);
            std::vector<ViewScore> grid;
            for (int u = 0; u < hr.views_u(); ++u)
                for (int v = 0; v < hr.views_v(); ++v)
                    grid.push_back({psnr_y(sr.view(u, v), hr.view(u, v)), 0.0});
            table.psnr[m][k] = finite_mean(grid, nullptr).psnr;
        }
    }
    return table;
}

nlohmann::json AblationTable::to_json() const {
    nlohmann::json rows_j = nlohmann::json::array();
    for (const AblationRow& r : rows)
        rows_j.push_back({{"label", r.label},
                          {"ok", r.ok},
                          {"error", r.error},
                          {"params", r.params},
                          {"psnr", r.psnr},
                          {"ssim", r.ssim}});
    return {{"type", "ablation_table"}, {"rows", rows_j}};
}

std::string AblationTable::to_csv() const {
    std::ostringstream out;
    out << "label,ok,params,psnr,ssim,error\n";
    for (const AblationRow& r : rows)
        out << r.label << "," << (r.ok ? 1 : 0) << "," << r.params << "," << r.psnr << ","
            << r.ssim << "," << r.error << "\n";
    return out.str();
}

namespace {

AblationRow run_ablation(const std::string& label, net::NetworkConfig cfg,
                         train::TrainConfig budget, const std::string& eval_root) {
    AblationRow row;
    row.label = label;
    try {
        cfg.validate();
        budget.variant = cfg.variant;
        budget.alpha = cfg.alpha;
        budget.out_dir = (fs::path(budget.out_dir) / label).string();
        train::FitResult fr = train::fit(budget, cfg);

        net::LFDFNet model(cfg);
        train::Checkpoint ckpt = train::load_checkpoint(fr.last_checkpoint);
        train::restore(ckpt, model);
        row.params = model.param_count();

        NetResolver resolver(&model, label);
        MetricReport rep = evaluate(resolver, eval_root, cfg.alpha);
        row.psnr = rep.mean.psnr;
        row.ssim = rep.mean.ssim;
        row.ok = true;
    } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
    }
    return row;
}

}  // namespace

AblationTable ablate(const net::NetworkConfig& base,
                     const std::vector<net::Variant>& variants,
                     const std::vector<int>& k_sweep, const train::TrainConfig& budget,
                     const std::string& eval_root) {
    AblationTable table;
    for (net::Variant v : variants) {
        net::NetworkConfig cfg = base;
        cfg.variant = v;
        table.rows.push_back(run_ablation(net::variant_name(v), cfg, budget, eval_root));
    }
    for (int k : k_sweep) {
        net::NetworkConfig cfg = base;
        cfg.align_stages = k;
        table.rows.push_back(run_ablation("K=" + std::to_string(k), cfg, budget, eval_root));
    }
    return table;
}

std::string manifest_hash(const nlohmann::json& manifest) {
    const std::string s = manifest.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace lfdf::eval
