#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lfdf/evalkit.hpp"
#include "lfdf/figures.hpp"
#include "lfdf/lf_io.hpp"
#include "lfdf/synthlf.hpp"
#include "lfdf/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lfdf;

namespace {

// distinct exit codes, one per failure family
constexpr int kUsage = 2;    // bad flags / subcommand
constexpr int kConfig = 3;   // malformed or unknown configuration
constexpr int kMissing = 4;  // missing file, dataset or checkpoint
constexpr int kFailure = 5;  // everything that broke at runtime

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingInput : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json load_json_file(const std::string& path) {
    if (!fs::exists(path)) throw MissingInput("no such file: " + path);
    try {
        return json::parse(io::read_text(path));
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse " + path + ": " + e.what());
    }
}

// Merge `given` over `schema_defaults`, rejecting keys the schema does not
// declare. A schema array holding one object acts as an element template.
json merge_config(const json& schema, const json& given, const std::string& prefix) {
    json out = schema;
    if (!given.is_object())
        throw ConfigError("expected an object at " + (prefix.empty() ? "top level" : prefix));
    for (const auto& [key, val] : given.items()) {
        if (!schema.contains(key))
            throw ConfigError("unknown config key: " + prefix + key);
        const json& sv = schema.at(key);
        if (sv.is_object() && val.is_object()) {
            out[key] = merge_config(sv, val, prefix + key + ".");
        } else if (sv.is_array() && !sv.empty() && sv.front().is_object()) {
            if (!val.is_array())
                throw ConfigError("expected a list at " + prefix + key);
            json list = json::array();
            for (const auto& el : val)
                list.push_back(merge_config(sv.front(), el, prefix + key + "[]."));
            out[key] = list;
        } else {
            out[key] = val;
        }
    }
    return out;
}

json parse_scalar(const std::string& text) {
    json v = json::parse(text, nullptr, false);
    if (v.is_discarded()) return json(text);  // bare strings need no quotes
    return v;
}

// --set dotted.key=value; the path must already exist in the document.
void apply_set(json& doc, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("--set expects key=value, got: " + kv);
    const std::string path = kv.substr(0, eq);
    const json value = parse_scalar(kv.substr(eq + 1));

    json* node = &doc;
    std::size_t start = 0;
    std::vector<std::string> parts;
    while (true) {
        const auto dot = path.find('.', start);
        parts.push_back(path.substr(start, dot - start));
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!node->is_object() || !node->contains(parts[i]))
            throw ConfigError("unknown config key: " + path);
        node = &(*node)[parts[i]];
    }
    if (!node->is_object() || !node->contains(parts.back()))
        throw ConfigError("unknown config key: " + path);
    (*node)[parts.back()] = value;
}

// "0..4", "3", or "0,2,4"
std::vector<int> parse_kd_range(const std::string& text) {
    try {
        const auto dots = text.find("..");
        if (dots != std::string::npos) {
            const int lo = std::stoi(text.substr(0, dots));
            const int hi = std::stoi(text.substr(dots + 2));
            if (hi < lo) throw ConfigError("--kd range is empty: " + text);
            std::vector<int> out;
            for (int k = lo; k <= hi; ++k) out.push_back(k);
            return out;
        }
        std::vector<int> out;
        std::size_t start = 0;
        while (start <= text.size()) {
            const auto comma = text.find(',', start);
            out.push_back(std::stoi(text.substr(start, comma - start)));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        return out;
    } catch (const std::invalid_argument&) {
        throw ConfigError("cannot parse --kd value: " + text);
    }
}

// flags shared by every subcommand
struct Common {
    std::string config_path;
    std::string out;
    std::string set_seed;
    std::vector<std::string> sets;
    std::string kd;
    std::string variant;
    int alpha = 0;

    void attach(CLI::App* cmd, bool with_model_flags) {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--out", out, "output directory");
        cmd->add_option("--seed", set_seed, "RNG seed override");
        cmd->add_option("--set", sets, "dotted-key config override, key=value");
        if (with_model_flags) {
            cmd->add_option("--variant", variant, "network variant")
                ->check(CLI::IsMember({"full", "no_dcn", "no_adam", "no_dist",
                                       "no_aspp_fem", "no_aspp_ofb"}));
            cmd->add_option("--alpha", alpha, "upscale factor")
                ->check(CLI::IsMember({2, 4}));
        }
        cmd->add_option("--kd", kd, "baseline multipliers, e.g. 0..4 or 0,2,4");
    }
};

json effective_config(const json& schema, const Common& flags,
                      const std::string& command) {
    json cfg = schema;
    if (!flags.config_path.empty())
        cfg = merge_config(schema, load_json_file(flags.config_path), "");
    for (const std::string& kv : flags.sets) apply_set(cfg, kv);
    cfg["command"] = command;
    return cfg;
}

void echo_config(const std::string& out_dir, const json& cfg) {
    if (out_dir.empty()) throw ConfigError("no output directory set (--out or config)");
    fs::create_directories(out_dir);
    io::write_text((fs::path(out_dir) / "effective_config.json").string(),
                   cfg.dump(2) + "\n");
}

std::string env_data_root() {
    const char* v = std::getenv("LFDF_DATA_ROOT");
    return v ? v : "";
}

void require_dataset(const std::string& root, const std::string& what) {
    if (root.empty())
        throw ConfigError(what + " not set (config, --set, or LFDF_DATA_ROOT)");
    if (io::list_scenes(root).empty())
        throw MissingInput("no scenes under " + what + ": " + root);
}

json model_schema() {
    return {{"kind", "bicubic"},
            {"label", ""},
            {"checkpoint", ""},
            {"init_seed", 0},
            {"network", net::NetworkConfig{}.to_json()}};
}

// A resolver plus the network it may wrap (kept alive alongside it).
struct BuiltModel {
    std::unique_ptr<net::LFDFNet> model;
    std::unique_ptr<eval::SuperResolver> resolver;
};

BuiltModel build_model(const json& raw) {
    // --set can hand us a partial spec, so fill defaults here too
    const json spec = merge_config(model_schema(), raw, "model.");
    BuiltModel out;
    const std::string kind = spec.at("kind").get<std::string>();
    std::string label = spec.at("label").get<std::string>();
    if (kind == "bicubic") {
        out.resolver = std::make_unique<eval::BicubicResolver>();
    } else if (kind == "identity") {
        out.resolver = std::make_unique<eval::IdentityResolver>();
    } else if (kind == "network") {
        const std::string ckpt_path = spec.at("checkpoint").get<std::string>();
        if (!ckpt_path.empty()) {
            if (!fs::exists(ckpt_path + ".json"))
                throw MissingInput("no such checkpoint: " + ckpt_path);
            train::Checkpoint ckpt = train::load_checkpoint(ckpt_path);
            out.model = std::make_unique<net::LFDFNet>(ckpt.net_cfg);
            train::restore(ckpt, *out.model);
            if (label.empty()) label = fs::path(ckpt_path).filename().string();
        } else {
            net::NetworkConfig cfg;
            try {
                cfg = net::NetworkConfig::from_json(spec.at("network"));
            } catch (const std::exception& e) {
                throw ConfigError(std::string("bad model.network: ") + e.what());
            }
            out.model = std::make_unique<net::LFDFNet>(cfg);
            out.model->init_weights(spec.at("init_seed").get<std::uint64_t>());
            if (label.empty()) label = std::string("net-") + net::variant_name(cfg.variant);
        }
        out.resolver = std::make_unique<eval::NetResolver>(out.model.get(), label);
    } else {
        throw ConfigError("unknown model kind: " + kind);
    }
    return out;
}

synth::SceneSpec scene_from_config(const json& cfg) {
    const std::string path = cfg.at("scene").get<std::string>();
    if (!path.empty()) {
        try {
            return synth::SceneSpec::from_json(load_json_file(path));
        } catch (const json::exception& e) {
            throw ConfigError("bad scene spec " + path + ": " + e.what());
        }
    }
    const json& r = cfg.at("random");
    return synth::random_scene(r.at("seed").get<std::uint64_t>(),
                               r.at("angular").get<int>(), r.at("height").get<int>(),
                               r.at("width").get<int>(), r.at("layers").get<int>());
}

// ---- generate ----------------------------------------------------------

int run_generate(const Common& flags) {
    json schema{{"command", ""},
                {"out", ""},
                {"seed", 0},
                {"count", 1},
                {"scene", ""},
                {"angular", 5},
                {"height", 64},
                {"width", 64},
                {"layers", 3},
                {"kd", json::array({1})},
                {"with_disparity", true}};
    json cfg = effective_config(schema, flags, "generate");
    if (!flags.out.empty()) cfg["out"] = flags.out;
    if (!flags.set_seed.empty()) cfg["seed"] = parse_scalar(flags.set_seed);
    if (!flags.kd.empty()) cfg["kd"] = parse_kd_range(flags.kd);
    const std::string out = cfg.at("out").get<std::string>();
    echo_config(out, cfg);

    std::vector<synth::SceneSpec> scenes;
    const std::string scene_path = cfg.at("scene").get<std::string>();
    if (!scene_path.empty()) {
        scenes.push_back(scene_from_config(cfg));
    } else {
        const std::uint64_t seed = cfg.at("seed").get<std::uint64_t>();
        for (int i = 0; i < cfg.at("count").get<int>(); ++i)
            scenes.push_back(synth::random_scene(
                Rng::mix(seed, static_cast<std::uint64_t>(i)), cfg.at("angular").get<int>(),
                cfg.at("height").get<int>(), cfg.at("width").get<int>(),
                cfg.at("layers").get<int>()));
    }

    const std::vector<int> kds = cfg.at("kd").get<std::vector<int>>();
    if (kds.empty()) throw ConfigError("generate: empty kd list");
    const bool with_disp = cfg.at("with_disparity").get<bool>();
    for (int kd : kds) {
        const fs::path root =
            kds.size() == 1 ? fs::path(out) : fs::path(out) / ("kd" + std::to_string(kd));
        for (std::size_t i = 0; i < scenes.size(); ++i) {
            synth::RenderResult r = synth::render(scenes[i], kd);
            io::SceneMeta meta;
            meta.angular_res = {scenes[i].angular, scenes[i].angular};
            meta.spatial_res = {scenes[i].height, scenes[i].width};
            meta.baseline_mult = kd;
            meta.disparity_range = synth::disparity_range(scenes[i], kd);
            char name[32];
            std::snprintf(name, sizeof name, "scene_%04zu", i);
            io::save_scene((root / name).string(), r.lf, meta,
                           with_disp ? &r.disparity.data : nullptr);
        }
        std::cout << "wrote " << scenes.size() << " scene(s) to " << root.string() << "\n";
    }
    return 0;
}

// ---- train -------------------------------------------------------------

int run_train(const Common& flags, int epochs_flag, const std::string& resume_flag) {
    json schema{{"command", ""},
                {"resume", ""},
                {"train", train::TrainConfig{}.to_json()},
                {"network", net::NetworkConfig{}.to_json()}};
    json cfg = effective_config(schema, flags, "train");
    if (!flags.out.empty()) cfg["train"]["out_dir"] = flags.out;
    if (!flags.set_seed.empty()) cfg["train"]["seed"] = parse_scalar(flags.set_seed);
    if (!flags.variant.empty()) {
        cfg["train"]["variant"] = flags.variant;
        cfg["network"]["variant"] = flags.variant;
    }
    if (flags.alpha != 0) {
        cfg["train"]["alpha"] = flags.alpha;
        cfg["network"]["alpha"] = flags.alpha;
    }
    if (epochs_flag >= 0) cfg["train"]["total_epochs"] = epochs_flag;
    if (!resume_flag.empty()) cfg["resume"] = resume_flag;
    if (cfg["train"]["dataset_root"].get<std::string>().empty())
        cfg["train"]["dataset_root"] = env_data_root();

    train::TrainConfig tc;
    net::NetworkConfig nc;
    try {
        tc = train::TrainConfig::from_json(cfg.at("train"));
        nc = net::NetworkConfig::from_json(cfg.at("network"));
    } catch (const std::exception& e) {
        throw ConfigError(std::string("bad train config: ") + e.what());
    }
    const std::string resume = cfg.at("resume").get<std::string>();
    if (!resume.empty() && !fs::exists(resume + ".json"))
        throw MissingInput("no such checkpoint: " + resume);
    if (tc.total_epochs > 0) require_dataset(tc.dataset_root, "train.dataset_root");
    echo_config(tc.out_dir, cfg);

    train::FitResult result = train::fit(tc, nc, resume);
    json summary{{"epoch_loss", result.epoch_loss},
                 {"last_checkpoint", result.last_checkpoint},
                 {"steps_per_epoch", result.steps_per_epoch}};
    io::write_text((fs::path(tc.out_dir) / "fit_summary.json").string(),
                   summary.dump(2) + "\n");
    std::cout << "checkpoint: " << result.last_checkpoint << "\n";
    if (!result.epoch_loss.empty())
        std::cout << "final epoch loss: " << result.epoch_loss.back() << "\n";
    return 0;
}

// ---- eval --------------------------------------------------------------

int run_eval(const Common& flags) {
    json schema{{"command", ""},
                {"dataset_root", ""},
                {"alpha", 2},
                {"out", ""},
                {"model", model_schema()}};
    json cfg = effective_config(schema, flags, "eval");
    if (!flags.out.empty()) cfg["out"] = flags.out;
    if (flags.alpha != 0) cfg["alpha"] = flags.alpha;
    if (!flags.variant.empty()) cfg["model"]["network"]["variant"] = flags.variant;
    if (!flags.set_seed.empty()) cfg["model"]["init_seed"] = parse_scalar(flags.set_seed);
    if (cfg["dataset_root"].get<std::string>().empty())
        cfg["dataset_root"] = env_data_root();

    const std::string root = cfg.at("dataset_root").get<std::string>();
    require_dataset(root, "dataset_root");
    const std::string out = cfg.at("out").get<std::string>();
    echo_config(out, cfg);

    BuiltModel m = build_model(cfg.at("model"));
    eval::MetricReport report =
        eval::evaluate(*m.resolver, root, cfg.at("alpha").get<int>());
    io::write_text((fs::path(out) / "report.json").string(),
                   report.to_json().dump(2) + "\n");
    io::write_text((fs::path(out) / "report.csv").string(), report.to_csv());
    if (report.infinite_psnr_views > 0)
        std::cerr << json{{"warning", "infinite PSNR views excluded from averages"},
                          {"count", report.infinite_psnr_views}}
                         .dump()
                  << "\n";
    std::cout << "model=" << report.model_id << " psnr=" << report.mean.psnr
              << " ssim=" << report.mean.ssim << "\n";
    return 0;
}

// ---- sweep -------------------------------------------------------------

int run_sweep(const Common& flags) {
    json schema{{"command", ""},
                {"out", ""},
                {"alpha", 2},
                {"kd", json::array({0, 1, 2, 3, 4})},
                {"scene", ""},
                {"random",
                 {{"seed", 1}, {"angular", 5}, {"height", 64}, {"width", 64}, {"layers", 3}}},
                {"models", json::array({model_schema()})},
                {"epi_row", -1}};
    json cfg = effective_config(schema, flags, "sweep");
    if (!flags.out.empty()) cfg["out"] = flags.out;
    if (flags.alpha != 0) cfg["alpha"] = flags.alpha;
    if (!flags.kd.empty()) cfg["kd"] = parse_kd_range(flags.kd);
    const std::string out = cfg.at("out").get<std::string>();
    echo_config(out, cfg);

    synth::SceneSpec scene = scene_from_config(cfg);
    std::vector<BuiltModel> built;
    std::vector<const eval::SuperResolver*> resolvers;
    for (const json& mj : cfg.at("models")) {
        built.push_back(build_model(mj));
        resolvers.push_back(built.back().resolver.get());
    }
    if (resolvers.empty()) throw ConfigError("sweep: empty model list");
    const std::vector<int> kds = cfg.at("kd").get<std::vector<int>>();
    const int alpha = cfg.at("alpha").get<int>();

    eval::SweepTable table = eval::disparity_sweep(resolvers, scene, kds, alpha);
    io::write_text((fs::path(out) / "sweep.json").string(), table.to_json().dump(2) + "\n");
    io::write_text((fs::path(out) / "sweep.csv").string(), table.to_csv());

    std::vector<double> xs(kds.begin(), kds.end());
    fig::save_polyline_svg((fs::path(out) / "psnr_vs_kd.svg").string(), xs, table.psnr,
                           table.models, "baseline multiplier", "psnr (dB)");

    int row = cfg.at("epi_row").get<int>();
    if (row < 0) row = scene.height / 2;
    for (int kd : kds) {
        synth::RenderResult r = synth::render(scene, kd);
        Tensor epi =
            synth::epi_extract(r.lf, synth::EpiAxis::row, row, scene.angular / 2);
        fig::save_epi_strip_png(
            (fs::path(out) / ("epi_kd" + std::to_string(kd) + ".png")).string(), epi);
    }
    std::cout << table.to_csv();
    return 0;
}

// ---- ablate ------------------------------------------------------------

int run_ablate(const Common& flags) {
    json schema{{"command", ""},
                {"out", ""},
                {"network", net::NetworkConfig{}.to_json()},
                {"train", train::TrainConfig{}.to_json()},
                {"eval_root", ""},
                {"variants", json::array({"full", "no_dcn", "no_adam", "no_dist",
                                          "no_aspp_fem", "no_aspp_ofb"})},
                {"k_sweep", json::array({1, 2, 3, 4})}};
    json cfg = effective_config(schema, flags, "ablate");
    if (!flags.out.empty()) cfg["out"] = flags.out;
    if (!flags.set_seed.empty()) cfg["train"]["seed"] = parse_scalar(flags.set_seed);
    if (flags.alpha != 0) {
        cfg["train"]["alpha"] = flags.alpha;
        cfg["network"]["alpha"] = flags.alpha;
    }
    if (cfg["train"]["dataset_root"].get<std::string>().empty())
        cfg["train"]["dataset_root"] = env_data_root();
    if (cfg["eval_root"].get<std::string>().empty()) cfg["eval_root"] = env_data_root();

    net::NetworkConfig base;
    train::TrainConfig budget;
    try {
        base = net::NetworkConfig::from_json(cfg.at("network"));
        budget = train::TrainConfig::from_json(cfg.at("train"));
    } catch (const std::exception& e) {
        throw ConfigError(std::string("bad ablate config: ") + e.what());
    }
    require_dataset(budget.dataset_root, "train.dataset_root");
    require_dataset(cfg.at("eval_root").get<std::string>(), "eval_root");
    const std::string out = cfg.at("out").get<std::string>();
    echo_config(out, cfg);
    budget.out_dir = (fs::path(out) / "runs").string();

    std::vector<net::Variant> variants;
    for (const auto& v : cfg.at("variants"))
        variants.push_back(net::variant_from_name(v.get<std::string>()));
    const std::vector<int> k_sweep = cfg.at("k_sweep").get<std::vector<int>>();

    eval::AblationTable table = eval::ablate(base, variants, k_sweep, budget,
                                             cfg.at("eval_root").get<std::string>());
    io::write_text((fs::path(out) / "ablation.json").string(),
                   table.to_json().dump(2) + "\n");
    io::write_text((fs::path(out) / "ablation.csv").string(), table.to_csv());
    std::cout << table.to_csv();
    for (const eval::AblationRow& r : table.rows)
        if (!r.ok)
            std::cerr << json{{"warning", "ablation row failed"},
                              {"label", r.label},
                              {"error", r.error}}
                             .dump()
                      << "\n";
    return 0;
}

// ---- plot --------------------------------------------------------------

int run_plot(const Common& flags, const std::string& input_flag) {
    json schema{{"command", ""},
                {"input", ""},
                {"out", ""},
                {"kind", "auto"},
                {"cell", 32},
                {"scale", 8},
                {"epi_axis", "row"},
                {"epi_row", -1},
                {"angular_index", -1}};
    json cfg = effective_config(schema, flags, "plot");
    if (!flags.out.empty()) cfg["out"] = flags.out;
    if (!input_flag.empty()) cfg["input"] = input_flag;
    const std::string input = cfg.at("input").get<std::string>();
    if (input.empty()) throw ConfigError("plot: no input set");
    if (!fs::exists(input)) throw MissingInput("no such input: " + input);
    const std::string out = cfg.at("out").get<std::string>();
    echo_config(out, cfg);

    std::string kind = cfg.at("kind").get<std::string>();
    if (kind == "auto") {
        if (fs::is_directory(input)) {
            kind = "epi";
        } else {
            const json j = load_json_file(input);
            const std::string type = j.value("type", "");
            if (type == "metric_report")
                kind = "report";
            else if (type == "sweep_table")
                kind = "sweep";
            else
                throw ConfigError("plot: cannot infer kind of " + input);
        }
    }

    if (kind == "report") {
        eval::MetricReport rep = eval::MetricReport::from_json(load_json_file(input));
        const int cell = cfg.at("cell").get<int>();
        fig::save_heatmap_png((fs::path(out) / "heatmap_psnr.png").string(),
                              eval::mean_view_grid(rep, true), cell);
        fig::save_heatmap_png((fs::path(out) / "heatmap_ssim.png").string(),
                              eval::mean_view_grid(rep, false), cell);
        std::cout << "wrote heatmap_psnr.png and heatmap_ssim.png to " << out << "\n";
    } else if (kind == "sweep") {
        eval::SweepTable table = eval::SweepTable::from_json(load_json_file(input));
        std::vector<double> xs(table.kds.begin(), table.kds.end());
        fig::save_polyline_svg((fs::path(out) / "psnr_vs_kd.svg").string(), xs, table.psnr,
                               table.models, "baseline multiplier", "psnr (dB)");
        std::cout << "wrote psnr_vs_kd.svg to " << out << "\n";
    } else if (kind == "epi") {
        LightField lf = io::load_scene(input);
        const bool row_axis = cfg.at("epi_axis").get<std::string>() == "row";
        int spatial = cfg.at("epi_row").get<int>();
        if (spatial < 0) spatial = (row_axis ? lf.height() : lf.width()) / 2;
        int ang = cfg.at("angular_index").get<int>();
        if (ang < 0) ang = (row_axis ? lf.views_u() : lf.views_v()) / 2;
        Tensor epi = synth::epi_extract(
            lf, row_axis ? synth::EpiAxis::row : synth::EpiAxis::col, spatial, ang);
        fig::save_epi_strip_png((fs::path(out) / "epi.png").string(), epi,
                                cfg.at("scale").get<int>());
        std::cout << "wrote epi.png to " << out << "\n";
    } else {
        throw ConfigError("plot: unknown kind " + kind);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"layered light-field super-resolution toolkit"};
    app.require_subcommand(1);

    Common gen_flags, train_flags, eval_flags, sweep_flags, ablate_flags, plot_flags;
    int epochs_flag = -1;
    std::string resume_flag, plot_input;

    CLI::App* gen = app.add_subcommand("generate", "render synthetic light-field datasets");
    gen_flags.attach(gen, false);
    CLI::App* train_cmd = app.add_subcommand("train", "train a model");
    train_flags.attach(train_cmd, true);
    train_cmd->add_option("--epochs", epochs_flag, "override total epochs");
    train_cmd->add_option("--resume", resume_flag, "checkpoint prefix to continue from");
    CLI::App* eval_cmd = app.add_subcommand("eval", "score a model on a dataset");
    eval_flags.attach(eval_cmd, true);
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "PSNR across baseline multipliers");
    sweep_flags.attach(sweep_cmd, true);
    CLI::App* ablate_cmd = app.add_subcommand("ablate", "train and score network variants");
    ablate_flags.attach(ablate_cmd, true);
    CLI::App* plot_cmd = app.add_subcommand("plot", "render figures from report files");
    plot_flags.attach(plot_cmd, false);
    plot_cmd->add_option("--input", plot_input, "report json or scene directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << json{{"code", kUsage}, {"error", e.what()}}.dump() << "\n";
        return kUsage;
    }

    try {
        if (gen->parsed()) return run_generate(gen_flags);
        if (train_cmd->parsed()) return run_train(train_flags, epochs_flag, resume_flag);
        if (eval_cmd->parsed()) return run_eval(eval_flags);
        if (sweep_cmd->parsed()) return run_sweep(sweep_flags);
        if (ablate_cmd->parsed()) return run_ablate(ablate_flags);
        if (plot_cmd->parsed()) return run_plot(plot_flags, plot_input);
    } catch (const ConfigError& e) {
        std::cerr << json{{"code", kConfig}, {"error", e.what()}}.dump() << "\n";
        return kConfig;
    } catch (const MissingInput& e) {
        std::cerr << json{{"code", kMissing}, {"error", e.what()}}.dump() << "\n";
        return kMissing;
    } catch (const std::exception& e) {
        std::cerr << json{{"code", kFailure}, {"error", e.what()}}.dump() << "\n";
        return kFailure;
    }
    return kUsage;
}
