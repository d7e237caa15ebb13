// vexus: per-title bitrate ladder toolkit.
//
// Subcommands cover the full pipeline: complexity features, XPSNR/PSNR
// scoring, BD metrics, resampling, dataset generation, model training,
// ladder prediction, comparative evaluation, and a latency probe.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

#include "vexus/bd.hpp"
#include "vexus/complexity.hpp"
#include "vexus/hull.hpp"
#include "vexus/media_io.hpp"
#include "vexus/pipeline.hpp"
#include "vexus/predictor.hpp"
#include "vexus/resample.hpp"
#include "vexus/xpsnr.hpp"

using nlohmann::json;

namespace {

struct RawGeometryFlags {
    int width = 0;
    int height = 0;
    int bitdepth = 8;
    std::string fps = "30/1";

    void add_to(CLI::App* cmd) {
        cmd->add_option("--width", width, "raw input width");
        cmd->add_option("--height", height, "raw input height");
        cmd->add_option("--bitdepth", bitdepth, "raw input bit depth")
            ->check(CLI::IsMember({8, 10}));
        cmd->add_option("--fps", fps, "frame rate N[/D]");
    }

    std::optional<vexus::SequenceGeometry> geometry() const {
        if (width == 0) return std::nullopt;
        vexus::SequenceGeometry g;
        g.width = width;
        g.height = height;
        g.bit_depth = bitdepth;
        auto slash = fps.find('/');
        g.frame_rate.num = std::stoi(fps.substr(0, slash));
        g.frame_rate.den = slash == std::string::npos ? 1 : std::stoi(fps.substr(slash + 1));
        return g;
    }
};

std::vector<vexus::FrameBuffer> load_frames(const std::string& path, const RawGeometryFlags& geo) {
    auto handle = vexus::open_sequence(path, geo.geometry());
    return vexus::read_all_frames(handle);
}

vexus::RdCurve load_rd_csv(const std::string& path, bool use_xpsnr) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error(path + ": open failed");
    std::string line;
    std::getline(f, line);  // header: bitrate_kbps,psnr_db,xpsnr_db
    std::vector<vexus::RdSample> pts;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream iss(line);
        std::string a, b, c;
        std::getline(iss, a, ',');
        std::getline(iss, b, ',');
        std::getline(iss, c, ',');
        pts.push_back({std::stod(a), std::stod(use_xpsnr ? c : b)});
    }
    return vexus::pareto_clean(std::move(pts), path);
}

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream f(path);
    if (!f) throw std::runtime_error(path + ": open failed");
    json j;
    f >> j;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vexus: per-title bitrate ladder toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    int jobs = 1;
    uint64_t seed = 0;
    bool mock = false;
    app.add_option("--config", config_path, "config JSON (hull, harness, fixed ladder)");
    app.add_option("--jobs", jobs, "parallel encode jobs");
    app.add_option("--seed", seed, "RNG seed for training");
    app.add_flag("--mock", mock, "use the deterministic mock encoder");

    // features
    auto* cmd_features = app.add_subcommand("features", "extract scene complexity features");
    std::string feat_input, feat_csv;
    RawGeometryFlags feat_geo;
    cmd_features->add_option("input", feat_input)->required();
    cmd_features->add_option("--per-frame-csv", feat_csv, "optional per-frame CSV output");
    feat_geo.add_to(cmd_features);

    // xpsnr
    auto* cmd_xpsnr = app.add_subcommand("xpsnr", "XPSNR/PSNR between two sequences");
    std::string x_ref, x_dist, x_blocks;
    RawGeometryFlags x_geo;
    cmd_xpsnr->add_option("--ref", x_ref)->required();
    cmd_xpsnr->add_option("--dist", x_dist)->required();
    cmd_xpsnr->add_option("--dump-blocks", x_blocks, "per-block CSV dump");
    x_geo.add_to(cmd_xpsnr);

    // bd
    auto* cmd_bd = app.add_subcommand("bd", "Bjontegaard Delta between two RD curves");
    std::string bd_ref, bd_test, bd_metric = "psnr";
    cmd_bd->add_option("--ref", bd_ref)->required();
    cmd_bd->add_option("--test", bd_test)->required();
    cmd_bd->add_option("--metric", bd_metric)->check(CLI::IsMember({"psnr", "xpsnr"}));

    // resample
    auto* cmd_resample = app.add_subcommand("resample", "bicubic rescale of a sequence");
    std::string rs_input, rs_output, rs_size;
    RawGeometryFlags rs_geo;
    cmd_resample->add_option("input", rs_input)->required();
    cmd_resample->add_option("output", rs_output)->required();
    cmd_resample->add_option("--size", rs_size, "target WxH")->required();
    rs_geo.add_to(cmd_resample);

    // dataset
    auto* cmd_dataset = app.add_subcommand("dataset", "generate the training dataset CSV");
    std::string ds_manifest, ds_out;
    cmd_dataset->add_option("--manifest", ds_manifest)->required();
    cmd_dataset->add_option("--out", ds_out)->required();

    // train
    auto* cmd_train = app.add_subcommand("train", "train a prediction model");
    std::string tr_dataset, tr_kind, tr_out;
    int tr_trees = 400, tr_depth = 10;
    double tr_lr = 0.1;
    cmd_train->add_option("--dataset", tr_dataset)->required();
    cmd_train->add_option("--kind", tr_kind)
        ->required()
        ->check(CLI::IsMember({"xpsnr", "bitrate_qmin", "bitrate_qmax"}));
    cmd_train->add_option("--out", tr_out)->required();
    cmd_train->add_option("--trees", tr_trees, "ensemble size");
    cmd_train->add_option("--depth", tr_depth, "max tree depth");
    cmd_train->add_option("--learning-rate", tr_lr);

    // ladder
    auto* cmd_ladder = app.add_subcommand("ladder", "predict a bitrate ladder for a scene");
    std::string ld_features, ld_models;
    int ld_rmax = 2160;
    cmd_ladder->add_option("--features", ld_features, "features JSON from `features`")->required();
    cmd_ladder->add_option("--models", ld_models, "directory with xpsnr/bitrate model files")
        ->required();
    cmd_ladder->add_option("--rmax", ld_rmax, "resolution height cap");

    // evaluate
    auto* cmd_eval = app.add_subcommand("evaluate", "compare methods with BD metrics");
    std::string ev_manifest, ev_models, ev_out = "report";
    cmd_eval->add_option("--manifest", ev_manifest)->required();
    cmd_eval->add_option("--models", ev_models, "model directory (omit for mock oracle)");
    cmd_eval->add_option("--out", ev_out, "output prefix for report files");

    // probe
    auto* cmd_probe = app.add_subcommand("probe", "feature/prediction latency probe");
    std::string pr_models;
    cmd_probe->add_option("--models", pr_models, "model directory (omit for mock oracle)");

    CLI11_PARSE(app, argc, argv);

    try {
        json config = load_config(config_path);
        vexus::SceneManifest base_manifest;
        if (config.contains("hull") || config.contains("fixed_ladder")) {
            json m = config;
            m["scenes"] = json::array();
            base_manifest = vexus::manifest_from_json(m);
        }
        vexus::HarnessConfig harness =
            config.contains("harness") ? vexus::harness_from_json(config.at("harness"))
                                       : vexus::HarnessConfig{};
        if (mock) harness.mock = true;
        harness.jobs = jobs;

        auto make_predictor = [&](const std::string& model_dir)
            -> std::unique_ptr<vexus::LadderPredictor> {
            if (model_dir.empty()) {
                if (!harness.mock)
                    throw std::runtime_error("--models required unless running with --mock");
                return std::make_unique<vexus::MockOracleLadderPredictor>(
                    harness.mock_params, harness.couple_scene_complexity, base_manifest.hull.q_min,
                    base_manifest.hull.q_max);
            }
            return std::make_unique<vexus::ModelLadderPredictor>(
                vexus::load_model(model_dir + "/xpsnr.json"),
                vexus::load_model(model_dir + "/bitrate_qmin.json"),
                vexus::load_model(model_dir + "/bitrate_qmax.json"));
        };

        if (*cmd_features) {
            auto frames = load_frames(feat_input, feat_geo);
            std::vector<vexus::FrameFeatures> per_frame;
            auto f = vexus::extract_scene_features(frames, &per_frame);
            json out = {{"E_Y", f.E_Y}, {"h", f.h},     {"L_Y", f.L_Y},
                        {"E_U", f.E_U}, {"L_U", f.L_U}, {"E_V", f.E_V},
                        {"L_V", f.L_V}, {"frames", f.frame_count}};
            std::cout << out.dump(2) << "\n";
            if (!feat_csv.empty()) {
                std::ofstream c(feat_csv, std::ios::trunc);
                c << "frame,E_Y,h,L_Y,E_U,L_U,E_V,L_V\n";
                for (size_t i = 0; i < per_frame.size(); ++i) {
                    const auto& p = per_frame[i];
                    c << i << ',' << p.E_Y << ',' << p.h << ',' << p.L_Y << ',' << p.E_U << ','
                      << p.L_U << ',' << p.E_V << ',' << p.L_V << "\n";
                }
            }
        } else if (*cmd_xpsnr) {
            auto ref = load_frames(x_ref, x_geo);
            auto dist = load_frames(x_dist, x_geo);
            auto m = vexus::sequence_metrics(ref, dist);
            json per_frame = json::array();
            for (size_t i = 0; i < m.per_frame_xpsnr.size(); ++i)
                per_frame.push_back(
                    {{"frame", i}, {"xpsnr", m.per_frame_xpsnr[i]}, {"psnr", m.per_frame_psnr[i]}});
            json out = {{"xpsnr", m.xpsnr_db},
                        {"psnr", m.psnr_db},
                        {"frames", ref.size()},
                        {"per_frame", per_frame}};
            std::cout << out.dump(2) << "\n";
            if (!x_blocks.empty()) {
                std::ofstream c(x_blocks, std::ios::trunc);
                c << "frame,block_x,block_y,activity,weight,sse\n";
                auto cfg = vexus::make_xpsnr_config(ref[0].width, ref[0].height, ref[0].bit_depth,
                                                    ref[0].frame_rate);
                for (size_t t = 0; t < ref.size(); ++t) {
                    std::vector<const vexus::FrameBuffer*> hist;
                    if (t >= 2) hist.push_back(&ref[t - 2]);
                    if (t >= 1) hist.push_back(&ref[t - 1]);
                    auto fx = vexus::frame_xpsnr(ref[t], dist[t], hist, cfg);
                    for (int by = 0; by < fx.blocks.blocks_y; ++by)
                        for (int bx = 0; bx < fx.blocks.blocks_x; ++bx) {
                            size_t k = static_cast<size_t>(by) * fx.blocks.blocks_x + bx;
                            c << t << ',' << bx << ',' << by << ',' << fx.blocks.activity[k] << ','
                              << fx.blocks.weight[k] << ',' << fx.blocks.sse[k] << "\n";
                        }
                }
            }
        } else if (*cmd_bd) {
            bool use_xpsnr = bd_metric == "xpsnr";
            auto ref = load_rd_csv(bd_ref, use_xpsnr);
            auto test = load_rd_csv(bd_test, use_xpsnr);
            json out = {{"bd_rate_pct", vexus::bd_rate(ref, test)},
                        {"bd_quality_db", vexus::bd_quality(ref, test)}};
            std::cout << out.dump(2) << "\n";
        } else if (*cmd_resample) {
            auto x = rs_size.find('x');
            if (x == std::string::npos) throw std::runtime_error("--size must be WxH");
            vexus::ResampleSpec spec{std::stoi(rs_size.substr(0, x)),
                                     std::stoi(rs_size.substr(x + 1))};
            auto frames = load_frames(rs_input, rs_geo);
            auto out = vexus::resample(frames, spec);
            auto fmt = rs_output.size() > 4 && rs_output.substr(rs_output.size() - 4) == ".y4m"
                           ? vexus::SequenceFormat::Y4m
                           : vexus::SequenceFormat::Raw;
            vexus::write_sequence(out, rs_output, fmt);
        } else if (*cmd_dataset) {
            std::ifstream mf(ds_manifest);
            if (!mf) throw std::runtime_error(ds_manifest + ": open failed");
            json jm;
            mf >> jm;
            auto manifest = vexus::manifest_from_json(jm);
            if (jm.contains("harness")) harness = vexus::harness_from_json(jm.at("harness"));
            if (mock) harness.mock = true;
            harness.jobs = jobs;
            std::vector<vexus::SceneContext> scenes;
            for (const auto& s : manifest.scenes) scenes.push_back(vexus::load_scene(s));
            auto result = vexus::generate_dataset(scenes, manifest.hull, harness, ds_out);
            std::cerr << "dataset: " << result.rows << " rows, " << result.failures.size()
                      << " failed cells\n";
            for (const auto& f : result.failures) std::cerr << "  failed: " << f << "\n";
            return result.failures.empty() ? 0 : 2;
        } else if (*cmd_train) {
            auto rows = vexus::load_dataset(tr_dataset);
            auto kind = vexus::model_kind_from_string(tr_kind);
            auto samples = vexus::dataset_to_samples(rows, kind, base_manifest.hull.q_min,
                                                     base_manifest.hull.q_max);
            vexus::GbtParams params;
            params.n_trees = tr_trees;
            params.max_depth = tr_depth;
            params.learning_rate = tr_lr;
            auto model = vexus::train(samples, kind, params, seed);
            vexus::save_model(model, tr_out);
            json meta = {{"kind", vexus::to_string(kind)},
                         {"n_samples", model.meta.n_samples},
                         {"cv_fold_mae", model.meta.cv_fold_mae}};
            std::cout << meta.dump(2) << "\n";
        } else if (*cmd_ladder) {
            std::ifstream ff(ld_features);
            if (!ff) throw std::runtime_error(ld_features + ": open failed");
            json jf;
            ff >> jf;
            vexus::SceneFeatures f;
            f.E_Y = jf.at("E_Y");
            f.h = jf.at("h");
            f.L_Y = jf.at("L_Y");
            f.E_U = jf.at("E_U");
            f.L_U = jf.at("L_U");
            f.E_V = jf.at("E_V");
            f.L_V = jf.at("L_V");
            auto hull = base_manifest.hull;
            hull.r_max = ld_rmax;
            auto predictor = make_predictor(ld_models);
            auto ladder = vexus::predict_ladder(f, hull, *predictor);
            json out = json::array();
            for (const auto& e : ladder)
                out.push_back({{"target_kbps", e.target_bitrate_kbps},
                               {"height", e.resolution},
                               {"qp", e.qp},
                               {"predicted_xpsnr", e.predicted_xpsnr_db}});
            std::cout << out.dump(2) << "\n";
        } else if (*cmd_eval) {
            std::ifstream mf(ev_manifest);
            if (!mf) throw std::runtime_error(ev_manifest + ": open failed");
            json jm;
            mf >> jm;
            auto manifest = vexus::manifest_from_json(jm);
            if (jm.contains("harness")) harness = vexus::harness_from_json(jm.at("harness"));
            if (mock) harness.mock = true;
            harness.jobs = jobs;
            std::vector<vexus::SceneContext> scenes;
            for (const auto& s : manifest.scenes) scenes.push_back(vexus::load_scene(s));
            auto predictor = make_predictor(ev_models);
            auto report = vexus::evaluate(scenes, manifest, harness, *predictor);
            vexus::write_report(report, ev_out);
            std::cout << vexus::report_to_json(report).dump(2) << "\n";
        } else if (*cmd_probe) {
            auto predictor = make_predictor(pr_models);
            auto probe = vexus::preprocess_latency_probe(*predictor, base_manifest.hull);
            json out = {{"feature_fps", probe.feature_fps},
                        {"predict_ms", probe.predict_ms},
                        {"predict_ms_spread", probe.predict_ms_spread}};
            std::cout << out.dump(2) << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
