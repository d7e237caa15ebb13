#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vexus/bd.hpp"
#include "vexus/hull.hpp"
#include "vexus/media_io.hpp"

namespace vexus {

struct SceneRef {
    std::string scene_id;
    std::string path;
    int64_t start = 0;
    int64_t count = 0;  // 0 = to end of sequence
    std::optional<SequenceGeometry> geometry;  // raw input only
};

struct SceneManifest {
    std::vector<SceneRef> scenes;
    HullConfig hull;
    std::map<double, int> fixed_ladder_table = default_fixed_ladder_table();

    void validate() const {
        hull.validate();
        std::set<std::string> ids;
        for (const auto& s : scenes)
            if (!ids.insert(s.scene_id).second)
                throw std::invalid_argument("manifest: duplicate scene_id " + s.scene_id);
    }
};

inline SceneManifest manifest_from_json(const nlohmann::json& j) {
    SceneManifest m;
    for (const auto& js : j.at("scenes")) {
        SceneRef s;
        s.scene_id = js.at("scene_id").get<std::string>();
        s.path = js.at("path").get<std::string>();
        s.start = js.value("start", 0);
        s.count = js.value("count", 0);
        if (js.contains("width")) {
            SequenceGeometry g;
            g.width = js.at("width").get<int>();
            g.height = js.at("height").get<int>();
            g.bit_depth = js.value("bitdepth", 8);
            std::string fps = js.value("fps", "30/1");
            auto slash = fps.find('/');
            g.frame_rate.num = std::stoi(fps.substr(0, slash));
            g.frame_rate.den = slash == std::string::npos ? 1 : std::stoi(fps.substr(slash + 1));
            s.geometry = g;
        }
        m.scenes.push_back(std::move(s));
    }
    if (j.contains("hull")) {
        const auto& jh = j.at("hull");
        if (jh.contains("resolutions"))
            m.hull.resolutions = jh.at("resolutions").get<std::vector<int>>();
        if (jh.contains("target_bitrates_kbps"))
            m.hull.target_bitrates_kbps = jh.at("target_bitrates_kbps").get<std::vector<double>>();
        m.hull.r_max = jh.value("r_max", m.hull.r_max);
        m.hull.q_min = jh.value("q_min", m.hull.q_min);
        m.hull.q_max = jh.value("q_max", m.hull.q_max);
    }
    if (j.contains("fixed_ladder")) {
        m.fixed_ladder_table.clear();
        for (const auto& [key, value] : j.at("fixed_ladder").items())
            m.fixed_ladder_table[std::stod(key)] = value.get<int>();
    }
    m.validate();
    return m;
}

inline HarnessConfig harness_from_json(const nlohmann::json& j) {
    HarnessConfig h;
    h.mock = j.value("mock", true);
    h.cache_dir = j.value("cache_dir", std::string{});
    h.jobs = j.value("jobs", 1);
    h.couple_scene_complexity = j.value("couple_scene_complexity", true);
    if (j.contains("mock_params")) {
        const auto& jm = j.at("mock_params");
        auto& p = h.mock_params;
        p.c = jm.value("c", p.c);
        p.alpha = jm.value("alpha", p.alpha);
        p.qp_halving = jm.value("qp_halving", p.qp_halving);
        p.anchor_bitrate_kbps = jm.value("anchor_bitrate_kbps", p.anchor_bitrate_kbps);
        p.gamma = jm.value("gamma", p.gamma);
        p.half_rate_kbps = jm.value("half_rate_kbps", p.half_rate_kbps);
    }
    if (j.contains("encoder_spec")) {
        const auto& je = j.at("encoder_spec");
        h.spec.encode_cmd = je.value("encode_cmd", std::string{});
        h.spec.decode_cmd = je.value("decode_cmd", std::string{});
        h.spec.threads = je.value("threads", 4);
        if (je.contains("env"))
            h.spec.env = je.at("env").get<std::map<std::string, std::string>>();
    }
    return h;
}

inline SceneContext load_scene(const SceneRef& ref) {
    auto handle = open_sequence(ref.path, ref.geometry);
    int64_t count = ref.count > 0 ? ref.count : handle.frame_count - ref.start;
    if (ref.start < 0 || ref.start + count > handle.frame_count)
        throw std::runtime_error(ref.scene_id + ": frame range outside sequence");
    std::vector<FrameBuffer> frames;
    for (int64_t i = 0; i < count; ++i) frames.push_back(read_frame(handle, ref.start + i));
    return make_scene_context(ref.scene_id, std::move(frames));
}

// ----------------------------------------------------------- dataset

namespace detail {

inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

inline const char* kDatasetHeader =
    "scene_id,E_Y,h,L_Y,E_U,L_U,E_V,L_V,resolution,qp,bitrate_kbps,psnr_db,xpsnr_db";

struct DatasetResult {
    int64_t rows = 0;
    std::vector<std::string> failures;
};

// One CSV row per (scene, resolution, qp) cell; deterministic ordering
// (manifest order, r ascending, q ascending). Failed cells are reported
// and skipped.
inline DatasetResult generate_dataset(const std::vector<SceneContext>& scenes,
                                      const HullConfig& hull, const HarnessConfig& harness,
                                      const std::string& csv_path) {
    std::ofstream out(csv_path, std::ios::trunc);
    if (!out) throw std::runtime_error(csv_path + ": open for write failed");
    out << kDatasetHeader << "\n";

    DatasetResult result;
    for (const auto& scene : scenes) {
        auto sweep = exhaustive_sweep(scene, hull.resolutions, hull.r_max, hull.q_min, hull.q_max,
                                      harness);
        for (const auto& f : sweep.failures)
            result.failures.push_back(scene.scene_id + "/" + f);
        const auto& ft = scene.features;
        for (const auto& p : sweep.points) {
            out << scene.scene_id << ',' << detail::fmt_double(ft.E_Y) << ','
                << detail::fmt_double(ft.h) << ',' << detail::fmt_double(ft.L_Y) << ','
                << detail::fmt_double(ft.E_U) << ',' << detail::fmt_double(ft.L_U) << ','
                << detail::fmt_double(ft.E_V) << ',' << detail::fmt_double(ft.L_V) << ','
                << p.resolution << ',' << p.qp << ',' << detail::fmt_double(p.bitrate_kbps) << ','
                << detail::fmt_double(p.psnr_db) << ',' << detail::fmt_double(p.xpsnr_db) << "\n";
            ++result.rows;
        }
    }
    out.flush();
    if (!out) throw std::runtime_error(csv_path + ": write failed");
    return result;
}

struct DatasetRow {
    std::string scene_id;
    SceneFeatures features;
    int resolution = 0;
    int qp = 0;
    double bitrate_kbps = 0.0;
    double psnr_db = 0.0;
    double xpsnr_db = 0.0;
};

inline std::vector<DatasetRow> load_dataset(const std::string& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw std::runtime_error(csv_path + ": open failed");
    std::string line;
    if (!std::getline(in, line) || line != kDatasetHeader)
        throw std::runtime_error(csv_path + ": unexpected dataset header");
    std::vector<DatasetRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream iss(line);
        std::string tok;
        std::vector<std::string> cells;
        while (std::getline(iss, tok, ',')) cells.push_back(tok);
        if (cells.size() != 13) throw std::runtime_error(csv_path + ": malformed row: " + line);
        DatasetRow r;
        r.scene_id = cells[0];
        r.features.E_Y = std::stod(cells[1]);
        r.features.h = std::stod(cells[2]);
        r.features.L_Y = std::stod(cells[3]);
        r.features.E_U = std::stod(cells[4]);
        r.features.L_U = std::stod(cells[5]);
        r.features.E_V = std::stod(cells[6]);
        r.features.L_V = std::stod(cells[7]);
        r.resolution = std::stoi(cells[8]);
        r.qp = std::stoi(cells[9]);
        r.bitrate_kbps = std::stod(cells[10]);
        r.psnr_db = std::stod(cells[11]);
        r.xpsnr_db = std::stod(cells[12]);
        rows.push_back(std::move(r));
    }
    return rows;
}

// Training views of the dataset. XPSNR samples use every row; the two
// bitrate models use only the q_min / q_max rows, regressing log10(rate).
inline std::vector<TrainingSample> dataset_to_samples(const std::vector<DatasetRow>& rows,
                                                      ModelKind kind, int q_min, int q_max) {
    std::vector<TrainingSample> samples;
    for (const auto& r : rows) {
        if (kind == ModelKind::BitrateAtQmin && r.qp != q_min) continue;
        if (kind == ModelKind::BitrateAtQmax && r.qp != q_max) continue;
        TrainingSample s;
        s.scene_id = r.scene_id;
        s.features.features = r.features;
        s.features.bitrate_kbps = r.bitrate_kbps;
        s.features.r_norm = r.resolution / 2160.0;
        s.target = kind == ModelKind::Xpsnr ? r.xpsnr_db : std::log10(r.bitrate_kbps);
        samples.push_back(std::move(s));
    }
    return samples;
}

// ---------------------------------------------------------- evaluation

inline const std::vector<std::string> kMethods = {"default", "fixed_ladder", "bruteforce",
                                                 "predicted"};

struct MethodScores {
    double bdr_psnr_pct = 0.0;
    double bdr_xpsnr_pct = 0.0;
    double bd_psnr_db = 0.0;
    double bd_xpsnr_db = 0.0;
    double dt_enc_pct = 0.0;
    double dt_dec_pct = 0.0;
};

struct SceneMethodCurve {
    std::string scene_id;
    std::string method;
    std::vector<RdPoint> points;  // achieved encodes of the ladder
    double enc_time_s = 0.0;      // total encode effort of the method
    double dec_time_s = 0.0;      // decode time of the delivered streams
};

struct EvaluationReport {
    std::map<std::string, MethodScores> methods;  // averages vs default
    std::map<std::string, int> scenes_counted;
    std::map<std::string, int> scenes_excluded;
    std::vector<SceneMethodCurve> curves;
    std::vector<std::string> warnings;
};

namespace detail {

inline RdCurve curve_of(const SceneMethodCurve& c, bool use_xpsnr) {
    std::vector<RdSample> pts;
    for (const auto& p : c.points)
        pts.push_back({p.bitrate_kbps, use_xpsnr ? p.xpsnr_db : p.psnr_db});
    return pareto_clean(std::move(pts), c.method);
}

}  // namespace detail

// Comparative evaluation of the four methods on a scene set. BD values
// are unweighted means over scenes; time deltas are total-time ratios
// over all targets and scenes.
inline EvaluationReport evaluate(const std::vector<SceneContext>& scenes,
                                 const SceneManifest& manifest, const HarnessConfig& harness,
                                 const LadderPredictor& predictor) {
    const HullConfig& hull = manifest.hull;
    EvaluationReport report;

    struct Accum {
        double bdr_p = 0, bdr_x = 0, bd_p = 0, bd_x = 0;
        int n_p = 0, n_x = 0, excluded = 0;
        double enc_s = 0, dec_s = 0;
    };
    std::map<std::string, Accum> acc;

    for (const auto& scene : scenes) {
        auto sweep = exhaustive_sweep(scene, hull.resolutions, hull.r_max, hull.q_min, hull.q_max,
                                      harness);
        if (!sweep.failures.empty()) {
            for (const auto& f : sweep.failures)
                report.warnings.push_back(scene.scene_id + "/" + f);
            continue;
        }
        double sweep_enc_s = 0.0;
        for (const auto& p : sweep.points) sweep_enc_s += p.enc_time_s;

        const int source_height =
            scene.frames.empty() ? hull.resolutions.back() : scene.frames[0].height;
        // The default method encodes everything at the maximal allowed
        // resolution, so it is capped by r_max like every other method.
        const int default_height = std::min(source_height, hull.r_max);

        std::map<std::string, std::vector<LadderEntry>> ladders;
        {
            std::vector<LadderEntry> def;
            auto bounds = predictor.bitrate_bounds(scene.features, default_height / 2160.0);
            for (double b : hull.target_bitrates_kbps) {
                LadderEntry e;
                e.target_bitrate_kbps = b;
                e.resolution = default_height;
                e.qp = interpolate_qp_guarded(hull.q_min, hull.q_max, bounds, b);
                def.push_back(e);
            }
            ladders["default"] = std::move(def);
        }
        ladders["fixed_ladder"] =
            fixed_ladder(hull, manifest.fixed_ladder_table, scene.features, predictor);
        ladders["bruteforce"] = brute_force_hull(sweep.points, hull);
        ladders["predicted"] = predict_ladder(scene.features, hull, predictor);

        std::map<std::string, SceneMethodCurve> curves;
        for (const auto& method : kMethods) {
            SceneMethodCurve c;
            c.scene_id = scene.scene_id;
            c.method = method;
            for (const auto& e : ladders[method]) {
                RdPoint p = encode_point(scene, e.resolution, e.qp, harness);
                c.enc_time_s += p.enc_time_s;
                c.dec_time_s += p.dec_time_s;
                c.points.push_back(std::move(p));
            }
            if (method == "bruteforce") c.enc_time_s = sweep_enc_s;
            curves[method] = c;
            report.curves.push_back(std::move(c));
        }

        for (const auto& method : kMethods) {
            auto& a = acc[method];
            a.enc_s += curves[method].enc_time_s;
            a.dec_s += curves[method].dec_time_s;
            if (method == "default") {
                a.n_p++;
                a.n_x++;
                continue;
            }
            for (bool use_xpsnr : {false, true}) {
                try {
                    auto ref = detail::curve_of(curves["default"], use_xpsnr);
                    auto test = detail::curve_of(curves[method], use_xpsnr);
                    double rate = bd_rate(ref, test);
                    double qual = bd_quality(ref, test);
                    if (use_xpsnr) {
                        a.bdr_x += rate;
                        a.bd_x += qual;
                        a.n_x++;
                    } else {
                        a.bdr_p += rate;
                        a.bd_p += qual;
                        a.n_p++;
                    }
                } catch (const std::exception& e) {
                    a.excluded++;
                    report.warnings.push_back(scene.scene_id + "/" + method + ": BD skipped (" +
                                              std::string(e.what()) + ")");
                }
            }
        }
    }

    const double def_enc = acc["default"].enc_s;
    const double def_dec = acc["default"].dec_s;
    for (const auto& method : kMethods) {
        const auto& a = acc[method];
        MethodScores s;
        if (method != "default") {
            s.bdr_psnr_pct = a.n_p ? a.bdr_p / a.n_p : 0.0;
            s.bdr_xpsnr_pct = a.n_x ? a.bdr_x / a.n_x : 0.0;
            s.bd_psnr_db = a.n_p ? a.bd_p / a.n_p : 0.0;
            s.bd_xpsnr_db = a.n_x ? a.bd_x / a.n_x : 0.0;
            s.dt_enc_pct = def_enc > 0 ? 100.0 * (a.enc_s - def_enc) / def_enc : 0.0;
            s.dt_dec_pct = def_dec > 0 ? 100.0 * (a.dec_s - def_dec) / def_dec : 0.0;
        }
        report.methods[method] = s;
        report.scenes_counted[method] = std::max(acc[method].n_p, acc[method].n_x);
        report.scenes_excluded[method] = acc[method].excluded;
    }
    return report;
}

inline nlohmann::json report_to_json(const EvaluationReport& report) {
    nlohmann::json methods = nlohmann::json::object();
    for (const auto& [name, s] : report.methods) {
        methods[name] = {{"bdr_psnr_pct", s.bdr_psnr_pct},
                         {"bdr_xpsnr_pct", s.bdr_xpsnr_pct},
                         {"bd_psnr_db", s.bd_psnr_db},
                         {"bd_xpsnr_db", s.bd_xpsnr_db},
                         {"dt_enc_pct", s.dt_enc_pct},
                         {"dt_dec_pct", s.dt_dec_pct},
                         {"scenes_counted", report.scenes_counted.at(name)},
                         {"scenes_excluded", report.scenes_excluded.at(name)}};
    }
    // Time deltas are total-time ratios: 100 * (sum(method) - sum(default)) / sum(default).
    return {{"methods", methods},
            {"time_delta_definition", "total_time_ratio"},
            {"warnings", report.warnings}};
}

// JSON summary, per-method CSV, and RD plot data (one row per achieved
// encode, as plotted per scene panel).
inline void write_report(const EvaluationReport& report, const std::string& out_prefix) {
    {
        std::ofstream f(out_prefix + ".json", std::ios::trunc);
        f << report_to_json(report).dump(2) << "\n";
    }
    {
        std::ofstream f(out_prefix + ".csv", std::ios::trunc);
        f << "method,bdr_psnr_pct,bdr_xpsnr_pct,bd_psnr_db,bd_xpsnr_db,dt_enc_pct,dt_dec_pct\n";
        for (const auto& [name, s] : report.methods)
            f << name << ',' << detail::fmt_double(s.bdr_psnr_pct) << ','
              << detail::fmt_double(s.bdr_xpsnr_pct) << ',' << detail::fmt_double(s.bd_psnr_db)
              << ',' << detail::fmt_double(s.bd_xpsnr_db) << ','
              << detail::fmt_double(s.dt_enc_pct) << ',' << detail::fmt_double(s.dt_dec_pct)
              << "\n";
    }
    {
        std::ofstream f(out_prefix + "_rd.csv", std::ios::trunc);
        f << "scene_id,method,target_index,resolution,qp,bitrate_kbps,psnr_db,xpsnr_db\n";
        for (const auto& c : report.curves) {
            int i = 0;
            for (const auto& p : c.points)
                f << c.scene_id << ',' << c.method << ',' << i++ << ',' << p.resolution << ','
                  << p.qp << ',' << detail::fmt_double(p.bitrate_kbps) << ','
                  << detail::fmt_double(p.psnr_db) << ',' << detail::fmt_double(p.xpsnr_db)
                  << "\n";
        }
    }
}

// --------------------------------------------------------------- probe

struct LatencyProbe {
    double feature_fps = 0.0;   // 2160p feature-extraction throughput
    double predict_ms = 0.0;    // median per-target ladder prediction latency
    double predict_ms_spread = 0.0;
};

inline LatencyProbe preprocess_latency_probe(const LadderPredictor& predictor,
                                             const HullConfig& hull, int probe_frames = 4) {
    FrameBuffer frame(3840, 2160, 8, {60, 1});
    uint32_t state = 0x12345678u;
    for (auto& s : frame.y) {
        state = state * 1664525u + 1013904223u;
        s = static_cast<uint16_t>(state >> 24);
    }
    std::vector<FrameBuffer> frames(static_cast<size_t>(probe_frames), frame);

    auto t0 = std::chrono::steady_clock::now();
    auto features = extract_scene_features(frames);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    LatencyProbe probe;
    probe.feature_fps = probe_frames / secs;

    std::vector<double> times_ms;
    for (int rep = 0; rep < 9; ++rep) {
        for (double b : hull.target_bitrates_kbps) {
            auto s0 = std::chrono::steady_clock::now();
            for (int r : hull.resolutions)
                if (r <= hull.r_max) (void)predictor.predict_xpsnr(features, b, r / 2160.0);
            times_ms.push_back(
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - s0)
                    .count());
        }
    }
    std::sort(times_ms.begin(), times_ms.end());
    probe.predict_ms = times_ms[times_ms.size() / 2];
    probe.predict_ms_spread = times_ms.back() - times_ms.front();
    return probe;
}

}  // namespace vexus
