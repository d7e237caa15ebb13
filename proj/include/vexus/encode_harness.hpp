#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "vexus/complexity.hpp"
#include "vexus/media_io.hpp"
#include "vexus/resample.hpp"
#include "vexus/xpsnr.hpp"

namespace vexus {

// One measured (or mocked) encode of a scene at (resolution, qp).
struct RdPoint {
    std::string scene_id;
    int resolution = 0;  // height, pixels
    int qp = 0;
    double bitrate_kbps = 0.0;
    double psnr_db = 0.0;
    double xpsnr_db = 0.0;
    double enc_time_s = 0.0;
    double dec_time_s = 0.0;
};

// ---------------------------------------------------------------- mock

// Analytic rate/quality surfaces for desk-scale testing. All values are
// synthetic; the defaults are shaped so that RD curves of different
// resolutions cross (low resolutions win at low bitrates) and lower
// resolutions saturate at a lower quality ceiling.
struct MockEncoderParams {
    double c = 1.0;              // per-scene complexity coefficient
    double alpha = 2.0;          // rate exponent over normalized resolution
    double qp_halving = 6.0;     // QP increase that halves the bitrate
    double anchor_bitrate_kbps = 16800.0;  // bitrate at (2160p, q_ref) with c = 1
    int q_ref = 10;
    double quality_base_db = 25.0;   // logistic XPSNR floor
    double quality_span_min = 10.0;  // ceiling above floor at r -> 0
    double quality_span_gain = 12.0; // extra ceiling at 2160p
    double half_rate_kbps = 2000.0;  // logistic half-saturation bitrate at 2160p, c = 1
    double beta_exponent = 1.5;      // resolution scaling of the half-saturation rate
    double gamma = 1.2;              // logistic sharpness
    double psnr_offset_db = -4.0;    // PSNR surface shift vs XPSNR
    double enc_s_per_mpx = 0.05;     // synthesized timing bases
    double dec_s_per_mpx = 0.01;
};

// Deterministic per-scene complexity coefficient used by the pipeline to
// couple the mock surfaces to the extracted features.
inline double scene_complexity_coefficient(const SceneFeatures& f) {
    return 0.4 + f.E_Y / 150.0 + f.h / 300.0;
}

inline double mock_bitrate_kbps(const MockEncoderParams& p, int resolution, int qp) {
    double rn = resolution / 2160.0;
    return p.c * std::pow(rn, p.alpha) * p.anchor_bitrate_kbps *
           std::exp2(-(qp - p.q_ref) / p.qp_halving);
}

inline double mock_xpsnr_db(const MockEncoderParams& p, int resolution, double bitrate_kbps) {
    double rn = resolution / 2160.0;
    double ceiling = p.quality_span_min + p.quality_span_gain * std::sqrt(rn);
    double beta = p.c * p.half_rate_kbps * std::pow(rn, p.beta_exponent);
    double bg = std::pow(bitrate_kbps, p.gamma);
    return p.quality_base_db + ceiling * bg / (bg + std::pow(beta, p.gamma));
}

inline double mock_psnr_db(const MockEncoderParams& p, int resolution, double bitrate_kbps) {
    double rn = resolution / 2160.0;
    double ceiling = p.quality_span_min + 6.0 + p.quality_span_gain * std::sqrt(rn);
    double beta = p.c * p.half_rate_kbps * std::pow(rn, p.beta_exponent);
    double bg = std::pow(bitrate_kbps, p.gamma);
    return p.quality_base_db + p.psnr_offset_db + ceiling * bg / (bg + std::pow(beta, p.gamma));
}

inline double mock_enc_time_s(const MockEncoderParams& p, int resolution, int qp) {
    double mpx = resolution * (resolution * 16.0 / 9.0) / 1e6;
    return p.enc_s_per_mpx * mpx * (1.0 + (51.0 - qp) / 40.0);
}

inline double mock_dec_time_s(const MockEncoderParams& p, int resolution) {
    double mpx = resolution * (resolution * 16.0 / 9.0) / 1e6;
    return p.dec_s_per_mpx * mpx;
}

inline RdPoint mock_encode(const std::string& scene_id, int resolution, int qp,
                           const MockEncoderParams& params) {
    RdPoint pt;
    pt.scene_id = scene_id;
    pt.resolution = resolution;
    pt.qp = qp;
    pt.bitrate_kbps = mock_bitrate_kbps(params, resolution, qp);
    pt.xpsnr_db = mock_xpsnr_db(params, resolution, pt.bitrate_kbps);
    pt.psnr_db = mock_psnr_db(params, resolution, pt.bitrate_kbps);
    pt.enc_time_s = mock_enc_time_s(params, resolution, qp);
    pt.dec_time_s = mock_dec_time_s(params, resolution);
    return pt;
}

// ------------------------------------------------------------ external

// Command templates for an external encoder/decoder pair. Placeholders:
// {input} {output} {qp} {maxrate} {width} {height} {fps} {threads}.
struct EncoderSpec {
    std::string encode_cmd;
    std::string decode_cmd;
    int threads = 4;
    std::map<std::string, std::string> env;
};

struct SceneContext {
    std::string scene_id;
    uint64_t content_hash = 0;
    SceneFeatures features;
    std::vector<FrameBuffer> frames;  // empty for feature-only mock scenes
};

inline uint64_t hash_frames(const std::vector<FrameBuffer>& frames) {
    uint64_t h = 14695981039346656037ull;
    auto mix = [&h](const void* data, size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 1099511628211ull;
        }
    };
    for (const auto& f : frames) {
        std::array<int, 3> geo{f.width, f.height, f.bit_depth};
        mix(geo.data(), sizeof(geo));
        mix(f.y.data(), f.y.size() * sizeof(uint16_t));
        mix(f.u.data(), f.u.size() * sizeof(uint16_t));
        mix(f.v.data(), f.v.size() * sizeof(uint16_t));
    }
    return h;
}

inline SceneContext make_scene_context(std::string scene_id, std::vector<FrameBuffer> frames) {
    SceneContext s;
    s.scene_id = std::move(scene_id);
    s.features = extract_scene_features(frames);
    s.content_hash = hash_frames(frames);
    s.frames = std::move(frames);
    return s;
}

// Feature-only scene for mock-mode runs without raw video on disk.
inline SceneContext make_mock_scene(std::string scene_id, const SceneFeatures& features) {
    SceneContext s;
    s.scene_id = std::move(scene_id);
    s.features = features;
    std::array<double, 7> vals{features.E_Y, features.h,  features.L_Y, features.E_U,
                               features.L_U, features.E_V, features.L_V};
    uint64_t h = 14695981039346656037ull;
    const auto* p = reinterpret_cast<const unsigned char*>(vals.data());
    for (size_t i = 0; i < sizeof(vals); ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    s.content_hash = h;
    return s;
}

struct HarnessConfig {
    bool mock = true;
    MockEncoderParams mock_params;
    bool couple_scene_complexity = true;  // derive mock c from scene features
    EncoderSpec spec;
    std::string cache_dir;  // empty disables caching
    int jobs = 1;
};

namespace detail {

inline uint64_t harness_spec_hash(const HarnessConfig& cfg) {
    nlohmann::json j;
    if (cfg.mock) {
        const auto& p = cfg.mock_params;
        j = {"mock",
             p.c,
             p.alpha,
             p.qp_halving,
             p.anchor_bitrate_kbps,
             p.q_ref,
             p.quality_base_db,
             p.quality_span_min,
             p.quality_span_gain,
             p.half_rate_kbps,
             p.beta_exponent,
             p.gamma,
             p.psnr_offset_db,
             cfg.couple_scene_complexity};
    } else {
        j = {"external", cfg.spec.encode_cmd, cfg.spec.decode_cmd};
    }
    std::string s = j.dump();
    uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string cache_path(const HarnessConfig& cfg, const SceneContext& scene, int r, int q) {
    char scene_hex[17];
    std::snprintf(scene_hex, sizeof(scene_hex), "%016llx",
                  static_cast<unsigned long long>(scene.content_hash));
    return cfg.cache_dir + "/" + scene_hex + "/" + std::to_string(r) + "_" + std::to_string(q) +
           ".json";
}

inline nlohmann::json rd_point_to_json(const RdPoint& p) {
    return {{"scene_id", p.scene_id},   {"resolution", p.resolution},
            {"qp", p.qp},               {"bitrate_kbps", p.bitrate_kbps},
            {"psnr_db", p.psnr_db},     {"xpsnr_db", p.xpsnr_db},
            {"enc_time_s", p.enc_time_s}, {"dec_time_s", p.dec_time_s}};
}

inline RdPoint rd_point_from_json(const nlohmann::json& j) {
    RdPoint p;
    p.scene_id = j.at("scene_id").get<std::string>();
    p.resolution = j.at("resolution").get<int>();
    p.qp = j.at("qp").get<int>();
    p.bitrate_kbps = j.at("bitrate_kbps").get<double>();
    p.psnr_db = j.at("psnr_db").get<double>();
    p.xpsnr_db = j.at("xpsnr_db").get<double>();
    p.enc_time_s = j.at("enc_time_s").get<double>();
    p.dec_time_s = j.at("dec_time_s").get<double>();
    return p;
}

struct CommandResult {
    int exit_code = -1;
    std::string output;
    double wall_time_s = 0.0;
};

inline CommandResult run_command(const std::string& cmd) {
    CommandResult res;
    auto t0 = std::chrono::steady_clock::now();
    FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
    if (!pipe) throw std::runtime_error("popen failed for: " + cmd);
    char buf[4096];
    while (size_t got = fread(buf, 1, sizeof(buf), pipe)) res.output.append(buf, got);
    int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    res.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

inline std::string substitute(std::string tmpl,
                              const std::map<std::string, std::string>& vars) {
    for (const auto& [key, value] : vars) {
        std::string token = "{" + key + "}";
        size_t pos;
        while ((pos = tmpl.find(token)) != std::string::npos)
            tmpl.replace(pos, token.size(), value);
    }
    return tmpl;
}

inline RdPoint external_encode(const SceneContext& scene, int resolution, int qp,
                               const HarnessConfig& cfg, double maxrate_kbps) {
    namespace fs = std::filesystem;
    if (scene.frames.empty())
        throw std::runtime_error("external encode needs scene frames: " + scene.scene_id);
    const auto& src = scene.frames;
    const FrameRate fps = src[0].frame_rate;
    const double duration_s = src.size() / fps.value();

    fs::path tmp = fs::temp_directory_path() /
                   ("vexus_" + scene.scene_id + "_" + std::to_string(resolution) + "_" +
                    std::to_string(qp) + "_" + std::to_string(::getpid()));
    fs::create_directories(tmp);

    const int dst_w = 2 * static_cast<int>(std::lround(src[0].width * resolution /
                                                       static_cast<double>(src[0].height) / 2.0));
    ResampleSpec down{dst_w, resolution};
    auto scaled = resample(src, down);

    std::string in_path = (tmp / "in.y4m").string();
    std::string bit_path = (tmp / "out.bin").string();
    std::string rec_path = (tmp / "rec.yuv").string();
    write_sequence(scaled, in_path, SequenceFormat::Y4m);

    std::map<std::string, std::string> vars = {
        {"input", in_path},
        {"output", bit_path},
        {"qp", std::to_string(qp)},
        {"maxrate", std::to_string(static_cast<long>(maxrate_kbps))},
        {"width", std::to_string(dst_w)},
        {"height", std::to_string(resolution)},
        {"fps", std::to_string(fps.num) + "/" + std::to_string(fps.den)},
        {"threads", std::to_string(cfg.spec.threads)}};

    auto enc = run_command(substitute(cfg.spec.encode_cmd, vars));
    if (enc.exit_code != 0)
        throw std::runtime_error("encoder failed (" + std::to_string(enc.exit_code) + ") for " +
                                 scene.scene_id + ": " + enc.output);

    vars["input"] = bit_path;
    vars["output"] = rec_path;
    auto dec = run_command(substitute(cfg.spec.decode_cmd, vars));
    if (dec.exit_code != 0)
        throw std::runtime_error("decoder failed (" + std::to_string(dec.exit_code) + ") for " +
                                 scene.scene_id + ": " + dec.output);

    RdPoint pt;
    pt.scene_id = scene.scene_id;
    pt.resolution = resolution;
    pt.qp = qp;
    pt.bitrate_kbps = fs::file_size(bit_path) * 8.0 / 1000.0 / duration_s;
    pt.enc_time_s = enc.wall_time_s;
    pt.dec_time_s = dec.wall_time_s;

    SequenceGeometry g{dst_w, resolution, src[0].bit_depth, fps};
    auto rec_handle = open_sequence(rec_path, g);
    auto rec = read_all_frames(rec_handle);
    if (rec.size() != src.size())
        throw std::runtime_error("decoder produced " + std::to_string(rec.size()) +
                                 " frames, expected " + std::to_string(src.size()));
    ResampleSpec up{src[0].width, src[0].height};
    auto upscaled = resample(rec, up);
    auto metrics = sequence_metrics(src, upscaled);
    pt.psnr_db = metrics.psnr_db;
    pt.xpsnr_db = metrics.xpsnr_db;

    fs::remove_all(tmp);
    return pt;
}

}  // namespace detail

// Encode one (scene, resolution, qp) cell, serving repeats from the
// cache. Cache entries record the harness spec hash; a mismatch forces
// recomputation, as does a corrupt cache file.
inline RdPoint encode_point(const SceneContext& scene, int resolution, int qp,
                            const HarnessConfig& cfg, double maxrate_kbps = 0.0) {
    namespace fs = std::filesystem;
    const uint64_t spec_hash = detail::harness_spec_hash(cfg);
    std::string cpath;
    if (!cfg.cache_dir.empty()) {
        cpath = detail::cache_path(cfg, scene, resolution, qp);
        if (fs::exists(cpath)) {
            try {
                std::ifstream f(cpath);
                nlohmann::json j;
                f >> j;
                if (j.at("spec_hash").get<uint64_t>() == spec_hash)
                    return detail::rd_point_from_json(j.at("point"));
            } catch (...) {
                // corrupt cache entry: fall through and recompute
            }
        }
    }

    RdPoint pt;
    if (cfg.mock) {
        MockEncoderParams params = cfg.mock_params;
        if (cfg.couple_scene_complexity)
            params.c *= scene_complexity_coefficient(scene.features);
        pt = mock_encode(scene.scene_id, resolution, qp, params);
    } else {
        pt = detail::external_encode(scene, resolution, qp, cfg, maxrate_kbps);
    }

    if (!cpath.empty()) {
        fs::create_directories(fs::path(cpath).parent_path());
        nlohmann::json j = {{"spec_hash", spec_hash}, {"point", detail::rd_point_to_json(pt)}};
        std::string tmp_path = cpath + ".tmp" + std::to_string(::getpid());
        {
            std::ofstream f(tmp_path, std::ios::trunc);
            f << j.dump(2) << "\n";
        }
        fs::rename(tmp_path, cpath);  // concurrent writers race to identical content
    }
    return pt;
}

struct SweepResult {
    std::vector<RdPoint> points;  // r ascending, then q ascending
    std::vector<std::string> failures;
};

// All (r <= r_max, q in [q_min, q_max]) cells for one scene. Cells run
// concurrently up to cfg.jobs; the returned ordering is deterministic.
inline SweepResult exhaustive_sweep(const SceneContext& scene, const std::vector<int>& resolutions,
                                    int r_max, int q_min, int q_max, const HarnessConfig& cfg) {
    std::vector<std::pair<int, int>> cells;
    for (int r : resolutions)
        if (r <= r_max)
            for (int q = q_min; q <= q_max; ++q) cells.emplace_back(r, q);

    SweepResult result;
    result.points.resize(cells.size());
    std::vector<char> ok(cells.size(), 0);
    std::mutex fail_mtx;

    const int jobs = std::max(1, cfg.jobs);
    std::vector<std::thread> workers;
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
            try {
                result.points[i] = encode_point(scene, cells[i].first, cells[i].second, cfg);
                ok[i] = 1;
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(fail_mtx);
                result.failures.push_back(std::to_string(cells[i].first) + "_" +
                                          std::to_string(cells[i].second) + ": " + e.what());
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        for (int t = 0; t < jobs; ++t) workers.emplace_back(worker);
        for (auto& w : workers) w.join();
    }

    if (!result.failures.empty()) {
        std::vector<RdPoint> kept;
        for (size_t i = 0; i < cells.size(); ++i)
            if (ok[i]) kept.push_back(result.points[i]);
        result.points = std::move(kept);
        std::sort(result.failures.begin(), result.failures.end());
    }
    return result;
}

}  // namespace vexus
