#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "vexus/complexity.hpp"
#include "vexus/gbt.hpp"

namespace vexus {

inline constexpr int kModelSchemaVersion = 1;

enum class ModelKind { Xpsnr, BitrateAtQmin, BitrateAtQmax };

inline std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::Xpsnr: return "xpsnr";
        case ModelKind::BitrateAtQmin: return "bitrate_at_qmin";
        case ModelKind::BitrateAtQmax: return "bitrate_at_qmax";
    }
    throw std::logic_error("bad model kind");
}

inline ModelKind model_kind_from_string(const std::string& s) {
    if (s == "xpsnr") return ModelKind::Xpsnr;
    if (s == "bitrate_at_qmin" || s == "bitrate_qmin") return ModelKind::BitrateAtQmin;
    if (s == "bitrate_at_qmax" || s == "bitrate_qmax") return ModelKind::BitrateAtQmax;
    throw std::invalid_argument("unknown model kind: " + s);
}

// Fixed feature ordering. XPSNR models consume all nine entries; the two
// bitrate models drop the target bitrate b.
inline std::vector<std::string> feature_order(ModelKind kind) {
    if (kind == ModelKind::Xpsnr)
        return {"E_Y", "h", "L_Y", "E_U", "L_U", "E_V", "L_V", "b", "r_norm"};
    return {"E_Y", "h", "L_Y", "E_U", "L_U", "E_V", "L_V", "r_norm"};
}

struct FeatureVector {
    SceneFeatures features;
    double bitrate_kbps = 0.0;  // b, ignored by bitrate models
    double r_norm = 0.0;        // resolution_height / 2160

    std::vector<double> row(ModelKind kind) const {
        const auto& f = features;
        std::vector<double> r{f.E_Y, f.h, f.L_Y, f.E_U, f.L_U, f.E_V, f.L_V};
        if (kind == ModelKind::Xpsnr) r.push_back(bitrate_kbps);
        r.push_back(r_norm);
        return r;
    }
};

struct TrainingSample {
    std::string scene_id;
    FeatureVector features;
    double target = 0.0;  // XPSNR dB, or log10(bitrate_kbps) for bitrate models
};

struct TrainingMeta {
    std::string dataset_hash;
    std::vector<double> cv_fold_mae;
    int64_t n_samples = 0;
    uint64_t seed = 0;
};

struct PredictionModel {
    ModelKind kind = ModelKind::Xpsnr;
    std::vector<std::string> features;
    GbtModel gbt;
    TrainingMeta meta;
    GbtParams hyperparams;
};

namespace detail {

inline uint64_t fnv1a_update(uint64_t h, const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string dataset_hash(const std::vector<TrainingSample>& samples, ModelKind kind) {
    uint64_t h = 14695981039346656037ull;
    for (const auto& s : samples) {
        h = fnv1a_update(h, s.scene_id.data(), s.scene_id.size());
        auto row = s.features.row(kind);
        h = fnv1a_update(h, row.data(), row.size() * sizeof(double));
        h = fnv1a_update(h, &s.target, sizeof(double));
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Scene-disjoint fold assignment: all samples of one scene land in the
// same fold.
inline std::vector<int> scene_folds(const std::vector<TrainingSample>& samples, int n_folds,
                                    uint64_t seed) {
    std::vector<std::string> scenes;
    std::map<std::string, int> fold_of;
    for (const auto& s : samples)
        if (!fold_of.count(s.scene_id)) {
            fold_of[s.scene_id] = -1;
            scenes.push_back(s.scene_id);
        }
    std::mt19937_64 rng(seed);
    std::shuffle(scenes.begin(), scenes.end(), rng);
    for (size_t i = 0; i < scenes.size(); ++i)
        fold_of[scenes[i]] = static_cast<int>(i % static_cast<size_t>(n_folds));
    std::vector<int> folds;
    folds.reserve(samples.size());
    for (const auto& s : samples) folds.push_back(fold_of[s.scene_id]);
    return folds;
}

}  // namespace detail

inline PredictionModel train(const std::vector<TrainingSample>& samples, ModelKind kind,
                             GbtParams hyperparams = {}, uint64_t seed = 0, int cv_folds = 5) {
    if (samples.size() < 100)
        throw std::invalid_argument("train: need at least 100 samples, got " +
                                    std::to_string(samples.size()));

    std::vector<std::vector<double>> x;
    std::vector<double> y;
    x.reserve(samples.size());
    for (const auto& s : samples) {
        if (!std::isfinite(s.target)) throw std::invalid_argument("train: non-finite target");
        x.push_back(s.features.row(kind));
        y.push_back(s.target);
    }
    bool any_varying = false;
    for (size_t f = 0; f < x[0].size() && !any_varying; ++f)
        for (size_t i = 1; i < x.size(); ++i)
            if (x[i][f] != x[0][f]) {
                any_varying = true;
                break;
            }
    if (!any_varying) throw std::invalid_argument("train: all features constant");

    PredictionModel model;
    model.kind = kind;
    model.features = feature_order(kind);
    model.hyperparams = hyperparams;
    model.meta.dataset_hash = detail::dataset_hash(samples, kind);
    model.meta.n_samples = static_cast<int64_t>(samples.size());
    model.meta.seed = seed;

    if (cv_folds > 1) {
        auto folds = detail::scene_folds(samples, cv_folds, seed);
        for (int fold = 0; fold < cv_folds; ++fold) {
            std::vector<std::vector<double>> xt;
            std::vector<double> yt;
            for (size_t i = 0; i < x.size(); ++i)
                if (folds[i] != fold) {
                    xt.push_back(x[i]);
                    yt.push_back(y[i]);
                }
            if (xt.empty() || xt.size() == x.size()) continue;
            GbtModel m = train_gbt(xt, yt, hyperparams);
            double mae = 0.0;
            int64_t cnt = 0;
            for (size_t i = 0; i < x.size(); ++i)
                if (folds[i] == fold) {
                    mae += std::abs(m.predict(x[i]) - y[i]);
                    ++cnt;
                }
            model.meta.cv_fold_mae.push_back(mae / static_cast<double>(cnt));
        }
    }

    model.gbt = train_gbt(x, y, hyperparams);
    return model;
}

inline double predict_xpsnr(const PredictionModel& model, const FeatureVector& fv) {
    if (model.kind != ModelKind::Xpsnr)
        throw std::invalid_argument("predict_xpsnr: model kind mismatch");
    return model.gbt.predict(fv.row(model.kind));
}

struct BitrateBounds {
    double b_max = 0.0;  // predicted bitrate at q_min, kbps
    double b_min = 0.0;  // predicted bitrate at q_max, kbps
    bool swapped = false;
    bool degenerate = false;
};

inline BitrateBounds predict_bitrate_bounds(const PredictionModel& model_qmin,
                                            const PredictionModel& model_qmax,
                                            const FeatureVector& fv) {
    if (model_qmin.kind != ModelKind::BitrateAtQmin ||
        model_qmax.kind != ModelKind::BitrateAtQmax)
        throw std::invalid_argument("predict_bitrate_bounds: model kind mismatch");
    BitrateBounds b;
    b.b_max = std::pow(10.0, model_qmin.gbt.predict(fv.row(model_qmin.kind)));
    b.b_min = std::pow(10.0, model_qmax.gbt.predict(fv.row(model_qmax.kind)));
    if (!std::isfinite(b.b_max) || !std::isfinite(b.b_min))
        throw std::runtime_error("predict_bitrate_bounds: non-finite prediction");
    if (b.b_max < b.b_min) {
        std::swap(b.b_max, b.b_min);
        b.swapped = true;
        std::fprintf(stderr, "warning: predicted bitrate bounds inverted, swapping\n");
    } else if (b.b_max == b.b_min) {
        b.degenerate = true;
        std::fprintf(stderr, "warning: degenerate predicted bitrate range\n");
    }
    return b;
}

// Log-domain interpolation through the anchors (b_max, q_min) and
// (b_min, q_max); clamped and rounded half-away-from-zero.
inline int interpolate_qp(int q_min, int q_max, double b_min, double b_max, double b) {
    if (!(b_min > 0.0) || !(b > 0.0)) throw std::invalid_argument("interpolate_qp: bitrate <= 0");
    if (b_min >= b_max) throw std::invalid_argument("interpolate_qp: b_min >= b_max");
    if (q_min >= q_max) throw std::invalid_argument("interpolate_qp: q_min >= q_max");
    double q = q_min + (q_max - q_min) * (std::log10(b) - std::log10(b_max)) /
                           (std::log10(b_min) - std::log10(b_max));
    q = std::clamp(q, static_cast<double>(q_min), static_cast<double>(q_max));
    return static_cast<int>(std::round(q));
}

// interpolate_qp with the degeneracy guard applied to predicted bounds.
inline int interpolate_qp_guarded(int q_min, int q_max, const BitrateBounds& bounds, double b) {
    if (bounds.degenerate || bounds.b_min >= bounds.b_max)
        return static_cast<int>(std::round(0.5 * (q_min + q_max)));
    return interpolate_qp(q_min, q_max, bounds.b_min, bounds.b_max, b);
}

// --- serialization ---------------------------------------------------

inline nlohmann::json to_json(const PredictionModel& m) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : m.gbt.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : t.nodes) {
            if (n.feature < 0)
                nodes.push_back({{"value", n.value}});
            else
                nodes.push_back({{"feature", n.feature},
                                 {"threshold", n.threshold},
                                 {"left", n.left},
                                 {"right", n.right}});
        }
        trees.push_back({{"nodes", nodes}});
    }
    return {{"schema_version", kModelSchemaVersion},
            {"kind", to_string(m.kind)},
            {"feature_order", m.features},
            {"trees", trees},
            {"learning_rate", m.gbt.learning_rate},
            {"base_score", m.gbt.base_score},
            {"hyperparams",
             {{"n_trees", m.hyperparams.n_trees},
              {"max_depth", m.hyperparams.max_depth},
              {"learning_rate", m.hyperparams.learning_rate},
              {"min_samples_leaf", m.hyperparams.min_samples_leaf}}},
            {"training_meta",
             {{"dataset_hash", m.meta.dataset_hash},
              {"cv_fold_mae", m.meta.cv_fold_mae},
              {"n_samples", m.meta.n_samples},
              {"seed", m.meta.seed}}}};
}

inline PredictionModel model_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("schema_version"))
        throw std::runtime_error("model file: missing schema_version");
    int version = j.at("schema_version").get<int>();
    if (version > kModelSchemaVersion)
        throw std::runtime_error("model file: unsupported schema version " +
                                 std::to_string(version));

    PredictionModel m;
    m.kind = model_kind_from_string(j.at("kind").get<std::string>());
    m.features = j.at("feature_order").get<std::vector<std::string>>();
    if (m.features != feature_order(m.kind))
        throw std::runtime_error("model file: feature order mismatch for kind " +
                                 to_string(m.kind));
    m.gbt.learning_rate = j.at("learning_rate").get<double>();
    m.gbt.base_score = j.at("base_score").get<double>();
    for (const auto& jt : j.at("trees")) {
        GbtTree t;
        for (const auto& jn : jt.at("nodes")) {
            GbtNode n;
            if (jn.contains("feature")) {
                n.feature = jn.at("feature").get<int>();
                if (n.feature >= static_cast<int>(m.features.size()))
                    throw std::runtime_error("model file: split feature out of range");
                n.threshold = jn.at("threshold").get<double>();
                n.left = jn.at("left").get<int>();
                n.right = jn.at("right").get<int>();
            } else {
                n.value = jn.at("value").get<double>();
            }
            t.nodes.push_back(n);
        }
        m.gbt.trees.push_back(std::move(t));
    }
    if (j.contains("hyperparams")) {
        const auto& h = j.at("hyperparams");
        m.hyperparams.n_trees = h.at("n_trees").get<int>();
        m.hyperparams.max_depth = h.at("max_depth").get<int>();
        m.hyperparams.learning_rate = h.at("learning_rate").get<double>();
        m.hyperparams.min_samples_leaf = h.at("min_samples_leaf").get<int>();
    }
    if (j.contains("training_meta")) {
        const auto& t = j.at("training_meta");
        m.meta.dataset_hash = t.at("dataset_hash").get<std::string>();
        m.meta.cv_fold_mae = t.at("cv_fold_mae").get<std::vector<double>>();
        m.meta.n_samples = t.at("n_samples").get<int64_t>();
        m.meta.seed = t.at("seed").get<uint64_t>();
    }
    return m;
}

inline void save_model(const PredictionModel& m, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error(path + ": open for write failed");
    f << to_json(m).dump(2) << "\n";
    if (!f) throw std::runtime_error(path + ": write failed");
}

inline PredictionModel load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error(path + ": open failed");
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": parse error: " + e.what());
    }
    return model_from_json(j);
}

}  // namespace vexus
