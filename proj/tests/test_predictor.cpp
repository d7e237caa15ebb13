#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "test_util.hpp"
#include "vexus/predictor.hpp"

using namespace vexus;
using test_util::TempDir;

namespace {

// target = smooth deterministic function of the features
double synthetic_xpsnr(const FeatureVector& fv) {
    const auto& f = fv.features;
    return 28.0 + 0.05 * f.E_Y + 2.0 * std::log10(fv.bitrate_kbps) + 4.0 * fv.r_norm - 0.01 * f.h;
}

std::vector<TrainingSample> synthetic_dataset(uint64_t seed, size_t n_scenes = 20,
                                              size_t per_scene = 10) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> e(5.0, 80.0), hh(0.0, 30.0), l(40.0, 200.0);
    std::uniform_real_distribution<double> b(145.0, 16800.0);
    std::uniform_int_distribution<int> r(0, 5);
    const int heights[] = {360, 540, 720, 1080, 1440, 2160};
    std::vector<TrainingSample> out;
    for (size_t s = 0; s < n_scenes; ++s) {
        SceneFeatures f;
        f.E_Y = e(rng);
        f.h = hh(rng);
        f.L_Y = l(rng);
        f.E_U = e(rng) * 0.3;
        f.L_U = l(rng);
        f.E_V = e(rng) * 0.3;
        f.L_V = l(rng);
        for (size_t i = 0; i < per_scene; ++i) {
            TrainingSample t;
            t.scene_id = "scene" + std::to_string(s);
            t.features.features = f;
            t.features.bitrate_kbps = b(rng);
            t.features.r_norm = heights[r(rng)] / 2160.0;
            t.target = synthetic_xpsnr(t.features);
            out.push_back(t);
        }
    }
    return out;
}

GbtParams small_params() {
    GbtParams p;
    p.n_trees = 60;
    p.max_depth = 4;
    p.learning_rate = 0.15;
    return p;
}

}  // namespace

TEST_CASE("training recovers a smooth synthetic target") {
    auto data = synthetic_dataset(1);
    auto model = train(data, ModelKind::Xpsnr, small_params(), 7);
    double mae = 0.0;
    for (const auto& s : data) mae += std::abs(predict_xpsnr(model, s.features) - s.target);
    mae /= static_cast<double>(data.size());
    CHECK(mae < 0.5);  // in-sample fit on a noiseless target

    CHECK(model.meta.n_samples == 200);
    CHECK(model.meta.cv_fold_mae.size() == 5);
    for (double m : model.meta.cv_fold_mae) {
        CHECK(std::isfinite(m));
        CHECK(m >= 0.0);
    }
    CHECK(model.meta.dataset_hash.size() == 16);
    CHECK(model.features == feature_order(ModelKind::Xpsnr));
}

TEST_CASE("constant target trains to a constant predictor") {
    auto data = synthetic_dataset(2);
    for (auto& s : data) s.target = 37.25;
    auto model = train(data, ModelKind::Xpsnr, small_params());
    for (size_t i = 0; i < data.size(); i += 17)
        CHECK(predict_xpsnr(model, data[i].features) == doctest::Approx(37.25).epsilon(1e-9));
}

TEST_CASE("training rejects undersized or degenerate datasets") {
    auto data = synthetic_dataset(3);
    data.resize(99);
    CHECK_THROWS(train(data, ModelKind::Xpsnr, small_params()));

    auto flat = synthetic_dataset(4);
    for (auto& s : flat) s.features = flat[0].features;
    CHECK_THROWS(train(flat, ModelKind::Xpsnr, small_params()));

    auto nan_target = synthetic_dataset(5);
    nan_target[50].target = std::nan("");
    CHECK_THROWS(train(nan_target, ModelKind::Xpsnr, small_params()));
}

TEST_CASE("training is deterministic and serialization is byte-stable") {
    TempDir tmp("model_det");
    auto data = synthetic_dataset(6);
    auto m1 = train(data, ModelKind::Xpsnr, small_params(), 42);
    auto m2 = train(data, ModelKind::Xpsnr, small_params(), 42);
    CHECK(to_json(m1).dump() == to_json(m2).dump());

    save_model(m1, tmp.file("m.json"));
    auto loaded = load_model(tmp.file("m.json"));
    CHECK(to_json(loaded).dump() == to_json(m1).dump());
    for (size_t i = 0; i < data.size(); i += 13)
        CHECK(predict_xpsnr(loaded, data[i].features) ==
              predict_xpsnr(m1, data[i].features));

    save_model(loaded, tmp.file("m2.json"));
    std::ifstream a(tmp.file("m.json")), b(tmp.file("m2.json"));
    std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(sa == sb);
}

TEST_CASE("model files with a newer schema or wrong feature order are rejected") {
    TempDir tmp("model_schema");
    auto data = synthetic_dataset(7);
    auto m = train(data, ModelKind::Xpsnr, small_params());
    auto j = to_json(m);

    j["schema_version"] = kModelSchemaVersion + 1;
    CHECK_THROWS(model_from_json(j));

    j["schema_version"] = kModelSchemaVersion;
    auto fo = j["feature_order"].get<std::vector<std::string>>();
    std::swap(fo[0], fo[1]);
    j["feature_order"] = fo;
    CHECK_THROWS(model_from_json(j));

    CHECK_THROWS(load_model(tmp.file("missing.json")));
    {
        std::ofstream f(tmp.file("garbage.json"));
        f << "not json at all {";
    }
    CHECK_THROWS(load_model(tmp.file("garbage.json")));
}

TEST_CASE("bitrate-bound models feed the guard logic") {
    auto base = synthetic_dataset(8);
    std::vector<TrainingSample> hi = base, lo = base;
    for (auto& s : hi) s.target = std::log10(8000.0 + 40.0 * s.features.features.E_Y);
    for (auto& s : lo) s.target = std::log10(150.0 + 2.0 * s.features.features.E_Y);
    auto m_qmin = train(hi, ModelKind::BitrateAtQmin, small_params());
    auto m_qmax = train(lo, ModelKind::BitrateAtQmax, small_params());
    CHECK(m_qmin.features == feature_order(ModelKind::BitrateAtQmin));

    auto bounds = predict_bitrate_bounds(m_qmin, m_qmax, base[0].features);
    CHECK(bounds.b_max > bounds.b_min);
    CHECK_FALSE(bounds.swapped);
    CHECK_FALSE(bounds.degenerate);

    CHECK_THROWS(predict_bitrate_bounds(m_qmax, m_qmin, base[0].features));
    CHECK_THROWS(predict_xpsnr(m_qmin, base[0].features));
}

TEST_CASE("qp interpolation hits the anchors exactly") {
    CHECK(interpolate_qp(10, 50, 200.0, 16000.0, 16000.0) == 10);
    CHECK(interpolate_qp(10, 50, 200.0, 16000.0, 200.0) == 50);
    // geometric midpoint of the bitrate range maps to the QP midpoint
    CHECK(interpolate_qp(10, 50, 200.0, 16000.0, std::sqrt(200.0 * 16000.0)) == 30);
}

TEST_CASE("qp interpolation clamps and stays monotone") {
    CHECK(interpolate_qp(10, 50, 200.0, 16000.0, 100000.0) == 10);
    CHECK(interpolate_qp(10, 50, 200.0, 16000.0, 1.0) == 50);
    int prev = 51;
    for (double b = 150.0; b <= 20000.0; b *= 1.15) {
        int q = interpolate_qp(10, 50, 200.0, 16000.0, b);
        CHECK(q <= prev);
        CHECK(q >= 10);
        CHECK(q <= 50);
        prev = q;
    }
}

TEST_CASE("qp interpolation input validation and degeneracy guard") {
    CHECK_THROWS(interpolate_qp(10, 50, 0.0, 16000.0, 500.0));
    CHECK_THROWS(interpolate_qp(10, 50, 16000.0, 200.0, 500.0));
    CHECK_THROWS(interpolate_qp(50, 10, 200.0, 16000.0, 500.0));
    CHECK_THROWS(interpolate_qp(10, 50, 200.0, 16000.0, -3.0));

    BitrateBounds degen;
    degen.b_min = degen.b_max = 900.0;
    degen.degenerate = true;
    CHECK(interpolate_qp_guarded(10, 50, degen, 900.0) == 30);

    BitrateBounds fine;
    fine.b_min = 200.0;
    fine.b_max = 16000.0;
    CHECK(interpolate_qp_guarded(10, 50, fine, 16000.0) == 10);
}
