#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "test_util.hpp"
#include "vexus/resample.hpp"
#include "vexus/xpsnr.hpp"

using namespace vexus;

namespace {

// nearest-neighbor reference for the round-trip comparison
FrameBuffer nearest_resample(const FrameBuffer& f, int tw, int th) {
    FrameBuffer out(tw, th, f.bit_depth, f.frame_rate);
    auto plane = [](const std::vector<uint16_t>& src, int sw, int sh, std::vector<uint16_t>& dst,
                    int dw, int dh) {
        for (int y = 0; y < dh; ++y) {
            int sy = std::min(static_cast<int>((y + 0.5) * sh / dh), sh - 1);
            for (int x = 0; x < dw; ++x) {
                int sx = std::min(static_cast<int>((x + 0.5) * sw / dw), sw - 1);
                dst[static_cast<size_t>(y) * dw + x] = src[static_cast<size_t>(sy) * sw + sx];
            }
        }
    };
    plane(f.y, f.width, f.height, out.y, tw, th);
    plane(f.u, f.chroma_width(), f.chroma_height(), out.u, tw / 2, th / 2);
    plane(f.v, f.chroma_width(), f.chroma_height(), out.v, tw / 2, th / 2);
    return out;
}

double mean_luma(const FrameBuffer& f) {
    return std::accumulate(f.y.begin(), f.y.end(), 0.0) / static_cast<double>(f.y.size());
}

}  // namespace

TEST_CASE("same-size resample is the identity") {
    auto f = test_util::random_frame(64, 48, 8, 11);
    auto out = resample(f, {64, 48});
    CHECK(out.y == f.y);
    CHECK(out.u == f.u);
    CHECK(out.v == f.v);
}

TEST_CASE("constant frame stays constant at any scale") {
    for (int depth : {8, 10}) {
        auto f = test_util::constant_frame(64, 64, depth, depth == 8 ? 137 : 555);
        for (auto [tw, th] : {std::pair{32, 32}, {128, 96}, {30, 50}}) {
            auto out = resample(f, {tw, th});
            for (auto s : out.y) CHECK(s == f.y[0]);
            for (auto s : out.u) CHECK(s == f.u[0]);
        }
    }
}

TEST_CASE("bicubic weights form a partition of unity") {
    // raw kernel sums, before the implementation's renormalization
    for (double frac : {0.0, 0.13, 0.25, 0.5, 0.77, 0.999}) {
        double sum = 0.0;
        for (int j = 0; j < 4; ++j) sum += detail::bicubic_weight(frac + 1.0 - j, -0.5);
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("invalid target dimensions rejected") {
    auto f = test_util::random_frame(64, 64, 8, 3);
    CHECK_THROWS(resample(f, {0, 64}));
    CHECK_THROWS(resample(f, {64, 63}));
}

TEST_CASE("bicubic round-trip beats nearest-neighbor round-trip") {
    // a smooth-ish random frame downscaled 2x and back
    FrameBuffer f(128, 128, 8, {30, 1});
    std::mt19937 rng(42);
    std::uniform_int_distribution<int> dist(0, 255);
    for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 128; ++x)
            f.y[static_cast<size_t>(y) * 128 + x] = static_cast<uint16_t>(
                128 + 80 * std::sin(x / 7.0) * std::cos(y / 9.0) + dist(rng) % 16);

    auto down = resample(f, {64, 64});
    auto up = resample(down, {128, 128});
    double psnr_bicubic = frame_psnr(f, up);

    auto ndown = nearest_resample(f, 64, 64);
    auto nup = nearest_resample(ndown, 128, 128);
    double psnr_nearest = frame_psnr(f, nup);

    CHECK(std::isfinite(psnr_bicubic));
    CHECK(psnr_bicubic > psnr_nearest);
}

TEST_CASE("2x down/up round trip preserves the mean within 0.5") {
    auto f = test_util::random_frame(64, 64, 8, 77);
    auto down = resample(f, {32, 32});
    auto up = resample(down, {64, 64});
    CHECK(std::abs(mean_luma(f) - mean_luma(up)) < 0.5);
}

TEST_CASE("resample output respects the sample range") {
    // step edges push the Catmull-Rom kernel into overshoot; output must clamp
    FrameBuffer f(32, 32, 8, {30, 1});
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            f.y[static_cast<size_t>(y) * 32 + x] = x < 16 ? 0 : 255;
    auto out = resample(f, {64, 64});
    for (auto s : out.y) CHECK(s <= 255);
}
