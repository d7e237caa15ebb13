#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "vexus/frame.hpp"

namespace vexus {

struct ResampleSpec {
    int target_width = 0;
    int target_height = 0;
    double kernel_parameter = -0.5;  // Catmull-Rom family "a"
};

namespace detail {

inline double bicubic_weight(double t, double a) {
    t = std::abs(t);
    if (t < 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
    if (t < 2.0) return (((t - 5.0) * t + 8.0) * t - 4.0) * a;
    return 0.0;
}

struct TapSet {
    std::array<int, 4> index;
    std::array<double, 4> weight;
};

// Center-of-pixel mapping: x_src = (x_dst + 0.5) * n_src/n_dst - 0.5.
// Edge taps replicate; weights renormalized to sum exactly to 1.
inline std::vector<TapSet> make_taps(int n_src, int n_dst, double a) {
    std::vector<TapSet> taps(static_cast<size_t>(n_dst));
    const double scale = static_cast<double>(n_src) / n_dst;
    for (int x = 0; x < n_dst; ++x) {
        double src = (x + 0.5) * scale - 0.5;
        int base = static_cast<int>(std::floor(src));
        double frac = src - base;
        TapSet t;
        double sum = 0.0;
        for (int j = 0; j < 4; ++j) {
            int i = base - 1 + j;
            t.index[static_cast<size_t>(j)] = std::clamp(i, 0, n_src - 1);
            double w = bicubic_weight(frac + 1.0 - j, a);
            t.weight[static_cast<size_t>(j)] = w;
            sum += w;
        }
        for (auto& w : t.weight) w /= sum;
        taps[static_cast<size_t>(x)] = t;
    }
    return taps;
}

// Separable two-pass resample of a single plane: horizontal then vertical,
// float accumulation throughout, one final round and clamp.
inline void resample_plane(const uint16_t* src, int sw, int sh, uint16_t* dst, int dw, int dh,
                           double a, int max_value) {
    const auto htaps = make_taps(sw, dw, a);
    const auto vtaps = make_taps(sh, dh, a);

    std::vector<double> tmp(static_cast<size_t>(dw) * sh);
    for (int y = 0; y < sh; ++y) {
        const uint16_t* row = src + static_cast<size_t>(y) * sw;
        double* out = tmp.data() + static_cast<size_t>(y) * dw;
        for (int x = 0; x < dw; ++x) {
            const auto& t = htaps[static_cast<size_t>(x)];
            out[x] = t.weight[0] * row[t.index[0]] + t.weight[1] * row[t.index[1]] +
                     t.weight[2] * row[t.index[2]] + t.weight[3] * row[t.index[3]];
        }
    }
    for (int y = 0; y < dh; ++y) {
        const auto& t = vtaps[static_cast<size_t>(y)];
        const double* r0 = tmp.data() + static_cast<size_t>(t.index[0]) * dw;
        const double* r1 = tmp.data() + static_cast<size_t>(t.index[1]) * dw;
        const double* r2 = tmp.data() + static_cast<size_t>(t.index[2]) * dw;
        const double* r3 = tmp.data() + static_cast<size_t>(t.index[3]) * dw;
        uint16_t* out = dst + static_cast<size_t>(y) * dw;
        for (int x = 0; x < dw; ++x) {
            double v = t.weight[0] * r0[x] + t.weight[1] * r1[x] + t.weight[2] * r2[x] +
                       t.weight[3] * r3[x];
            long r = std::lround(v);
            out[x] = static_cast<uint16_t>(std::clamp(r, 0L, static_cast<long>(max_value)));
        }
    }
}

}  // namespace detail

inline FrameBuffer resample(const FrameBuffer& frame, const ResampleSpec& spec) {
    if (spec.target_width <= 0 || spec.target_height <= 0 ||
        (spec.target_width % 2) != 0 || (spec.target_height % 2) != 0)
        throw std::invalid_argument("resample target dimensions must be positive and even");

    FrameBuffer out(spec.target_width, spec.target_height, frame.bit_depth, frame.frame_rate);
    out.frame_index = frame.frame_index;
    const int max_value = frame.max_sample();
    const double a = spec.kernel_parameter;

    detail::resample_plane(frame.y.data(), frame.width, frame.height, out.y.data(), out.width,
                           out.height, a, max_value);
    detail::resample_plane(frame.u.data(), frame.chroma_width(), frame.chroma_height(),
                           out.u.data(), out.chroma_width(), out.chroma_height(), a, max_value);
    detail::resample_plane(frame.v.data(), frame.chroma_width(), frame.chroma_height(),
                           out.v.data(), out.chroma_width(), out.chroma_height(), a, max_value);
    return out;
}

inline std::vector<FrameBuffer> resample(const std::vector<FrameBuffer>& frames,
                                         const ResampleSpec& spec) {
    std::vector<FrameBuffer> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(resample(f, spec));
    return out;
}

}  // namespace vexus
