#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "vexus/frame.hpp"

namespace vexus {

struct XpsnrConfig {
    int bit_depth = 8;
    int width = 0;
    int height = 0;
    FrameRate frame_rate;
    int block_size = 0;       // N, from the picture-size rule
    double activity_floor = 0.0;  // a_min
    double frame_cap = 100.0;     // dB for lossless frames
};

struct BlockRect {
    int x0, y0, w, h;
    int sample_count() const { return w * h; }
};

struct BlockWeightMap {
    int blocks_x = 0;
    int blocks_y = 0;
    std::vector<double> activity;  // a_k (floored)
    std::vector<double> weight;    // w_k
    std::vector<double> sse;       // luma SSE per block
};

// N = round(128 * sqrt(W*H / (3840*2160))), clamped to >= 4.
inline int xpsnr_block_size(int width, int height) {
    double ratio = static_cast<double>(width) * height / (3840.0 * 2160.0);
    long n = std::lround(128.0 * std::sqrt(ratio));
    return static_cast<int>(std::max(n, 4L));
}

inline std::vector<BlockRect> block_grid(int width, int height) {
    const int n = xpsnr_block_size(width, height);
    std::vector<BlockRect> blocks;
    for (int y0 = 0; y0 < height; y0 += n)
        for (int x0 = 0; x0 < width; x0 += n)
            blocks.push_back({x0, y0, std::min(n, width - x0), std::min(n, height - y0)});
    return blocks;
}

inline XpsnrConfig make_xpsnr_config(int width, int height, int bit_depth, FrameRate fps,
                                     double activity_floor = 0.0, double frame_cap = 100.0) {
    XpsnrConfig c;
    c.bit_depth = bit_depth;
    c.width = width;
    c.height = height;
    c.frame_rate = fps;
    c.block_size = xpsnr_block_size(width, height);
    c.activity_floor =
        activity_floor > 0.0 ? activity_floor : std::exp2(static_cast<double>(bit_depth - 6));
    c.frame_cap = frame_cap;
    return c;
}

namespace detail {

// Spatial high-pass: 3x3, center 12, edge neighbors -2, corners -1,
// replicate padding.
inline double spatial_highpass(const uint16_t* p, int width, int height, int x, int y) {
    auto s = [&](int xx, int yy) -> double {
        xx = std::clamp(xx, 0, width - 1);
        yy = std::clamp(yy, 0, height - 1);
        return p[static_cast<size_t>(yy) * width + xx];
    };
    return 12.0 * s(x, y)
         - 2.0 * (s(x - 1, y) + s(x + 1, y) + s(x, y - 1) + s(x, y + 1))
         - 1.0 * (s(x - 1, y - 1) + s(x + 1, y - 1) + s(x - 1, y + 1) + s(x + 1, y + 1));
}

}  // namespace detail

// Visual activity of one block of the current reference frame.
// previous holds up to two earlier reference frames, oldest first; the
// temporal term is zeroed when the history is shorter than the temporal
// order implied by the frame rate (first-order for fps <= 32, second
// otherwise).
inline double visual_activity(const BlockRect& block, const FrameBuffer& current,
                              const std::vector<const FrameBuffer*>& previous,
                              const XpsnrConfig& cfg) {
    for (const FrameBuffer* p : previous)
        if (p && !p->same_geometry(current))
            throw std::invalid_argument("history frame geometry mismatch");

    const bool second_order = cfg.frame_rate.value() > 32.0;
    const FrameBuffer* prev1 = previous.empty() ? nullptr : previous.back();
    const FrameBuffer* prev2 = previous.size() >= 2 ? previous[previous.size() - 2] : nullptr;
    const bool temporal = second_order ? (prev1 && prev2) : (prev1 != nullptr);

    const int w = current.width, h = current.height;
    const uint16_t* cur = current.y.data();
    const uint16_t* p1 = temporal ? prev1->y.data() : nullptr;
    const uint16_t* p2 = (temporal && second_order) ? prev2->y.data() : nullptr;
    // All terms are integer-valued, so 64-bit integer accumulation is
    // bit-exact with the floating-point formulation.
    int64_t acc = 0;
    for (int y = block.y0; y < block.y0 + block.h; ++y) {
        const uint16_t* rc = cur + static_cast<size_t>(y) * w;
        const uint16_t* rm = cur + static_cast<size_t>(std::max(y - 1, 0)) * w;
        const uint16_t* rp = cur + static_cast<size_t>(std::min(y + 1, h - 1)) * w;
        const uint16_t* t1 = p1 ? p1 + static_cast<size_t>(y) * w : nullptr;
        const uint16_t* t2 = p2 ? p2 + static_cast<size_t>(y) * w : nullptr;
        for (int x = block.x0; x < block.x0 + block.w; ++x) {
            const int xm = x > 0 ? x - 1 : 0;
            const int xp = x < w - 1 ? x + 1 : w - 1;
            const int hs = 12 * rc[x] - 2 * (rc[xm] + rc[xp] + rm[x] + rp[x]) -
                           (rm[xm] + rm[xp] + rp[xm] + rp[xp]);
            int ht = 0;
            if (t1) ht = t2 ? rc[x] - 2 * t1[x] + t2[x] : rc[x] - t1[x];
            acc += std::abs(hs) + 2 * std::abs(ht);
        }
    }
    const double mean = static_cast<double>(acc) / (4.0 * block.sample_count());
    return std::max(cfg.activity_floor * cfg.activity_floor, mean * mean);
}

// Picture-average activity a_P = 2^(2d-9) * sqrt(3840*2160 / (W*H)).
inline double picture_activity(const XpsnrConfig& cfg) {
    return std::exp2(2.0 * cfg.bit_depth - 9.0) *
           std::sqrt(3840.0 * 2160.0 / (static_cast<double>(cfg.width) * cfg.height));
}

struct FrameXpsnr {
    double xpsnr_db = 0.0;
    BlockWeightMap blocks;
};

// Weighted-SSE XPSNR of one frame; activities come from the reference
// sequence only.
inline FrameXpsnr frame_xpsnr(const FrameBuffer& ref, const FrameBuffer& dist,
                              const std::vector<const FrameBuffer*>& ref_history,
                              const XpsnrConfig& cfg) {
    if (!ref.same_geometry(dist))
        throw std::invalid_argument("reference/distorted geometry mismatch");

    const int n = cfg.block_size;
    const auto blocks = block_grid(cfg.width, cfg.height);
    const double a_pic = picture_activity(cfg);

    FrameXpsnr out;
    out.blocks.blocks_x = (cfg.width + n - 1) / n;
    out.blocks.blocks_y = (cfg.height + n - 1) / n;

    double wsse = 0.0;
    for (const auto& b : blocks) {
        const double act = visual_activity(b, ref, ref_history, cfg);
        const double wk = std::sqrt(a_pic / act);
        int64_t sse_i = 0;
        for (int y = b.y0; y < b.y0 + b.h; ++y) {
            const uint16_t* r = ref.y.data() + static_cast<size_t>(y) * cfg.width;
            const uint16_t* d = dist.y.data() + static_cast<size_t>(y) * cfg.width;
            for (int x = b.x0; x < b.x0 + b.w; ++x) {
                const int diff = static_cast<int>(r[x]) - d[x];
                sse_i += static_cast<int64_t>(diff) * diff;
            }
        }
        const double sse = static_cast<double>(sse_i);
        out.blocks.activity.push_back(act);
        out.blocks.weight.push_back(wk);
        out.blocks.sse.push_back(sse);
        wsse += wk * sse;
    }

    if (wsse <= 0.0) {
        out.xpsnr_db = cfg.frame_cap;
        return out;
    }
    const double peak = std::exp2(static_cast<double>(cfg.bit_depth)) - 1.0;
    const double db =
        10.0 * std::log10(peak * peak * cfg.width * cfg.height / wsse);
    out.xpsnr_db = std::min(db, cfg.frame_cap);
    return out;
}

inline double frame_psnr(const FrameBuffer& ref, const FrameBuffer& dist, double frame_cap = 100.0) {
    if (!ref.same_geometry(dist))
        throw std::invalid_argument("reference/distorted geometry mismatch");
    int64_t sse_i = 0;
    for (size_t i = 0; i < ref.y.size(); ++i) {
        const int diff = static_cast<int>(ref.y[i]) - dist.y[i];
        sse_i += static_cast<int64_t>(diff) * diff;
    }
    const double sse = static_cast<double>(sse_i);
    if (sse <= 0.0) return frame_cap;
    const double peak = std::exp2(static_cast<double>(ref.bit_depth)) - 1.0;
    const double mse = sse / static_cast<double>(ref.y.size());
    return std::min(10.0 * std::log10(peak * peak / mse), frame_cap);
}

struct SequenceMetrics {
    double xpsnr_db = 0.0;
    double psnr_db = 0.0;
    std::vector<double> per_frame_xpsnr;
    std::vector<double> per_frame_psnr;
};

inline SequenceMetrics sequence_metrics(const std::vector<FrameBuffer>& ref,
                                        const std::vector<FrameBuffer>& dist,
                                        double activity_floor = 0.0, double frame_cap = 100.0) {
    if (ref.size() != dist.size())
        throw std::invalid_argument("sequence length mismatch");
    if (ref.empty()) throw std::invalid_argument("empty sequence");

    const auto cfg = make_xpsnr_config(ref[0].width, ref[0].height, ref[0].bit_depth,
                                       ref[0].frame_rate, activity_floor, frame_cap);
    SequenceMetrics m;
    for (size_t t = 0; t < ref.size(); ++t) {
        std::vector<const FrameBuffer*> history;
        if (t >= 2) history.push_back(&ref[t - 2]);
        if (t >= 1) history.push_back(&ref[t - 1]);
        m.per_frame_xpsnr.push_back(frame_xpsnr(ref[t], dist[t], history, cfg).xpsnr_db);
        m.per_frame_psnr.push_back(frame_psnr(ref[t], dist[t], frame_cap));
        m.xpsnr_db += m.per_frame_xpsnr.back();
        m.psnr_db += m.per_frame_psnr.back();
    }
    m.xpsnr_db /= static_cast<double>(ref.size());
    m.psnr_db /= static_cast<double>(ref.size());
    return m;
}

inline double sequence_xpsnr(const std::vector<FrameBuffer>& ref,
                             const std::vector<FrameBuffer>& dist) {
    return sequence_metrics(ref, dist).xpsnr_db;
}

inline double sequence_psnr(const std::vector<FrameBuffer>& ref,
                            const std::vector<FrameBuffer>& dist) {
    return sequence_metrics(ref, dist).psnr_db;
}

}  // namespace vexus
