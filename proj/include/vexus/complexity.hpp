#pragma once

#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "vexus/frame.hpp"

namespace vexus {

// The seven spatiotemporal complexity features of a scene. Energies are
// per-sample normalized sums of |AC| coefficients of an orthonormal 2-D
// DCT-II over fixed-size blocks; brightness values are plane means on an
// 8-bit scale (10-bit samples divided by 4).
struct SceneFeatures {
    double E_Y = 0.0;  // luma texture energy
    double h = 0.0;    // temporal gradient of luma texture energy
    double L_Y = 0.0;  // average luma brightness
    double E_U = 0.0;
    double L_U = 0.0;
    double E_V = 0.0;
    double L_V = 0.0;
    int64_t frame_count = 0;
};

inline constexpr int kLumaBlockSize = 32;
inline constexpr int kChromaBlockSize = 16;

namespace detail {

// Cached FFTW REDFT10 plan per block size. FFTW planning is not
// thread-safe; execution through fftw_execute_r2r on private buffers is.
class DctPlan {
  public:
    explicit DctPlan(int w) : w_(w), buf_(static_cast<size_t>(w) * w) {
        plan_ = fftw_plan_r2r_2d(w, w, buf_.data(), buf_.data(), FFTW_REDFT10, FFTW_REDFT10,
                                 FFTW_ESTIMATE);
        // REDFT10 computes 2*sum x_n cos(pi(n+0.5)k/w) per axis; these
        // factors rescale to the orthonormal DCT-II.
        scale_.resize(static_cast<size_t>(w));
        for (int k = 0; k < w; ++k)
            scale_[static_cast<size_t>(k)] =
                0.5 * std::sqrt(2.0 / w) * (k == 0 ? 1.0 / std::sqrt(2.0) : 1.0);
    }
    ~DctPlan() { fftw_destroy_plan(plan_); }
    DctPlan(const DctPlan&) = delete;
    DctPlan& operator=(const DctPlan&) = delete;

    // Input staging area (w*w samples); filled by the caller before
    // ac_energy_in_buffer(). Not thread-safe, like plan execution here.
    double* buffer() { return buf_.data(); }

    // Sum of |coefficient| over all AC positions of the orthonormal DCT-II.
    double ac_energy(const double* block) {
        std::memcpy(buf_.data(), block, buf_.size() * sizeof(double));
        return ac_energy_in_buffer();
    }

    double ac_energy_in_buffer() {
        fftw_execute_r2r(plan_, buf_.data(), buf_.data());
        double sum = 0.0;
        for (int ky = 0; ky < w_; ++ky) {
            const double sy = scale_[static_cast<size_t>(ky)];
            const double* row = buf_.data() + static_cast<size_t>(ky) * w_;
            for (int kx = 0; kx < w_; ++kx)
                sum += std::abs(row[kx]) * sy * scale_[static_cast<size_t>(kx)];
        }
        // remove DC
        sum -= std::abs(buf_[0]) * scale_[0] * scale_[0];
        return sum;
    }

  private:
    int w_;
    std::vector<double> buf_;
    std::vector<double> scale_;
    fftw_plan plan_;
};

inline DctPlan& dct_plan(int w) {
    static std::mutex mtx;
    static std::map<int, std::unique_ptr<DctPlan>> plans;
    std::lock_guard<std::mutex> lock(mtx);
    auto& p = plans[w];
    if (!p) p = std::make_unique<DctPlan>(w);
    return *p;
}

// Per-frame, per-plane block energies. Edge blocks are replicate-padded
// to the full block size; samples normalized to an 8-bit scale.
inline std::vector<double> plane_block_energies(const uint16_t* samples, int width, int height,
                                                int block, double sample_scale) {
    const int bx = (width + block - 1) / block;
    const int by = (height + block - 1) / block;
    auto& plan = dct_plan(block);
    std::vector<double> energies(static_cast<size_t>(bx) * by);
    double* buf = plan.buffer();
    for (int j = 0; j < by; ++j) {
        for (int i = 0; i < bx; ++i) {
            if ((i + 1) * block <= width && (j + 1) * block <= height) {
                const uint16_t* src =
                    samples + static_cast<size_t>(j) * block * width + static_cast<size_t>(i) * block;
                for (int y = 0; y < block; ++y) {
                    const uint16_t* row = src + static_cast<size_t>(y) * width;
                    double* out = buf + static_cast<size_t>(y) * block;
                    for (int x = 0; x < block; ++x) out[x] = row[x] * sample_scale;
                }
            } else {
                for (int y = 0; y < block; ++y) {
                    int sy = std::min(j * block + y, height - 1);
                    const uint16_t* row = samples + static_cast<size_t>(sy) * width;
                    double* out = buf + static_cast<size_t>(y) * block;
                    for (int x = 0; x < block; ++x) {
                        int sx = std::min(i * block + x, width - 1);
                        out[x] = row[sx] * sample_scale;
                    }
                }
            }
            energies[static_cast<size_t>(j) * bx + i] = plan.ac_energy_in_buffer();
        }
    }
    return energies;
}

inline double plane_mean(const uint16_t* samples, size_t n, double sample_scale) {
    double sum = 0.0;
    for (size_t i = 0; i < n; ++i) sum += samples[i];
    return sum * sample_scale / static_cast<double>(n);
}

}  // namespace detail

// AC energy of one fully-populated w x w block, samples already on the
// 8-bit scale.
inline double block_texture_energy(const std::vector<double>& block, int w) {
    if (block.size() != static_cast<size_t>(w) * w)
        throw std::invalid_argument("block size mismatch");
    return detail::dct_plan(w).ac_energy(block.data());
}

// Per-frame feature record, exposed for the per-frame CSV dump.
struct FrameFeatures {
    double E_Y = 0.0, h = 0.0, L_Y = 0.0;
    double E_U = 0.0, L_U = 0.0, E_V = 0.0, L_V = 0.0;
};

inline SceneFeatures extract_scene_features(const std::vector<FrameBuffer>& frames,
                                            std::vector<FrameFeatures>* per_frame = nullptr) {
    if (frames.empty()) throw std::invalid_argument("scene has no frames");
    for (size_t i = 1; i < frames.size(); ++i)
        if (!frames[i].same_geometry(frames[0]))
            throw std::invalid_argument("scene frames differ in geometry");

    const int w = frames[0].width, h = frames[0].height;
    const int cw = frames[0].chroma_width(), ch = frames[0].chroma_height();
    const double scale = frames[0].bit_depth == 10 ? 0.25 : 1.0;
    const double luma_norm =
        1.0 / (static_cast<double>((w + kLumaBlockSize - 1) / kLumaBlockSize) *
               ((h + kLumaBlockSize - 1) / kLumaBlockSize) * kLumaBlockSize * kLumaBlockSize);
    const double chroma_norm =
        1.0 / (static_cast<double>((cw + kChromaBlockSize - 1) / kChromaBlockSize) *
               ((ch + kChromaBlockSize - 1) / kChromaBlockSize) * kChromaBlockSize *
               kChromaBlockSize);

    SceneFeatures f;
    f.frame_count = static_cast<int64_t>(frames.size());
    std::vector<double> prev_luma;
    double h_sum = 0.0;
    if (per_frame) per_frame->clear();

    for (size_t t = 0; t < frames.size(); ++t) {
        const auto& fr = frames[t];
        auto luma = detail::plane_block_energies(fr.y.data(), w, h, kLumaBlockSize, scale);
        auto eu = detail::plane_block_energies(fr.u.data(), cw, ch, kChromaBlockSize, scale);
        auto ev = detail::plane_block_energies(fr.v.data(), cw, ch, kChromaBlockSize, scale);

        FrameFeatures ff;
        for (double e : luma) ff.E_Y += e;
        ff.E_Y *= luma_norm;
        for (double e : eu) ff.E_U += e;
        ff.E_U *= chroma_norm;
        for (double e : ev) ff.E_V += e;
        ff.E_V *= chroma_norm;
        ff.L_Y = detail::plane_mean(fr.y.data(), fr.y.size(), scale);
        ff.L_U = detail::plane_mean(fr.u.data(), fr.u.size(), scale);
        ff.L_V = detail::plane_mean(fr.v.data(), fr.v.size(), scale);

        if (t > 0) {
            double d = 0.0;
            for (size_t k = 0; k < luma.size(); ++k) d += std::abs(luma[k] - prev_luma[k]);
            ff.h = d * luma_norm;
            h_sum += ff.h;
        }
        prev_luma = std::move(luma);

        f.E_Y += ff.E_Y;
        f.E_U += ff.E_U;
        f.E_V += ff.E_V;
        f.L_Y += ff.L_Y;
        f.L_U += ff.L_U;
        f.L_V += ff.L_V;
        if (per_frame) per_frame->push_back(ff);
    }

    const double n = static_cast<double>(frames.size());
    f.E_Y /= n;
    f.E_U /= n;
    f.E_V /= n;
    f.L_Y /= n;
    f.L_U /= n;
    f.L_V /= n;
    f.h = frames.size() > 1 ? h_sum / (n - 1.0) : 0.0;
    return f;
}

}  // namespace vexus
