#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vexus {

struct FrameRate {
    int num = 30;
    int den = 1;

    double value() const { return static_cast<double>(num) / den; }
};

// One decoded picture in planar 4:2:0 layout. Samples are stored as
// uint16_t for both 8- and 10-bit content; values must stay within
// [0, 2^bit_depth - 1].
struct FrameBuffer {
    int width = 0;
    int height = 0;
    int bit_depth = 8;
    int64_t frame_index = 0;
    FrameRate frame_rate;
    std::vector<uint16_t> y;
    std::vector<uint16_t> u;
    std::vector<uint16_t> v;

    FrameBuffer() = default;
    FrameBuffer(int w, int h, int depth, FrameRate fps = {})
        : width(w), height(h), bit_depth(depth), frame_rate(fps) {
        if (w <= 0 || h <= 0 || (w % 2) != 0 || (h % 2) != 0)
            throw std::invalid_argument("frame dimensions must be positive and even");
        if (depth != 8 && depth != 10)
            throw std::invalid_argument("bit depth must be 8 or 10");
        y.assign(static_cast<size_t>(w) * h, 0);
        u.assign(static_cast<size_t>(w / 2) * (h / 2), 0);
        v.assign(static_cast<size_t>(w / 2) * (h / 2), 0);
    }

    int chroma_width() const { return width / 2; }
    int chroma_height() const { return height / 2; }
    uint16_t max_sample() const { return static_cast<uint16_t>((1u << bit_depth) - 1); }

    bool same_geometry(const FrameBuffer& o) const {
        return width == o.width && height == o.height && bit_depth == o.bit_depth;
    }

    void validate() const {
        if (y.size() != static_cast<size_t>(width) * height ||
            u.size() != static_cast<size_t>(chroma_width()) * chroma_height() ||
            v.size() != u.size())
            throw std::runtime_error("plane size does not match declared geometry");
        const uint16_t cap = max_sample();
        for (uint16_t s : y)
            if (s > cap) throw std::runtime_error("luma sample exceeds bit depth");
        for (uint16_t s : u)
            if (s > cap) throw std::runtime_error("chroma U sample exceeds bit depth");
        for (uint16_t s : v)
            if (s > cap) throw std::runtime_error("chroma V sample exceeds bit depth");
    }
};

}  // namespace vexus
