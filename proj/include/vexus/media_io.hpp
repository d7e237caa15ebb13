#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vexus/frame.hpp"

namespace vexus {

struct SequenceGeometry {
    int width = 0;
    int height = 0;
    int bit_depth = 8;
    FrameRate frame_rate;
};

enum class SequenceFormat { Raw, Y4m };

// Handle to an on-disk raw (.yuv) or Y4M sequence. Frames are addressed
// by index; for Y4M the per-frame offsets are indexed once at open time.
struct SequenceHandle {
    std::string path;
    SequenceGeometry geometry;
    int64_t frame_count = 0;
    SequenceFormat format = SequenceFormat::Raw;
    std::vector<int64_t> frame_offsets;  // Y4M only

    size_t frame_bytes() const {
        size_t samples = static_cast<size_t>(geometry.width) * geometry.height * 3 / 2;
        return samples * (geometry.bit_depth > 8 ? 2 : 1);
    }
};

namespace detail {

inline SequenceGeometry parse_y4m_header(const std::string& line, const std::string& path) {
    std::istringstream iss(line);
    std::string tok;
    iss >> tok;
    if (tok != "YUV4MPEG2")
        throw std::runtime_error(path + ": not a Y4M stream");
    SequenceGeometry g;
    bool have_w = false, have_h = false;
    std::string colorspace = "420";  // Y4M default is 4:2:0
    while (iss >> tok) {
        if (tok.empty()) continue;
        switch (tok[0]) {
            case 'W': g.width = std::stoi(tok.substr(1)); have_w = true; break;
            case 'H': g.height = std::stoi(tok.substr(1)); have_h = true; break;
            case 'F': {
                auto colon = tok.find(':');
                g.frame_rate.num = std::stoi(tok.substr(1, colon - 1));
                g.frame_rate.den = colon == std::string::npos ? 1 : std::stoi(tok.substr(colon + 1));
                break;
            }
            case 'C': colorspace = tok.substr(1); break;
            default: break;  // interlacing / aspect tags ignored
        }
    }
    if (!have_w || !have_h)
        throw std::runtime_error(path + ": Y4M header missing geometry");
    if (colorspace != "420" && colorspace != "420mpeg2")
        throw std::runtime_error(path + ": unsupported Y4M colorspace C" + colorspace);
    g.bit_depth = 8;
    return g;
}

inline void read_plane(std::ifstream& f, std::vector<uint16_t>& plane, int bit_depth,
                       const std::string& path) {
    if (bit_depth == 8) {
        std::vector<uint8_t> raw(plane.size());
        f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (!f) throw std::runtime_error(path + ": short read");
        for (size_t i = 0; i < raw.size(); ++i) plane[i] = raw[i];
    } else {
        // 10-bit: little-endian, 2 bytes per sample, LSB-aligned
        std::vector<uint8_t> raw(plane.size() * 2);
        f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (!f) throw std::runtime_error(path + ": short read");
        for (size_t i = 0; i < plane.size(); ++i)
            plane[i] = static_cast<uint16_t>(raw[2 * i] | (raw[2 * i + 1] << 8));
    }
}

inline void write_plane(std::ofstream& f, const std::vector<uint16_t>& plane, int bit_depth) {
    if (bit_depth == 8) {
        std::vector<uint8_t> raw(plane.size());
        for (size_t i = 0; i < plane.size(); ++i) raw[i] = static_cast<uint8_t>(plane[i]);
        f.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    } else {
        std::vector<uint8_t> raw(plane.size() * 2);
        for (size_t i = 0; i < plane.size(); ++i) {
            raw[2 * i] = static_cast<uint8_t>(plane[i] & 0xff);
            raw[2 * i + 1] = static_cast<uint8_t>(plane[i] >> 8);
        }
        f.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    }
}

}  // namespace detail

inline SequenceHandle open_sequence(const std::string& path,
                                    std::optional<SequenceGeometry> geometry_override = {}) {
    namespace fs = std::filesystem;
    if (!fs::exists(path))
        throw std::runtime_error(path + ": no such file");
    const int64_t file_size = static_cast<int64_t>(fs::file_size(path));

    SequenceHandle h;
    h.path = path;

    std::ifstream f(path, std::ios::binary);
    std::string magic(9, '\0');
    f.read(magic.data(), 9);
    const bool is_y4m = f && magic == "YUV4MPEG2";

    if (is_y4m) {
        // Header wins over any override.
        f.seekg(0);
        std::string header;
        std::getline(f, header);
        h.format = SequenceFormat::Y4m;
        h.geometry = detail::parse_y4m_header(header, path);
        const int64_t frame_bytes = static_cast<int64_t>(h.frame_bytes());
        // Index FRAME markers; marker lines may carry parameters.
        while (true) {
            std::string marker;
            if (!std::getline(f, marker)) break;
            if (marker.rfind("FRAME", 0) != 0)
                throw std::runtime_error(path + ": malformed Y4M frame marker");
            int64_t off = static_cast<int64_t>(f.tellg());
            if (off + frame_bytes > file_size)
                throw std::runtime_error(path + ": truncated Y4M frame payload");
            h.frame_offsets.push_back(off);
            f.seekg(off + frame_bytes);
        }
        h.frame_count = static_cast<int64_t>(h.frame_offsets.size());
    } else {
        if (!geometry_override)
            throw std::runtime_error(path + ": raw input requires explicit geometry");
        h.format = SequenceFormat::Raw;
        h.geometry = *geometry_override;
        if (h.geometry.width <= 0 || h.geometry.height <= 0 ||
            (h.geometry.width % 2) != 0 || (h.geometry.height % 2) != 0)
            throw std::runtime_error(path + ": width and height must be positive and even");
        if (h.geometry.bit_depth != 8 && h.geometry.bit_depth != 10)
            throw std::runtime_error(path + ": bit depth must be 8 or 10");
        const int64_t frame_bytes = static_cast<int64_t>(h.frame_bytes());
        if (file_size % frame_bytes != 0)
            throw std::runtime_error(path + ": truncated file (payload not a multiple of frame size)");
        h.frame_count = file_size / frame_bytes;
    }
    return h;
}

inline FrameBuffer read_frame(const SequenceHandle& handle, int64_t index) {
    if (index < 0 || index >= handle.frame_count)
        throw std::out_of_range(handle.path + ": frame index " + std::to_string(index) +
                                " out of range [0, " + std::to_string(handle.frame_count) + ")");
    std::ifstream f(handle.path, std::ios::binary);
    if (!f) throw std::runtime_error(handle.path + ": open failed");

    const auto& g = handle.geometry;
    FrameBuffer frame(g.width, g.height, g.bit_depth, g.frame_rate);
    frame.frame_index = index;

    int64_t offset = handle.format == SequenceFormat::Y4m
                         ? handle.frame_offsets[static_cast<size_t>(index)]
                         : index * static_cast<int64_t>(handle.frame_bytes());
    f.seekg(offset);
    detail::read_plane(f, frame.y, g.bit_depth, handle.path);
    detail::read_plane(f, frame.u, g.bit_depth, handle.path);
    detail::read_plane(f, frame.v, g.bit_depth, handle.path);
    return frame;
}

inline std::vector<FrameBuffer> read_all_frames(const SequenceHandle& handle) {
    std::vector<FrameBuffer> frames;
    frames.reserve(static_cast<size_t>(handle.frame_count));
    for (int64_t i = 0; i < handle.frame_count; ++i) frames.push_back(read_frame(handle, i));
    return frames;
}

inline void write_sequence(const std::vector<FrameBuffer>& frames, const std::string& path,
                           SequenceFormat format,
                           std::optional<SequenceGeometry> empty_geometry = {}) {
    for (size_t i = 1; i < frames.size(); ++i)
        if (!frames[i].same_geometry(frames[0]))
            throw std::runtime_error(path + ": frames differ in geometry or bit depth");

    SequenceGeometry g;
    if (!frames.empty()) {
        g = {frames[0].width, frames[0].height, frames[0].bit_depth, frames[0].frame_rate};
    } else if (empty_geometry) {
        g = *empty_geometry;
    } else if (format == SequenceFormat::Y4m) {
        throw std::runtime_error(path + ": empty Y4M sequence needs explicit geometry");
    }
    if (format == SequenceFormat::Y4m && g.bit_depth != 8)
        throw std::runtime_error(path + ": Y4M output supports 8-bit C420 only");

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error(path + ": open for write failed");

    if (format == SequenceFormat::Y4m) {
        f << "YUV4MPEG2 W" << g.width << " H" << g.height << " F" << g.frame_rate.num << ":"
          << g.frame_rate.den << " Ip A1:1 C420\n";
    }
    for (const auto& frame : frames) {
        if (format == SequenceFormat::Y4m) f << "FRAME\n";
        detail::write_plane(f, frame.y, frame.bit_depth);
        detail::write_plane(f, frame.u, frame.bit_depth);
        detail::write_plane(f, frame.v, frame.bit_depth);
    }
    f.flush();
    if (!f) throw std::runtime_error(path + ": write failed");
}

}  // namespace vexus
