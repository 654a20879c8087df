#pragma once

#include "cubevid/codec.hpp"
#include "cubevid/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cubevid {

struct FrameGeometry {
    std::size_t frames = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t planes = 3;
    int bit_depth = 8;

    std::size_t plane_samples() const noexcept { return height * width; }
    std::size_t frame_samples() const noexcept { return planes * height * width; }

    friend bool operator==(const FrameGeometry&, const FrameGeometry&) = default;
};

/// Integer frames in planar order, samples[t][plane][y][x].
struct FrameStack {
    FrameGeometry geometry;
    std::vector<std::uint16_t> samples;

    FrameStack() = default;
    explicit FrameStack(FrameGeometry g) : geometry(g), samples(g.frames * g.frame_samples(), 0) {}

    std::uint16_t& at(std::size_t t, std::size_t p, std::size_t y, std::size_t x)
    {
        return samples[((t * geometry.planes + p) * geometry.height + y) * geometry.width + x];
    }
    std::uint16_t at(std::size_t t, std::size_t p, std::size_t y, std::size_t x) const
    {
        return samples[((t * geometry.planes + p) * geometry.height + y) * geometry.width + x];
    }

    friend bool operator==(const FrameStack&, const FrameStack&) = default;
};

/// Gathers channels of a quantized [t, y, x, c] array into planes; `slots[p]`
/// names the channel written to plane p (slots may repeat).
FrameStack pack_planes(const SampleArray& samples, std::span<const std::size_t> slots, int bit_depth);

/// Writes plane p of `frames` into channel `channels[p]` of a [t, y, x, c]
/// array; pass only the real (non-padding) planes.
void unpack_planes(const FrameStack& frames, std::span<const std::size_t> channels, SampleArray& out);

struct EncodeStats {
    std::uint64_t bytes_written = 0; // on-disk size of every produced file
    double wall_seconds = 0.0;
    std::size_t files = 0;
    std::vector<std::string> command;
};

struct DecodeStats {
    double wall_seconds = 0.0;
    std::vector<std::string> command;
};

struct DecodedFrames {
    FrameStack frames;
    DecodeStats stats;
};

/// String tags mirrored into the video container (informational only).
using VideoTags = std::map<std::string, std::string>;

/// Streams raw planar frames to the encoder's stdin and writes a Matroska
/// file. Options are passed through verbatim as "-key value".
EncodeStats encode_video(const FrameStack& frames, const CodecConfig& config, const std::filesystem::path& out_path,
                         const VideoTags& tags = {});

/// Decodes a video file to raw planar frames. With `expected`, the stream is
/// decoded straight to that geometry and any disagreement is an error;
/// without it, the geometry is probed from the file.
DecodedFrames decode_video(const std::filesystem::path& path, const std::optional<FrameGeometry>& expected = {});

/// Frame-by-frame JPEG 2000 baseline: writes `out_dir`/frame_%05d.jp2
/// (1-based). Uses gdal_translate when available, ffmpeg's OpenJPEG
/// wrapper otherwise.
EncodeStats encode_frames_image(const FrameStack& frames, const CodecConfig& config,
                                const std::filesystem::path& out_dir);

DecodedFrames decode_frames_image(const std::filesystem::path& dir, const FrameGeometry& expected);

/// Sum of regular file sizes below `path` (or the size of `path` itself).
std::uint64_t disk_usage(const std::filesystem::path& path);

} // namespace cubevid
