#include "cubevid/process.hpp"
#include "cubevid/video.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <regex>
#include <sstream>

#include <unistd.h>

namespace cubevid {

namespace fs = std::filesystem;

namespace {

std::size_t bytes_per_sample(int bit_depth)
{
    return bit_depth > 8 ? 2 : 1;
}

std::string to_raw(const FrameStack& frames)
{
    const std::size_t bps = bytes_per_sample(frames.geometry.bit_depth);
    std::string raw(frames.samples.size() * bps, '\0');
    if (bps == 1) {
        std::transform(frames.samples.begin(), frames.samples.end(), raw.begin(),
                       [](std::uint16_t s) { return static_cast<char>(static_cast<std::uint8_t>(s)); });
    } else {
        for (std::size_t i = 0; i < frames.samples.size(); ++i) {
            const std::uint16_t s = frames.samples[i];
            raw[2 * i] = static_cast<char>(s & 0xff);
            raw[2 * i + 1] = static_cast<char>(s >> 8);
        }
    }
    return raw;
}

void from_raw(std::string_view raw, FrameStack& frames)
{
    const std::size_t bps = bytes_per_sample(frames.geometry.bit_depth);
    for (std::size_t i = 0; i < frames.samples.size(); ++i) {
        const auto lo = static_cast<std::uint8_t>(raw[bps * i]);
        frames.samples[i] = bps == 1 ? lo : static_cast<std::uint16_t>(lo | (static_cast<std::uint8_t>(raw[2 * i + 1]) << 8));
    }
}

void check_frames(const FrameStack& frames, const CodecConfig& config)
{
    const auto& g = frames.geometry;
    if (g.frames == 0 || g.height == 0 || g.width == 0) {
        throw ShapeError("cannot encode an empty frame sequence");
    }
    if (g.planes != 1 && g.planes != 3) {
        throw ShapeError("frames must have 1 or 3 planes, got " + std::to_string(g.planes));
    }
    if (g.bit_depth != config.bit_depth) {
        throw ConfigError("frames are " + std::to_string(g.bit_depth) + "-bit but the codec config asks for " +
                          std::to_string(config.bit_depth));
    }
    if (frames.samples.size() != g.frames * g.frame_samples()) {
        throw ShapeError("frame buffer size disagrees with its geometry");
    }
    check_supported(config);
    const std::uint32_t top = (std::uint32_t{1} << g.bit_depth) - 1;
    if (std::any_of(frames.samples.begin(), frames.samples.end(), [top](std::uint16_t s) { return s > top; })) {
        throw DataError("sample exceeds " + std::to_string(g.bit_depth) + "-bit range");
    }
}

std::string tail(const std::string& text, std::size_t max_chars = 2000)
{
    return text.size() <= max_chars ? text : "..." + text.substr(text.size() - max_chars);
}

std::string join(const std::vector<std::string>& argv)
{
    std::string out;
    for (const auto& a : argv) {
        out += (out.empty() ? "" : " ") + a;
    }
    return out;
}

ProcessResult run_checked(const std::vector<std::string>& argv, std::span<const char> input, const std::string& what)
{
    auto slot = ProcessLimiter::global().acquire();
    auto result = run_process(argv, input);
    if (result.exit_code != 0) {
        throw CodecError(what + " failed (exit " + std::to_string(result.exit_code) + "): " + tail(result.err) +
                         "\ncommand: " + join(argv));
    }
    return result;
}

std::vector<std::string> encoder_prefix()
{
    return {find_encoder().string(), "-hide_banner", "-nostdin", "-loglevel", "error", "-y"};
}

std::vector<std::string> raw_input_args(const FrameGeometry& g, const std::string& pix_fmt)
{
    return {"-f", "rawvideo", "-pix_fmt", pix_fmt, "-s", std::to_string(g.width) + "x" + std::to_string(g.height),
            "-r", "1", "-i", "pipe:0"};
}

std::uint64_t file_size_or_zero(const fs::path& p)
{
    std::error_code ec;
    const auto n = fs::file_size(p, ec);
    return ec ? 0 : n;
}

// Pixel format, width and height of the first video stream, from the
// stream summary the encoder prints for its inputs.
struct ProbedStream {
    std::string pix_fmt;
    std::size_t width = 0;
    std::size_t height = 0;
};

ProbedStream probe_stream(const fs::path& path)
{
    const std::vector<std::string> argv = {find_encoder().string(), "-hide_banner", "-nostdin", "-i", path.string()};
    auto slot = ProcessLimiter::global().acquire();
    const auto result = run_process(argv, {}, false);
    static const std::regex stream_re(R"(Stream #0:\d+[^:]*: Video: [^,]*, ([a-z0-9_]+)(?:\([^)]*\))?, (\d+)x(\d+))");
    std::smatch m;
    if (!std::regex_search(result.err, m, stream_re)) {
        throw CodecError("cannot read a video stream from " + path.string() + ": " + tail(result.err, 500));
    }
    return {m[1].str(), std::stoul(m[2].str()), std::stoul(m[3].str())};
}

std::optional<int> bit_depth_of(const std::string& pix_fmt)
{
    if (pix_fmt == "gray" || pix_fmt == "gbrp" || pix_fmt == "yuv444p" || pix_fmt == "rgb24") {
        return 8;
    }
    static const std::regex suffix_re(R"((\d+)(le|be)$)");
    std::smatch m;
    if (std::regex_search(pix_fmt, m, suffix_re)) {
        const int d = std::stoi(m[1].str());
        return d == 444 || d == 420 || d == 422 ? std::optional<int>{} : std::optional<int>{d};
    }
    return std::nullopt;
}

std::string planar_format_for(const std::string& probed, int bit_depth, std::size_t planes)
{
    // Keep the stored layout when it is already planar 4:4:4 or gray, so that
    // no colour conversion is applied on the way out.
    const std::string suffix = bit_depth == 8 ? "" : std::to_string(bit_depth) + "le";
    if (planes == 1) {
        return "gray" + suffix;
    }
    if (probed.rfind("yuv444p", 0) == 0) {
        return "yuv444p" + suffix;
    }
    return "gbrp" + suffix;
}

DecodedFrames run_decode(std::vector<std::string> argv, FrameGeometry g, bool frames_known, const std::string& what)
{
    const auto result = run_checked(argv, {}, what);
    const std::size_t frame_bytes = g.frame_samples() * bytes_per_sample(g.bit_depth);
    if (frame_bytes == 0 || result.out.size() % frame_bytes != 0) {
        throw CodecError(what + ": decoded " + std::to_string(result.out.size()) +
                         " bytes, not a whole number of frames (corrupt or truncated stream)");
    }
    const std::size_t got = result.out.size() / frame_bytes;
    if (frames_known && got != g.frames) {
        throw CodecError(what + ": expected " + std::to_string(g.frames) + " frames, decoded " + std::to_string(got) +
                         " (corrupt or truncated stream)");
    }
    if (got == 0) {
        throw CodecError(what + ": no frames decoded");
    }
    g.frames = got;
    DecodedFrames decoded{FrameStack(g), {result.wall_seconds, std::move(argv)}};
    from_raw(result.out, decoded.frames);
    return decoded;
}

// --- JPEG 2000 through ffmpeg's OpenJPEG wrapper --------------------------

std::vector<std::string> openjpeg_options(const CodecConfig& config, const FrameGeometry& g)
{
    const auto* quality = find_option(config.options, "QUALITY");
    const auto* reversible = find_option(config.options, "REVERSIBLE");
    const double q = quality != nullptr ? std::stod(*quality) : 100.0;
    if (!(q > 0.0 && q <= 100.0)) {
        throw ConfigError("JP2OpenJPEG QUALITY must be in (0, 100], got " + (quality ? *quality : std::string()));
    }
    const bool rev = reversible != nullptr && *reversible == "YES";
    std::vector<std::string> args = {"-c:v", "libopenjpeg", "-format", "jp2"};
    if (!rev) {
        args.insert(args.end(), {"-irreversible", "1"});
    }
    // QUALITY is the compressed size in percent of the raw size; the wrapper
    // takes a compression ratio of 2 * compression_level.
    const long level = q >= 100.0 ? 0 : std::max(1L, std::lround(100.0 / q / 2.0));
    args.insert(args.end(), {"-compression_level", std::to_string(level)});
    // OpenJPEG wants 2^(levels-1) <= min(width, height); its default is 6 levels.
    int levels = 1;
    while (levels < 6 && (std::size_t{1} << levels) <= std::min(g.height, g.width)) {
        ++levels;
    }
    args.insert(args.end(), {"-numresolution", std::to_string(levels)});
    return args;
}

// --- JPEG 2000 through gdal_translate -------------------------------------

void write_envi(const fs::path& raw_path, const FrameStack& frames, std::size_t t)
{
    const auto& g = frames.geometry;
    const std::size_t bps = bytes_per_sample(g.bit_depth);
    std::string raw(g.frame_samples() * bps, '\0');
    for (std::size_t i = 0; i < g.frame_samples(); ++i) {
        const std::uint16_t s = frames.samples[t * g.frame_samples() + i];
        raw[bps * i] = static_cast<char>(s & 0xff);
        if (bps == 2) {
            raw[bps * i + 1] = static_cast<char>(s >> 8);
        }
    }
    std::ofstream(raw_path, std::ios::binary).write(raw.data(), static_cast<std::streamsize>(raw.size()));
    std::ofstream hdr(fs::path(raw_path).replace_extension(".hdr"));
    hdr << "ENVI\nsamples = " << g.width << "\nlines = " << g.height << "\nbands = " << g.planes
        << "\nheader offset = 0\nfile type = ENVI Standard\ndata type = " << (bps == 2 ? 12 : 1)
        << "\ninterleave = bsq\nbyte order = 0\n";
    if (!hdr) {
        throw Error("cannot write " + raw_path.string());
    }
}

EncodeStats encode_with_gdal(const FrameStack& frames, const CodecConfig& config, const fs::path& out_dir,
                             const fs::path& translator)
{
    const auto& g = frames.geometry;
    EncodeStats stats;
    const fs::path scratch = out_dir / ".scratch";
    fs::create_directories(scratch);
    for (std::size_t t = 0; t < g.frames; ++t) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%05zu", t + 1);
        const fs::path raw = scratch / (std::string(name) + ".raw");
        write_envi(raw, frames, t);
        std::vector<std::string> argv = {translator.string(), "-q", "-of", "JP2OpenJPEG"};
        for (const auto& [k, v] : config.options) {
            if (k != "codec") {
                argv.insert(argv.end(), {"-co", k + "=" + v});
            }
        }
        if (g.bit_depth != 8 && g.bit_depth != 16) {
            argv.insert(argv.end(), {"-co", "NBITS=" + std::to_string(g.bit_depth)});
        }
        argv.push_back(raw.string());
        argv.push_back((out_dir / (std::string(name) + ".jp2")).string());
        const auto result = run_checked(argv, {}, "JPEG 2000 encode");
        stats.wall_seconds += result.wall_seconds;
        if (stats.command.empty()) {
            stats.command = argv;
        }
    }
    fs::remove_all(scratch);
    return stats;
}

DecodedFrames decode_with_gdal(const fs::path& dir, const FrameGeometry& g, const fs::path& translator)
{
    const std::size_t bps = bytes_per_sample(g.bit_depth);
    DecodedFrames decoded{FrameStack(g), {}};
    const fs::path scratch = fs::temp_directory_path() / ("cubevid_jp2_" + std::to_string(::getpid()) + "_" +
                                                          std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    fs::create_directories(scratch);
    try {
        for (std::size_t t = 0; t < g.frames; ++t) {
            char name[32];
            std::snprintf(name, sizeof name, "frame_%05zu", t + 1);
            const fs::path jp2 = dir / (std::string(name) + ".jp2");
            const fs::path raw = scratch / (std::string(name) + ".raw");
            std::vector<std::string> argv = {translator.string(), "-q", "-of", "ENVI", jp2.string(), raw.string()};
            const auto result = run_checked(argv, {}, "JPEG 2000 decode");
            decoded.stats.wall_seconds += result.wall_seconds;
            if (decoded.stats.command.empty()) {
                decoded.stats.command = argv;
            }
            std::ifstream in(raw, std::ios::binary);
            std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            if (bytes.size() != g.frame_samples() * bps) {
                throw CodecError("JPEG 2000 decode of " + jp2.string() + " produced " + std::to_string(bytes.size()) +
                                 " bytes, expected " + std::to_string(g.frame_samples() * bps));
            }
            for (std::size_t i = 0; i < g.frame_samples(); ++i) {
                const auto lo = static_cast<std::uint8_t>(bytes[bps * i]);
                decoded.frames.samples[t * g.frame_samples() + i] =
                    bps == 1 ? lo : static_cast<std::uint16_t>(lo | (static_cast<std::uint8_t>(bytes[bps * i + 1]) << 8));
            }
        }
    } catch (...) {
        fs::remove_all(scratch);
        throw;
    }
    fs::remove_all(scratch);
    return decoded;
}

} // namespace

// --- plane packing -----------------------------------------------------------

FrameStack pack_planes(const SampleArray& samples, std::span<const std::size_t> slots, int bit_depth)
{
    if (samples.rank() != 4) {
        throw ShapeError("pack_planes expects a [t, y, x, c] array");
    }
    const std::size_t nt = samples.dim(0), ny = samples.dim(1), nx = samples.dim(2), nc = samples.dim(3);
    FrameStack frames(FrameGeometry{nt, ny, nx, slots.size(), bit_depth});
    for (std::size_t p = 0; p < slots.size(); ++p) {
        if (slots[p] >= nc) {
            throw ShapeError("plane slot " + std::to_string(slots[p]) + " exceeds " + std::to_string(nc) + " channels");
        }
    }
    for (std::size_t t = 0; t < nt; ++t) {
        for (std::size_t p = 0; p < slots.size(); ++p) {
            for (std::size_t y = 0; y < ny; ++y) {
                for (std::size_t x = 0; x < nx; ++x) {
                    frames.at(t, p, y, x) = samples.at(t, y, x, slots[p]);
                }
            }
        }
    }
    return frames;
}

void unpack_planes(const FrameStack& frames, std::span<const std::size_t> channels, SampleArray& out)
{
    const auto& g = frames.geometry;
    if (out.rank() != 4 || out.dim(0) != g.frames || out.dim(1) != g.height || out.dim(2) != g.width) {
        throw ShapeError("decoded frames " + std::to_string(g.frames) + "x" + std::to_string(g.height) + "x" +
                         std::to_string(g.width) + " do not match target " + shape_to_string(out.shape()));
    }
    if (channels.size() > g.planes) {
        throw ShapeError("asked for " + std::to_string(channels.size()) + " planes from a " +
                         std::to_string(g.planes) + "-plane video");
    }
    for (std::size_t t = 0; t < g.frames; ++t) {
        for (std::size_t p = 0; p < channels.size(); ++p) {
            for (std::size_t y = 0; y < g.height; ++y) {
                for (std::size_t x = 0; x < g.width; ++x) {
                    out.at(t, y, x, channels[p]) = frames.at(t, p, y, x);
                }
            }
        }
    }
}

// --- video path --------------------------------------------------------------

EncodeStats encode_video(const FrameStack& frames, const CodecConfig& config, const fs::path& out_path,
                         const VideoTags& tags)
{
    if (config.per_frame()) {
        throw ConfigError("JP2OpenJPEG is an image codec; use encode_frames_image");
    }
    check_frames(frames, config);
    const auto& g = frames.geometry;
    const std::string pix_fmt = pixel_format(config.codec, g.bit_depth, g.planes);

    auto argv = encoder_prefix();
    const auto input = raw_input_args(g, pix_fmt);
    argv.insert(argv.end(), input.begin(), input.end());
    for (const auto& [key, value] : config.options) {
        argv.push_back("-" + key);
        argv.push_back(value);
    }
    argv.insert(argv.end(), {"-pix_fmt", pix_fmt, "-fflags", "+bitexact"});
    for (const auto& [key, value] : tags) {
        argv.insert(argv.end(), {"-metadata", key + "=" + value});
    }
    argv.insert(argv.end(), {"-f", "matroska", out_path.string()});

    const std::string raw = to_raw(frames);
    const auto result = run_checked(argv, raw, "encoding " + out_path.filename().string());
    EncodeStats stats;
    stats.bytes_written = file_size_or_zero(out_path);
    stats.wall_seconds = result.wall_seconds;
    stats.files = 1;
    stats.command = std::move(argv);
    if (stats.bytes_written == 0) {
        throw CodecError("encoder produced no output at " + out_path.string());
    }
    return stats;
}

DecodedFrames decode_video(const fs::path& path, const std::optional<FrameGeometry>& expected)
{
    if (!fs::is_regular_file(path)) {
        throw NotFoundError("video file " + path.string() + " does not exist");
    }
    const ProbedStream probed = probe_stream(path);
    FrameGeometry g;
    if (expected) {
        g = *expected;
        if (probed.width != g.width || probed.height != g.height) {
            throw FormatError(path.string() + " is " + std::to_string(probed.width) + "x" +
                              std::to_string(probed.height) + ", expected " + std::to_string(g.width) + "x" +
                              std::to_string(g.height));
        }
        if (const auto depth = bit_depth_of(probed.pix_fmt); depth && *depth != g.bit_depth) {
            throw FormatError(path.string() + " holds " + std::to_string(*depth) + "-bit samples (" + probed.pix_fmt +
                              ") but the manifest says " + std::to_string(g.bit_depth));
        }
    } else {
        g.width = probed.width;
        g.height = probed.height;
        g.planes = probed.pix_fmt.rfind("gray", 0) == 0 ? 1 : 3;
        g.bit_depth = bit_depth_of(probed.pix_fmt).value_or(8);
        if (g.bit_depth != 8 && g.bit_depth != 10 && g.bit_depth != 12 && g.bit_depth != 16) {
            g.bit_depth = 16;
        }
    }
    const std::string pix_fmt = planar_format_for(probed.pix_fmt, g.bit_depth, g.planes);
    auto argv = encoder_prefix();
    argv.insert(argv.end(), {"-xerror", "-i", path.string(), "-map", "0:v:0", "-f", "rawvideo", "-pix_fmt", pix_fmt,
                             "pipe:1"});
    return run_decode(std::move(argv), g, expected.has_value(), "decoding " + path.filename().string());
}

// --- image path --------------------------------------------------------------

EncodeStats encode_frames_image(const FrameStack& frames, const CodecConfig& config, const fs::path& out_dir)
{
    if (config.codec != CodecId::jp2openjpeg) {
        throw ConfigError("frame-by-frame encoding needs a JP2OpenJPEG config, got " +
                          std::string(codec_name(config.codec)));
    }
    check_frames(frames, config);
    const auto& g = frames.geometry;
    fs::create_directories(out_dir);

    EncodeStats stats;
    if (const auto translator = find_raster_translator()) {
        stats = encode_with_gdal(frames, config, out_dir, *translator);
    } else {
        const std::string pix_fmt = pixel_format(CodecId::jp2openjpeg, g.bit_depth, g.planes);
        auto argv = encoder_prefix();
        const auto input = raw_input_args(g, pix_fmt);
        argv.insert(argv.end(), input.begin(), input.end());
        const auto options = openjpeg_options(config, g);
        argv.insert(argv.end(), options.begin(), options.end());
        argv.insert(argv.end(), {"-pix_fmt", pix_fmt, "-f", "image2", "-start_number", "1",
                                 (out_dir / "frame_%05d.jp2").string()});
        const std::string raw = to_raw(frames);
        const auto result = run_checked(argv, raw, "JPEG 2000 encode into " + out_dir.filename().string());
        stats.wall_seconds = result.wall_seconds;
        stats.command = std::move(argv);
    }
    for (std::size_t t = 0; t < g.frames; ++t) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%05zu.jp2", t + 1);
        const auto n = file_size_or_zero(out_dir / name);
        if (n == 0) {
            throw CodecError("JPEG 2000 encoder did not produce " + (out_dir / name).string());
        }
        stats.bytes_written += n;
        ++stats.files;
    }
    return stats;
}

DecodedFrames decode_frames_image(const fs::path& dir, const FrameGeometry& expected)
{
    if (!fs::is_directory(dir)) {
        throw NotFoundError("image directory " + dir.string() + " does not exist");
    }
    for (std::size_t t = 0; t < expected.frames; ++t) {
        char name[32];
        std::snprintf(name, sizeof name, "frame_%05zu.jp2", t + 1);
        if (!fs::is_regular_file(dir / name)) {
            throw NotFoundError("missing image " + (dir / name).string());
        }
    }
    if (const auto translator = find_raster_translator()) {
        return decode_with_gdal(dir, expected, *translator);
    }
    const std::string suffix = expected.bit_depth == 8 ? "" : std::to_string(expected.bit_depth) + "le";
    const std::string pix_fmt = (expected.planes == 1 ? "gray" : "gbrp") + suffix;
    auto argv = encoder_prefix();
    argv.insert(argv.end(), {"-xerror", "-f", "image2", "-start_number", "1", "-i", (dir / "frame_%05d.jp2").string(),
                             "-f", "rawvideo", "-pix_fmt", pix_fmt, "pipe:1"});
    return run_decode(std::move(argv), expected, true, "JPEG 2000 decode of " + dir.filename().string());
}

std::uint64_t disk_usage(const fs::path& path)
{
    if (fs::is_regular_file(path)) {
        return fs::file_size(path);
    }
    std::uint64_t total = 0;
    if (fs::is_directory(path)) {
        for (const auto& entry : fs::recursive_directory_iterator(path)) {
            if (entry.is_regular_file()) {
                total += entry.file_size();
            }
        }
    }
    return total;
}

} // namespace cubevid
