#include "cubevid/codec.hpp"
#include "cubevid/error.hpp"

#include <algorithm>
#include <array>

namespace cubevid {

namespace {

constexpr std::array<std::string_view, 6> k_presets = {"Best", "Very high", "High", "Medium", "Low", "Very low"};

struct CodecEntry {
    CodecId id;
    std::string_view name;
};

constexpr std::array<CodecEntry, 6> k_codecs = {{
    {CodecId::libx264, "libx264"},
    {CodecId::libx265, "libx265"},
    {CodecId::vp9, "vp9"},
    {CodecId::ffv1, "ffv1"},
    {CodecId::hevc_nvenc, "hevc_nvenc"},
    {CodecId::jp2openjpeg, "JP2OpenJPEG"},
}};

bool contains_token(std::string_view haystack, std::string_view token)
{
    // x265-params is a ':'-separated list of key=value pairs.
    std::size_t start = 0;
    while (start <= haystack.size()) {
        const auto end = std::min(haystack.find(':', start), haystack.size());
        if (haystack.substr(start, end - start) == token) {
            return true;
        }
        start = end + 1;
    }
    return false;
}

bool option_is(const CodecOptions& options, std::string_view key, std::string_view value)
{
    const auto* v = find_option(options, key);
    return v != nullptr && *v == value;
}

} // namespace

std::string_view codec_name(CodecId codec)
{
    for (const auto& e : k_codecs) {
        if (e.id == codec) {
            return e.name;
        }
    }
    throw ConfigError("unknown codec id");
}

CodecId codec_from_name(std::string_view name)
{
    if (name == "libvpx-vp9") {
        return CodecId::vp9;
    }
    for (const auto& e : k_codecs) {
        if (e.name == name) {
            return e.id;
        }
    }
    throw ConfigError("unknown codec '" + std::string(name) +
                      "' (expected libx264, libx265, vp9, ffv1, hevc_nvenc or JP2OpenJPEG)");
}

const std::string* find_option(const CodecOptions& options, std::string_view key)
{
    for (const auto& [k, v] : options) {
        if (k == key) {
            return &v;
        }
    }
    return nullptr;
}

bool CodecConfig::lossless() const
{
    switch (codec) {
    case CodecId::ffv1:
        return true;
    case CodecId::libx265: {
        const auto* params = find_option(options, "x265-params");
        return params != nullptr && contains_token(*params, "lossless=1");
    }
    case CodecId::vp9:
        return option_is(options, "lossless", "1");
    case CodecId::libx264:
        return option_is(options, "qp", "0");
    case CodecId::jp2openjpeg:
        return option_is(options, "REVERSIBLE", "YES") && option_is(options, "QUALITY", "100");
    case CodecId::hevc_nvenc:
        return false;
    }
    return false;
}

CodecConfig make_codec_config(CodecOptions options, int bit_depth)
{
    const std::string* name = find_option(options, "c:v");
    if (name == nullptr) {
        name = find_option(options, "codec");
    }
    if (name == nullptr) {
        throw ConfigError("codec configuration names no codec (expected a 'c:v' or 'codec' entry)");
    }
    CodecConfig config{codec_from_name(*name), std::move(options), bit_depth};
    return config;
}

bool CodecCapabilities::supports(int bit_depth) const
{
    return std::find(bit_depths.begin(), bit_depths.end(), bit_depth) != bit_depths.end();
}

CodecCapabilities probe_capabilities(CodecId codec)
{
    switch (codec) {
    case CodecId::libx264: return {{8, 10}, 3, true, false, true};
    case CodecId::libx265: return {{8, 10, 12}, 3, true, false, true};
    case CodecId::vp9: return {{8, 10, 12}, 3, true, false, false};
    case CodecId::ffv1: return {{8, 10, 12, 16}, 3, true, false, true};
    case CodecId::hevc_nvenc: return {{8}, 3, false, false, false};
    case CodecId::jp2openjpeg: return {{8, 10, 12, 16}, 3, true, true, true};
    }
    throw ConfigError("unknown codec id");
}

void check_supported(const CodecConfig& config)
{
    const auto caps = probe_capabilities(config.codec);
    if (!caps.supports(config.bit_depth)) {
        std::string depths;
        for (const int b : caps.bit_depths) {
            depths += (depths.empty() ? "" : ", ") + std::to_string(b);
        }
        throw ConfigError(std::string(codec_name(config.codec)) + " does not support " +
                          std::to_string(config.bit_depth) + "-bit output (supported: " + depths + ")");
    }
}

std::string pixel_format(CodecId codec, int bit_depth, std::size_t planes)
{
    if (planes != 1 && planes != 3) {
        throw ConfigError("frames must have 1 or 3 planes, got " + std::to_string(planes));
    }
    const CodecConfig probe{codec, {}, bit_depth};
    check_supported(probe);
    if (planes == 1) {
        if (!probe_capabilities(codec).monochrome) {
            throw ConfigError(std::string(codec_name(codec)) + " has no monochrome pixel format");
        }
        return bit_depth == 8 ? "gray" : "gray" + std::to_string(bit_depth) + "le";
    }
    // x264 and 8-bit ffv1 take no planar RGB input; their 4:4:4 YUV layouts
    // carry three independent full-resolution planes just the same.
    const bool yuv = codec == CodecId::libx264 || (codec == CodecId::ffv1 && bit_depth == 8);
    if (yuv) {
        return bit_depth == 8 ? "yuv444p" : "yuv444p" + std::to_string(bit_depth) + "le";
    }
    return bit_depth == 8 ? "gbrp" : "gbrp" + std::to_string(bit_depth) + "le";
}

std::span<const std::string_view> preset_names()
{
    return k_presets;
}

std::optional<std::size_t> preset_index(std::string_view name)
{
    const auto it = std::find(k_presets.begin(), k_presets.end(), name);
    if (it == k_presets.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - k_presets.begin());
}

CodecConfig resolve_preset(CodecId codec, std::string_view preset, bool era5_mode, int bit_depth)
{
    const auto index = preset_index(preset);
    if (!index) {
        throw ConfigError("unknown quality preset '" + std::string(preset) +
                          "' (expected Best, Very high, High, Medium, Low or Very low)");
    }
    const std::size_t i = *index;
    CodecOptions options;
    switch (codec) {
    case CodecId::libx265: {
        static constexpr std::array<std::string_view, 6> crf = {"51", "51", "1", "7", "16", "27"};
        options = {{"c:v", "libx265"}, {"preset", "medium"}, {"tune", "psnr"}, {"crf", std::string(crf[i])}};
        if (i == 0) {
            options.emplace_back("x265-params", "lossless=1");
        } else if (i == 1) {
            options.emplace_back("x265-params", "qpmin=0:qpmax=0.01");
        }
        break;
    }
    case CodecId::vp9: {
        static constexpr std::array<std::string_view, 6> crf = {"0", "0", "5", "12", "20", "30"};
        options = {{"c:v", "vp9"}, {"crf", std::string(crf[i])}};
        if (i == 0) {
            options.emplace_back("lossless", "1");
            break;
        }
        options.emplace_back("arnr-strength", "2");
        if (i == 1) {
            options.emplace_back("qmin", "0");
            options.emplace_back("qmax", "0.01");
        }
        options.emplace_back("lag-in-frames", "25");
        options.emplace_back("arnr-maxframes", "7");
        break;
    }
    case CodecId::jp2openjpeg: {
        static constexpr std::array<std::string_view, 6> quality = {"100", "80", "35", "15", "5", "1"};
        static constexpr std::array<std::string_view, 6> era5 = {"100", "25", "5", "1", "0.25", "0.05"};
        options = {{"codec", "JP2OpenJPEG"},
                   {"QUALITY", std::string(era5_mode ? era5[i] : quality[i])},
                   {"REVERSIBLE", i == 0 ? "YES" : "NO"},
                   {"YCBCR420", "NO"}};
        break;
    }
    case CodecId::ffv1:
        options = {{"c:v", "ffv1"}};
        break;
    case CodecId::libx264:
    case CodecId::hevc_nvenc:
        throw ConfigError("no quality presets are defined for " + std::string(codec_name(codec)) +
                          "; pass its options explicitly");
    }
    return CodecConfig{codec, std::move(options), bit_depth};
}

} // namespace cubevid
