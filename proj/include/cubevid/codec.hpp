#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cubevid {

enum class CodecId : std::uint8_t {
    libx264,
    libx265,
    vp9,
    ffv1,
    hevc_nvenc,
    jp2openjpeg,
};

std::string_view codec_name(CodecId codec);

/// Accepts the canonical names plus the encoder alias "libvpx-vp9".
CodecId codec_from_name(std::string_view name);

/// Ordered encoder options. Keys carry no leading dash; values are passed
/// through verbatim.
using CodecOptions = std::vector<std::pair<std::string, std::string>>;

const std::string* find_option(const CodecOptions& options, std::string_view key);

struct CodecConfig {
    CodecId codec = CodecId::libx265;
    CodecOptions options;
    int bit_depth = 8;

    /// Derived from the options: x265 "lossless=1", vp9 "lossless 1",
    /// x264 "qp 0", JP2 "REVERSIBLE YES" at QUALITY 100; ffv1 always.
    bool lossless() const;
    bool per_frame() const { return codec == CodecId::jp2openjpeg; }

    friend bool operator==(const CodecConfig&, const CodecConfig&) = default;
};

/// Builds a config from Listing-1 style options; the codec is read from the
/// "c:v" key (video codecs) or the "codec" key (JP2OpenJPEG).
CodecConfig make_codec_config(CodecOptions options, int bit_depth);

struct CodecCapabilities {
    std::vector<int> bit_depths;
    std::size_t max_channels = 3;
    bool lossless_supported = true;
    bool per_frame = false;
    bool monochrome = false; // has a single-plane pixel format at every bit depth

    bool supports(int bit_depth) const;
};

CodecCapabilities probe_capabilities(CodecId codec);

/// Throws ConfigError when the config's bit depth is outside the codec's set.
void check_supported(const CodecConfig& config);

/// Raw pixel format used on both sides of the encoder pipe: full-range
/// planar, no chroma subsampling, `planes` is 3 or 1.
std::string pixel_format(CodecId codec, int bit_depth, std::size_t planes);

/// The quality ladder, best first.
std::span<const std::string_view> preset_names();
std::optional<std::size_t> preset_index(std::string_view name);

/// Option set of a named quality preset. ffv1 is always lossless and
/// resolves every preset to its bare codec selection. `era5_mode` switches the
/// JP2OpenJPEG QUALITY ladder to 100, 25, 5, 1, 0.25, 0.05.
CodecConfig resolve_preset(CodecId codec, std::string_view preset, bool era5_mode = false, int bit_depth = 8);

} // namespace cubevid
