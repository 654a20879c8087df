#pragma once

#include "cubevid/codec.hpp"
#include "cubevid/cube.hpp"
#include "cubevid/transform.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cubevid {

inline constexpr const char* k_manifest_version = "1.0";
inline constexpr const char* k_manifest_file = "manifest.json";
inline constexpr const char* k_residual_file = "x.nc";

/// One encoded video (or, for JP2OpenJPEG, one directory of frames).
struct VideoEntry {
    std::string file;
    std::size_t index = 1;
    std::array<std::size_t, 3> members{}; // coded-channel index per plane slot
    std::size_t n_real = 0;
    std::size_t planes = 3;               // 1 when a monochrome format was used
    std::string pixel_format;
    CodecConfig codec;
    std::uint64_t bytes = 0;
    std::string quality;                  // preset label, informational

    friend bool operator==(const VideoEntry&, const VideoEntry&) = default;
};

/// What is needed to rebuild one claimed variable.
struct VariableEntry {
    std::string name;
    std::vector<std::string> axes;
    Shape shape;
    DType dtype = DType::float64;
    Attributes attrs;

    friend bool operator==(const VariableEntry&, const VariableEntry&) = default;
};

struct FillEntry {
    std::string policy = "forward_fill_time";
    double leading_fill = 0.0;
    std::map<std::string, std::string> masks; // variable -> mask variable in the residual store
    std::uint64_t synthesized = 0;           // cells filled across the stream

    friend bool operator==(const FillEntry&, const FillEntry&) = default;
};

struct StreamEntry {
    std::string name;
    std::vector<VariableEntry> variables;
    AxisOrder axes;
    std::vector<ChannelSource> channels; // input channels in stacking order
    std::size_t frames = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    int bit_depth = 8;
    QuantParams quant;                // over coded channels (PCs when PCA is on)
    std::optional<PcaModel> pca;
    FillEntry fill;
    bool clamp = false;
    std::vector<VideoEntry> videos;

    std::uint64_t bytes() const;
    std::size_t coded_channels() const { return quant.channels.size(); }

    friend bool operator==(const StreamEntry&, const StreamEntry&) = default;
};

struct Manifest {
    std::string format_version = k_manifest_version;
    std::string residual = k_residual_file;
    Attributes attrs;
    std::vector<StreamEntry> streams;

    friend bool operator==(const Manifest&, const Manifest&) = default;
};

std::string manifest_to_json(const Manifest& manifest);

/// Throws FormatError on malformed documents and on an unknown major version.
Manifest manifest_from_json(const std::string& text);

void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest read_manifest(const std::filesystem::path& path);

} // namespace cubevid
