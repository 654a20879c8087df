#pragma once

#include "cubevid/cube.hpp"
#include "cubevid/cube_io.hpp"
#include "cubevid/manifest.hpp"
#include "cubevid/mapping.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace cubevid {

struct CompressOptions {
    NetcdfWriteOptions residual;
    bool overwrite = false; // replace an existing output directory
    bool write_tags = true; // mirror basic stream facts into the video tags
};

struct StreamTiming {
    std::string stream;
    double child_seconds = 0.0; // summed child-process wall time (t_c or t_d)
    double wall_seconds = 0.0;   // from first encode start to last finish
};

struct CompressResult {
    Manifest manifest;
    std::vector<StreamTiming> timings; // same order as manifest.streams
    std::uint64_t residual_bytes = 0;
    double wall_seconds = 0.0;
};

/// Cube -> directory of videos + x.nc + manifest.json. The directory is built
/// under a temporary sibling name and renamed into place only after every
/// stream succeeded.
CompressResult compress_cube(const DataCube& cube, const std::vector<MappingRule>& rules,
                             const std::filesystem::path& out_dir, const CompressOptions& options = {});

struct DecompressResult {
    DataCube cube;
    std::vector<StreamTiming> timings; // decode times per stream
    double wall_seconds = 0.0;
};

/// Directory -> cube. Uses only the manifest and the files it lists.
DecompressResult decompress_cube_timed(const std::filesystem::path& dir);
DataCube decompress_cube(const std::filesystem::path& dir);

/// Per-stream summary: videos, codecs, bit depths, bytes and bpppb.
std::string inspect(const std::filesystem::path& dir);

/// The cube as the container stores it: every claimed variable forward-filled
/// with its stream's leading fill value. This is what a lossless round trip
/// reproduces (apart from the added validity masks).
DataCube filled_original(const DataCube& cube, const Manifest& manifest);

/// Name of the mask variable recording the observed cells of `variable`.
std::string mask_name(const std::string& variable);

} // namespace cubevid
