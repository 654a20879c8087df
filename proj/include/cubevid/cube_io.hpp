#pragma once

#include "cubevid/cube.hpp"

#include <filesystem>

namespace cubevid {

/// NetCDF-4 (HDF5-based) store. Every dimension is written as an HDF5
/// dimension scale, numeric variables are chunked and deflate-compressed.
/// Classic (CDF-1/2/5) files are not supported.
struct NetcdfWriteOptions {
    int deflate_level = 4; // 0 disables compression
    bool shuffle = true;
};

void write_netcdf(const DataCube& cube, const std::filesystem::path& path, const NetcdfWriteOptions& options = {});
DataCube read_netcdf(const std::filesystem::path& path);

/// Raw test format: "CUBERAW1", a little-endian u64 header length, a JSON
/// header, then each variable's samples in its storage dtype. See
/// docs/formats.md.
void write_raw_cube(const DataCube& cube, const std::filesystem::path& path);
DataCube read_raw_cube(const std::filesystem::path& path);

/// Dispatch on the extension: ".nc" → NetCDF-4, ".cube" → raw format.
DataCube read_cube(const std::filesystem::path& path);
void write_cube(const DataCube& cube, const std::filesystem::path& path);

} // namespace cubevid
