#include "cubevid/cube_io.hpp"

namespace cubevid {

namespace {

enum class StoreKind { netcdf, raw };

StoreKind kind_of(const std::filesystem::path& path)
{
    const auto ext = path.extension().string();
    if (ext == ".nc" || ext == ".nc4") {
        return StoreKind::netcdf;
    }
    if (ext == ".cube") {
        return StoreKind::raw;
    }
    throw ConfigError("cannot infer cube format from '" + path.string() + "' (expected .nc or .cube)");
}

} // namespace

DataCube read_cube(const std::filesystem::path& path)
{
    return kind_of(path) == StoreKind::netcdf ? read_netcdf(path) : read_raw_cube(path);
}

void write_cube(const DataCube& cube, const std::filesystem::path& path)
{
    if (kind_of(path) == StoreKind::netcdf) {
        write_netcdf(cube, path);
    } else {
        write_raw_cube(cube, path);
    }
}

} // namespace cubevid
