#include "cubevid/cube_io.hpp"

#include "json_util.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace cubevid {

static_assert(std::endian::native == std::endian::little, "raw cube files are little-endian");

namespace {

constexpr char k_magic[8] = {'C', 'U', 'B', 'E', 'R', 'A', 'W', '1'};

template <typename T>
void append_as(std::vector<char>& out, std::span<const double> values)
{
    const std::size_t start = out.size();
    out.resize(start + values.size() * sizeof(T));
    for (std::size_t i = 0; i < values.size(); ++i) {
        const T v = static_cast<T>(values[i]);
        std::memcpy(out.data() + start + i * sizeof(T), &v, sizeof(T));
    }
}

void append_values(std::vector<char>& out, DType dtype, std::span<const double> values)
{
    switch (dtype) {
    case DType::int8: append_as<std::int8_t>(out, values); break;
    case DType::uint8: append_as<std::uint8_t>(out, values); break;
    case DType::int16: append_as<std::int16_t>(out, values); break;
    case DType::uint16: append_as<std::uint16_t>(out, values); break;
    case DType::int32: append_as<std::int32_t>(out, values); break;
    case DType::uint32: append_as<std::uint32_t>(out, values); break;
    case DType::int64: append_as<std::int64_t>(out, values); break;
    case DType::uint64: append_as<std::uint64_t>(out, values); break;
    case DType::float32: append_as<float>(out, values); break;
    case DType::float64: append_as<double>(out, values); break;
    }
}

template <typename T>
void decode_as(const char* src, std::span<double> out)
{
    for (std::size_t i = 0; i < out.size(); ++i) {
        T v;
        std::memcpy(&v, src + i * sizeof(T), sizeof(T));
        out[i] = static_cast<double>(v);
    }
}

void decode_values(const char* src, DType dtype, std::span<double> out)
{
    switch (dtype) {
    case DType::int8: decode_as<std::int8_t>(src, out); break;
    case DType::uint8: decode_as<std::uint8_t>(src, out); break;
    case DType::int16: decode_as<std::int16_t>(src, out); break;
    case DType::uint16: decode_as<std::uint16_t>(src, out); break;
    case DType::int32: decode_as<std::int32_t>(src, out); break;
    case DType::uint32: decode_as<std::uint32_t>(src, out); break;
    case DType::int64: decode_as<std::int64_t>(src, out); break;
    case DType::uint64: decode_as<std::uint64_t>(src, out); break;
    case DType::float32: decode_as<float>(src, out); break;
    case DType::float64: decode_as<double>(src, out); break;
    }
}

} // namespace

void write_raw_cube(const DataCube& cube, const std::filesystem::path& path)
{
    using detail::json;
    json header;
    header["dims"] = json::object();
    for (const auto& [name, len] : cube.dims()) {
        header["dims"][name] = len;
    }
    header["coords"] = json::object();
    for (const auto& [name, coord] : cube.coords()) {
        header["coords"][name] = detail::coord_to_json(coord);
    }
    header["attrs"] = detail::attrs_to_json(cube.attrs());
    header["variables"] = json::array();

    std::vector<char> payload;
    for (const auto& [name, var] : cube.variables()) {
        const std::size_t offset = payload.size();
        append_values(payload, var.dtype, var.values.values());
        header["variables"].push_back({{"name", name},
                                       {"dtype", std::string(dtype_name(var.dtype))},
                                       {"axes", var.axes},
                                       {"shape", var.values.shape()},
                                       {"offset", offset},
                                       {"nbytes", payload.size() - offset},
                                       {"attrs", detail::attrs_to_json(var.attrs)}});
    }

    const std::string text = header.dump();
    const std::uint64_t len = text.size();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    out.write(k_magic, sizeof k_magic);
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) {
        throw Error("short write to " + path.string());
    }
}

DataCube read_raw_cube(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw NotFoundError("cannot open raw cube " + path.string());
    }
    char magic[8];
    std::uint64_t len = 0;
    in.read(magic, sizeof magic);
    in.read(reinterpret_cast<char*>(&len), sizeof len);
    if (!in || std::memcmp(magic, k_magic, sizeof magic) != 0) {
        throw FormatError(path.string() + " is not a raw cube file");
    }
    const auto file_size = std::filesystem::file_size(path);
    if (len > file_size) {
        throw FormatError("raw cube header length exceeds file size");
    }
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    std::vector<char> payload(file_size - sizeof magic - sizeof len - len);
    in.read(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!in) {
        throw FormatError("truncated raw cube " + path.string());
    }

    DataCube cube;
    try {
        const auto header = detail::json::parse(text);
        for (const auto& [name, dlen] : header.at("dims").items()) {
            cube.declare_dim(name, dlen.get<std::size_t>());
        }
        for (const auto& [name, c] : header.at("coords").items()) {
            cube.set_coord(name, detail::coord_from_json(c));
        }
        cube.attrs() = detail::attrs_from_json(header.at("attrs"));
        for (const auto& v : header.at("variables")) {
            Variable var;
            var.dtype = dtype_from_name(v.at("dtype").get<std::string>());
            var.axes = v.at("axes").get<std::vector<std::string>>();
            const auto shape = v.at("shape").get<Shape>();
            const auto offset = v.at("offset").get<std::size_t>();
            const auto nbytes = v.at("nbytes").get<std::size_t>();
            if (nbytes != shape_size(shape) * dtype_size(var.dtype) || offset + nbytes > payload.size()) {
                throw FormatError("variable '" + v.at("name").get<std::string>() + "' payload out of bounds");
            }
            var.values = NdArray(shape);
            decode_values(payload.data() + offset, var.dtype, var.values.values());
            var.attrs = detail::attrs_from_json(v.value("attrs", detail::json::object()));
            cube.add_variable(v.at("name").get<std::string>(), std::move(var));
        }
    } catch (const detail::json::exception& e) {
        throw FormatError("malformed raw cube header in " + path.string() + ": " + e.what());
    }
    return cube;
}

} // namespace cubevid
