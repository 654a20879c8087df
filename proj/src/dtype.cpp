#include "cubevid/tensor.hpp"

#include <array>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

namespace cubevid {

namespace {

struct DTypeInfo {
    DType dtype;
    std::string_view name;
    std::size_t size;
    bool integer;
    double lowest;
    double highest;
};

constexpr std::array<DTypeInfo, 10> k_dtypes{{
    {DType::int8, "int8", 1, true, -128.0, 127.0},
    {DType::uint8, "uint8", 1, true, 0.0, 255.0},
    {DType::int16, "int16", 2, true, -32768.0, 32767.0},
    {DType::uint16, "uint16", 2, true, 0.0, 65535.0},
    {DType::int32, "int32", 4, true, -2147483648.0, 2147483647.0},
    {DType::uint32, "uint32", 4, true, 0.0, 4294967295.0},
    // 64-bit integers are only representable while |v| <= 2^53.
    {DType::int64, "int64", 8, true, -9007199254740992.0, 9007199254740992.0},
    {DType::uint64, "uint64", 8, true, 0.0, 9007199254740992.0},
    {DType::float32, "float32", 4, false, -std::numeric_limits<float>::max(),
     std::numeric_limits<float>::max()},
    {DType::float64, "float64", 8, false, -std::numeric_limits<double>::max(),
     std::numeric_limits<double>::max()},
}};

const DTypeInfo& info(DType dtype)
{
    for (const auto& entry : k_dtypes) {
        if (entry.dtype == dtype) {
            return entry;
        }
    }
    throw ConfigError("unknown dtype");
}

} // namespace

std::string_view dtype_name(DType dtype) { return info(dtype).name; }

DType dtype_from_name(std::string_view name)
{
    for (const auto& entry : k_dtypes) {
        if (entry.name == name) {
            return entry.dtype;
        }
    }
    throw FormatError("unknown dtype '" + std::string(name) + "'");
}

bool is_integer(DType dtype) { return info(dtype).integer; }
std::size_t dtype_size(DType dtype) { return info(dtype).size; }
double dtype_lowest(DType dtype) { return info(dtype).lowest; }
double dtype_highest(DType dtype) { return info(dtype).highest; }

double coerce_to_dtype(double value, DType dtype)
{
    if (std::isnan(value)) {
        return value;
    }
    if (is_integer(dtype)) {
        const double rounded = std::round(value);
        return std::clamp(rounded, dtype_lowest(dtype), dtype_highest(dtype));
    }
    if (dtype == DType::float32) {
        return static_cast<double>(static_cast<float>(value));
    }
    return value;
}

std::string shape_to_string(const Shape& shape)
{
    std::string out = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) {
            out += ", ";
        }
        out += std::to_string(shape[i]);
    }
    return out + ")";
}

bool bitwise_equal(const NdArray& a, const NdArray& b)
{
    if (a.shape() != b.shape()) {
        return false;
    }
    const auto av = a.values();
    const auto bv = b.values();
    return av.empty() || std::memcmp(av.data(), bv.data(), av.size_bytes()) == 0;
}

} // namespace cubevid
