#pragma once

// JSON encodings shared by the manifest and the raw cube header.

#include "cubevid/cube.hpp"

#include <json.hpp>

#include <cmath>
#include <limits>

namespace cubevid::detail {

using json = nlohmann::json;

// JSON has no NaN/Inf; those are spelled {"float": "nan" | "inf" | "-inf"}.
inline json double_to_json(double v)
{
    if (std::isnan(v)) {
        return json{{"float", "nan"}};
    }
    if (std::isinf(v)) {
        return json{{"float", v > 0 ? "inf" : "-inf"}};
    }
    return json(v);
}

inline double double_from_json(const json& j)
{
    if (j.is_number()) {
        return j.get<double>();
    }
    if (j.is_object() && j.contains("float")) {
        const auto s = j.at("float").get<std::string>();
        if (s == "nan") {
            return std::numeric_limits<double>::quiet_NaN();
        }
        if (s == "inf") {
            return std::numeric_limits<double>::infinity();
        }
        if (s == "-inf") {
            return -std::numeric_limits<double>::infinity();
        }
    }
    throw FormatError("expected a number, got " + j.dump());
}

inline json doubles_to_json(std::span<const double> values)
{
    json out = json::array();
    for (const double v : values) {
        out.push_back(double_to_json(v));
    }
    return out;
}

inline std::vector<double> doubles_from_json(const json& j)
{
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& item : j) {
        out.push_back(double_from_json(item));
    }
    return out;
}

// Attribute values: {"string": s} | {"int": i} | {"double": d} | {"doubles": [...]}.
inline json attrs_to_json(const Attributes& attrs)
{
    json out = json::object();
    for (const auto& [name, value] : attrs) {
        std::visit(
            [&](const auto& v) {
                using T = std::decay_t<decltype(v)>;
                if constexpr (std::is_same_v<T, std::string>) {
                    out[name] = json{{"string", v}};
                } else if constexpr (std::is_same_v<T, std::int64_t>) {
                    out[name] = json{{"int", v}};
                } else if constexpr (std::is_same_v<T, double>) {
                    out[name] = json{{"double", double_to_json(v)}};
                } else {
                    out[name] = json{{"doubles", doubles_to_json(v)}};
                }
            },
            value);
    }
    return out;
}

inline Attributes attrs_from_json(const json& j)
{
    Attributes attrs;
    for (const auto& [name, value] : j.items()) {
        if (value.contains("string")) {
            attrs[name] = value.at("string").get<std::string>();
        } else if (value.contains("int")) {
            attrs[name] = value.at("int").get<std::int64_t>();
        } else if (value.contains("double")) {
            attrs[name] = double_from_json(value.at("double"));
        } else if (value.contains("doubles")) {
            attrs[name] = doubles_from_json(value.at("doubles"));
        } else {
            throw FormatError("attribute '" + name + "' has an unknown encoding");
        }
    }
    return attrs;
}

inline json coord_to_json(const Coordinate& coord)
{
    json out;
    if (coord.is_labels()) {
        out["labels"] = std::get<std::vector<std::string>>(coord.values);
    } else {
        out["dtype"] = std::string(dtype_name(coord.dtype));
        out["values"] = doubles_to_json(std::get<std::vector<double>>(coord.values));
    }
    out["attrs"] = attrs_to_json(coord.attrs);
    return out;
}

inline Coordinate coord_from_json(const json& j)
{
    Coordinate coord;
    if (j.contains("labels")) {
        coord.values = j.at("labels").get<std::vector<std::string>>();
    } else {
        coord.dtype = dtype_from_name(j.at("dtype").get<std::string>());
        coord.values = doubles_from_json(j.at("values"));
    }
    coord.attrs = attrs_from_json(j.value("attrs", json::object()));
    return coord;
}

} // namespace cubevid::detail
