#include "cubevid/cube_io.hpp"

#include <hdf5.h>
#include <hdf5_hl.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <mutex>
#include <set>

namespace cubevid {

namespace {

// netCDF-4 marks dimensions without a coordinate variable with this NAME prefix.
constexpr std::string_view k_pure_dim_prefix = "This is a netCDF dimension but not a netCDF variable.";

constexpr std::array<std::string_view, 10> k_reserved_attrs{
    "CLASS",        "NAME",         "REFERENCE_LIST",    "DIMENSION_LIST", "_Netcdf4Dimid",
    "_Netcdf4Coordinates", "_NCProperties", "_nc3_strict", "_SuperblockVersion", "_IsNetcdf4"};

// The HDF5 library keeps global state; serialize all access from this module.
std::mutex& hdf5_mutex()
{
    static std::mutex m;
    return m;
}

void silence_hdf5()
{
    static std::once_flag once;
    std::call_once(once, [] { H5Eset_auto2(H5E_DEFAULT, nullptr, nullptr); });
}

class Handle {
public:
    using Closer = herr_t (*)(hid_t);
    Handle() = default;
    Handle(hid_t id, Closer closer) : id_(id), closer_(closer) {}
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    Handle(Handle&& other) noexcept : id_(std::exchange(other.id_, H5I_INVALID_HID)), closer_(other.closer_) {}
    Handle& operator=(Handle&& other) noexcept
    {
        if (this != &other) {
            reset();
            id_ = std::exchange(other.id_, H5I_INVALID_HID);
            closer_ = other.closer_;
        }
        return *this;
    }
    ~Handle() { reset(); }

    hid_t get() const noexcept { return id_; }
    explicit operator bool() const noexcept { return id_ >= 0; }

private:
    void reset()
    {
        if (id_ >= 0 && closer_) {
            closer_(id_);
        }
        id_ = H5I_INVALID_HID;
    }

    hid_t id_ = H5I_INVALID_HID;
    Closer closer_ = nullptr;
};

hid_t checked(hid_t id, const std::string& what)
{
    if (id < 0) {
        throw FormatError("HDF5 call failed: " + what);
    }
    return id;
}

void checked(herr_t status, const std::string& what, int)
{
    if (status < 0) {
        throw FormatError("HDF5 call failed: " + what);
    }
}

hid_t file_type_for(DType dtype)
{
    switch (dtype) {
    case DType::int8: return H5T_STD_I8LE;
    case DType::uint8: return H5T_STD_U8LE;
    case DType::int16: return H5T_STD_I16LE;
    case DType::uint16: return H5T_STD_U16LE;
    case DType::int32: return H5T_STD_I32LE;
    case DType::uint32: return H5T_STD_U32LE;
    case DType::int64: return H5T_STD_I64LE;
    case DType::uint64: return H5T_STD_U64LE;
    case DType::float32: return H5T_IEEE_F32LE;
    case DType::float64: return H5T_IEEE_F64LE;
    }
    throw FormatError("unsupported dtype");
}

DType dtype_for(hid_t type)
{
    const auto cls = H5Tget_class(type);
    const auto size = H5Tget_size(type);
    if (cls == H5T_FLOAT) {
        if (size == 4) {
            return DType::float32;
        }
        if (size == 8) {
            return DType::float64;
        }
    } else if (cls == H5T_INTEGER) {
        const bool is_signed = H5Tget_sign(type) == H5T_SGN_2;
        switch (size) {
        case 1: return is_signed ? DType::int8 : DType::uint8;
        case 2: return is_signed ? DType::int16 : DType::uint16;
        case 4: return is_signed ? DType::int32 : DType::uint32;
        case 8: return is_signed ? DType::int64 : DType::uint64;
        default: break;
        }
    }
    throw FormatError("unsupported HDF5 datatype (class " + std::to_string(static_cast<int>(cls)) + ", size " +
                      std::to_string(size) + ")");
}

// -- attributes ------------------------------------------------------------

void write_attr(hid_t obj, const std::string& name, const AttrValue& value)
{
    if (const auto* s = std::get_if<std::string>(&value)) {
        Handle type(checked(H5Tcopy(H5T_C_S1), "copy string type"), H5Tclose);
        checked(H5Tset_size(type.get(), std::max<std::size_t>(s->size(), 1)), "set string size", 0);
        checked(H5Tset_strpad(type.get(), H5T_STR_NULLTERM), "set strpad", 0);
        checked(H5Tset_cset(type.get(), H5T_CSET_UTF8), "set cset", 0);
        Handle space(checked(H5Screate(H5S_SCALAR), "scalar space"), H5Sclose);
        Handle attr(checked(H5Acreate2(obj, name.c_str(), type.get(), space.get(), H5P_DEFAULT, H5P_DEFAULT),
                            "create attribute " + name),
                    H5Aclose);
        std::string buf = *s;
        buf.resize(std::max<std::size_t>(s->size(), 1), '\0');
        checked(H5Awrite(attr.get(), type.get(), buf.data()), "write attribute " + name, 0);
        return;
    }
    hid_t file_type = H5T_IEEE_F64LE;
    hid_t mem_type = H5T_NATIVE_DOUBLE;
    std::vector<double> doubles;
    std::int64_t integer = 0;
    hsize_t n = 1;
    const void* data = nullptr;
    if (const auto* i = std::get_if<std::int64_t>(&value)) {
        file_type = H5T_STD_I64LE;
        mem_type = H5T_NATIVE_INT64;
        integer = *i;
        data = &integer;
    } else if (const auto* d = std::get_if<double>(&value)) {
        doubles = {*d};
        data = doubles.data();
    } else {
        doubles = std::get<std::vector<double>>(value);
        n = doubles.size();
        data = doubles.data();
    }
    Handle space(checked(H5Screate_simple(1, &n, nullptr), "attribute space"), H5Sclose);
    Handle attr(checked(H5Acreate2(obj, name.c_str(), file_type, space.get(), H5P_DEFAULT, H5P_DEFAULT),
                        "create attribute " + name),
                H5Aclose);
    if (n > 0) {
        checked(H5Awrite(attr.get(), mem_type, data), "write attribute " + name, 0);
    }
}

void write_attrs(hid_t obj, const Attributes& attrs)
{
    for (const auto& [name, value] : attrs) {
        if (std::find(k_reserved_attrs.begin(), k_reserved_attrs.end(), name) != k_reserved_attrs.end()) {
            throw FormatError("attribute name '" + name + "' is reserved by the NetCDF-4 format");
        }
        write_attr(obj, name, value);
    }
}

std::string read_string_attr(hid_t attr, hid_t type)
{
    Handle space(checked(H5Aget_space(attr), "attribute space"), H5Sclose);
    const auto npoints = H5Sget_simple_extent_npoints(space.get());
    if (H5Tis_variable_str(type) > 0) {
        Handle mem(checked(H5Tcopy(H5T_C_S1), "copy"), H5Tclose);
        H5Tset_size(mem.get(), H5T_VARIABLE);
        H5Tset_cset(mem.get(), H5Tget_cset(type)); // HDF5 will not convert between charsets
        std::vector<char*> ptrs(static_cast<std::size_t>(std::max<hssize_t>(npoints, 1)), nullptr);
        checked(H5Aread(attr, mem.get(), ptrs.data()), "read vlen string attribute", 0);
        std::string out = ptrs[0] ? ptrs[0] : "";
        H5Dvlen_reclaim(mem.get(), space.get(), H5P_DEFAULT, ptrs.data());
        return out;
    }
    const auto size = H5Tget_size(type);
    std::string buf(size * static_cast<std::size_t>(std::max<hssize_t>(npoints, 1)), '\0');
    Handle mem(checked(H5Tcopy(H5T_C_S1), "copy"), H5Tclose);
    H5Tset_size(mem.get(), size);
    H5Tset_cset(mem.get(), H5Tget_cset(type));
    checked(H5Aread(attr, mem.get(), buf.data()), "read string attribute", 0);
    buf.resize(size);
    buf.erase(std::find(buf.begin(), buf.end(), '\0'), buf.end());
    return buf;
}

struct AttrCollector {
    Attributes* attrs;
};

herr_t collect_attr(hid_t loc, const char* name, const H5A_info_t*, void* op)
{
    auto* out = static_cast<AttrCollector*>(op)->attrs;
    if (std::find(k_reserved_attrs.begin(), k_reserved_attrs.end(), std::string_view(name)) !=
        k_reserved_attrs.end()) {
        return 0;
    }
    Handle attr(H5Aopen(loc, name, H5P_DEFAULT), H5Aclose);
    if (!attr) {
        return -1;
    }
    Handle type(H5Aget_type(attr.get()), H5Tclose);
    const auto cls = H5Tget_class(type.get());
    if (cls == H5T_STRING) {
        (*out)[name] = read_string_attr(attr.get(), type.get());
        return 0;
    }
    if (cls != H5T_INTEGER && cls != H5T_FLOAT) {
        return 0; // compound/enum/reference attributes are not represented
    }
    Handle space(H5Aget_space(attr.get()), H5Sclose);
    const auto n = static_cast<std::size_t>(H5Sget_simple_extent_npoints(space.get()));
    if (cls == H5T_INTEGER && n == 1) {
        std::int64_t value = 0;
        if (H5Aread(attr.get(), H5T_NATIVE_INT64, &value) < 0) {
            return -1;
        }
        (*out)[name] = value;
        return 0;
    }
    std::vector<double> values(n);
    if (n > 0 && H5Aread(attr.get(), H5T_NATIVE_DOUBLE, values.data()) < 0) {
        return -1;
    }
    if (n == 1) {
        (*out)[name] = values[0];
    } else {
        (*out)[name] = std::move(values);
    }
    return 0;
}

Attributes read_attrs(hid_t obj)
{
    Attributes attrs;
    AttrCollector collector{&attrs};
    hsize_t idx = 0;
    if (H5Aiterate2(obj, H5_INDEX_CRT_ORDER, H5_ITER_INC, &idx, collect_attr, &collector) < 0) {
        attrs.clear();
        idx = 0;
        checked(H5Aiterate2(obj, H5_INDEX_NAME, H5_ITER_INC, &idx, collect_attr, &collector), "iterate attributes",
                0);
    }
    return attrs;
}

// -- datasets --------------------------------------------------------------

std::vector<hsize_t> chunk_shape(const Shape& shape, std::size_t elem_size)
{
    constexpr std::size_t target = std::size_t{1} << 22; // 4 MiB
    std::vector<hsize_t> chunk(shape.begin(), shape.end());
    std::size_t bytes = shape_size(shape) * elem_size;
    for (std::size_t i = 0; i < chunk.size() && bytes > target; ++i) {
        while (chunk[i] > 1 && bytes > target) {
            chunk[i] = (chunk[i] + 1) / 2;
            bytes = elem_size;
            for (const auto c : chunk) {
                bytes *= static_cast<std::size_t>(c);
            }
        }
    }
    return chunk;
}

Handle create_dataset(hid_t file, const std::string& name, hid_t file_type, const Shape& shape, std::size_t elem_size,
                      const NetcdfWriteOptions& options, bool compress)
{
    std::vector<hsize_t> dims(shape.begin(), shape.end());
    Handle space(shape.empty() ? H5Screate(H5S_SCALAR)
                               : H5Screate_simple(static_cast<int>(dims.size()), dims.data(), nullptr),
                 H5Sclose);
    checked(space.get(), "dataspace for " + name);
    Handle dcpl(checked(H5Pcreate(H5P_DATASET_CREATE), "dcpl"), H5Pclose);
    H5Pset_obj_track_times(dcpl.get(), 0);
    H5Pset_attr_creation_order(dcpl.get(), H5P_CRT_ORDER_TRACKED | H5P_CRT_ORDER_INDEXED);
    const bool chunkable = !shape.empty() && shape_size(shape) > 0;
    if (compress && chunkable && options.deflate_level > 0) {
        const auto chunk = chunk_shape(shape, elem_size);
        checked(H5Pset_chunk(dcpl.get(), static_cast<int>(chunk.size()), chunk.data()), "set chunk", 0);
        if (options.shuffle) {
            checked(H5Pset_shuffle(dcpl.get()), "set shuffle", 0);
        }
        checked(H5Pset_deflate(dcpl.get(), static_cast<unsigned>(options.deflate_level)), "set deflate", 0);
    }
    return Handle(checked(H5Dcreate2(file, name.c_str(), file_type, space.get(), H5P_DEFAULT, dcpl.get(), H5P_DEFAULT),
                          "create dataset " + name),
                  H5Dclose);
}

template <typename T>
std::vector<T> cast_values(std::span<const double> values)
{
    std::vector<T> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(), [](double v) { return static_cast<T>(v); });
    return out;
}

void write_numeric(hid_t ds, DType dtype, std::span<const double> values)
{
    if (values.empty()) {
        return;
    }
    switch (dtype) {
    case DType::int8: {
        auto buf = cast_values<std::int8_t>(values);
        checked(H5Dwrite(ds, H5T_NATIVE_INT8, H5S_ALL, H5S_ALL, H5P_DEFAULT, buf.data()), "write", 0);
        return;
    }
    case DType::uint8: {
        auto buf = cast_values<std::uint8_t>(values);
        checked(H5Dwrite(ds, H5T_NATIVE_UINT8, H5S_ALL, H5S_ALL, H5P_DEFAULT, buf.data()), "write", 0);
        return;
    }
    case DType::int16: {
        auto buf = cast_values<std::int16_t>(values);
        checked(H5Dwrite(ds, H5T_NATIVE_INT16, H5S_ALL, H5S_ALL, H5P_DEFAULT, buf.data()), "write", 0);
        return;
    }
    case DType::uint16: {
        auto buf = cast_values<std::uint16_t>(values);
        checked(H5Dwrite(ds, H5T_NATIVE_UINT16, H5S_ALL, H5S_ALL, H5P_DEFAULT, buf.data()), "write", 0);
        return;
    }
    case DType::int32: {
        auto buf = cast_values<std::int32_t>(values);
        checked(H5Dwrite(ds, H5T_NATIVE_INT32, H5S_ALL, H5S_ALL, H5P_DEFAULT, buf.data()), "write", 0);
        return;
    }
    case DType::uint32: {
        auto buf = cast_values<std::uint32_t>(values);
        checked(H5Dwrite(ds, H5T_NATIVE_UINT32, H5S_ALL, H5S_ALL, H5P_DEFAULT, buf.data()), "write", 0);
        return;
    }
    case DType::int64: {
        auto buf = cast_values<std::int64_t>(values);
        checked(H5Dwrite(ds, H5T_NATIVE_INT64, H5S_ALL, H5S_ALL, H5P_DEFAULT, buf.data()), "write", 0);
        return;
    }
    case DType::uint64: {
        auto buf = cast_values<std::uint64_t>(values);
        checked(H5Dwrite(ds, H5T_NATIVE_UINT64, H5S_ALL, H5S_ALL, H5P_DEFAULT, buf.data()), "write", 0);
        return;
    }
    case DType::float32: {
        auto buf = cast_values<float>(values);
        checked(H5Dwrite(ds, H5T_NATIVE_FLOAT, H5S_ALL, H5S_ALL, H5P_DEFAULT, buf.data()), "write", 0);
        return;
    }
    case DType::float64:
        checked(H5Dwrite(ds, H5T_NATIVE_DOUBLE, H5S_ALL, H5S_ALL, H5P_DEFAULT, values.data()), "write", 0);
        return;
    }
}

void check_representable(const std::string& name, DType dtype, std::span<const double> values)
{
    if (!is_integer(dtype)) {
        return;
    }
    for (const double v : values) {
        if (!(v >= dtype_lowest(dtype) && v <= dtype_highest(dtype)) || v != std::trunc(v)) {
            throw DataError("variable '" + name + "' holds " + std::to_string(v) + " which is not a valid " +
                            std::string(dtype_name(dtype)));
        }
    }
}

std::vector<double> read_numeric(hid_t ds, DType dtype, std::size_t n)
{
    std::vector<double> out(n);
    if (n == 0) {
        return out;
    }
    if (dtype == DType::int64 || dtype == DType::uint64) {
        std::vector<std::int64_t> raw(n);
        if (dtype == DType::int64) {
            checked(H5Dread(ds, H5T_NATIVE_INT64, H5S_ALL, H5S_ALL, H5P_DEFAULT, raw.data()), "read", 0);
        } else {
            std::vector<std::uint64_t> uraw(n);
            checked(H5Dread(ds, H5T_NATIVE_UINT64, H5S_ALL, H5S_ALL, H5P_DEFAULT, uraw.data()), "read", 0);
            for (std::size_t i = 0; i < n; ++i) {
                if (uraw[i] > (std::uint64_t{1} << 53)) {
                    throw FormatError("uint64 value " + std::to_string(uraw[i]) + " exceeds 2^53");
                }
                raw[i] = static_cast<std::int64_t>(uraw[i]);
            }
        }
        constexpr std::int64_t limit = std::int64_t{1} << 53;
        for (std::size_t i = 0; i < n; ++i) {
            if (raw[i] > limit || raw[i] < -limit) {
                throw FormatError("int64 value " + std::to_string(raw[i]) + " is not exactly representable");
            }
            out[i] = static_cast<double>(raw[i]);
        }
        return out;
    }
    checked(H5Dread(ds, H5T_NATIVE_DOUBLE, H5S_ALL, H5S_ALL, H5P_DEFAULT, out.data()), "read", 0);
    return out;
}

std::vector<std::string> read_strings(hid_t ds, hid_t type, std::size_t n)
{
    std::vector<std::string> out;
    out.reserve(n);
    if (H5Tis_variable_str(type) > 0) {
        Handle mem(checked(H5Tcopy(H5T_C_S1), "copy"), H5Tclose);
        H5Tset_size(mem.get(), H5T_VARIABLE);
        H5Tset_cset(mem.get(), H5Tget_cset(type));
        std::vector<char*> ptrs(n, nullptr);
        if (n) {
            checked(H5Dread(ds, mem.get(), H5S_ALL, H5S_ALL, H5P_DEFAULT, ptrs.data()), "read strings", 0);
        }
        for (auto* p : ptrs) {
            out.emplace_back(p ? p : "");
        }
        Handle space(H5Dget_space(ds), H5Sclose);
        if (n) {
            H5Dvlen_reclaim(mem.get(), space.get(), H5P_DEFAULT, ptrs.data());
        }
        return out;
    }
    const auto size = H5Tget_size(type);
    std::vector<char> buf(size * n);
    Handle mem(checked(H5Tcopy(H5T_C_S1), "copy"), H5Tclose);
    H5Tset_size(mem.get(), size);
    H5Tset_cset(mem.get(), H5Tget_cset(type));
    if (n) {
        checked(H5Dread(ds, mem.get(), H5S_ALL, H5S_ALL, H5P_DEFAULT, buf.data()), "read strings", 0);
    }
    for (std::size_t i = 0; i < n; ++i) {
        std::string s(buf.data() + i * size, size);
        s.erase(std::find(s.begin(), s.end(), '\0'), s.end());
        out.push_back(std::move(s));
    }
    return out;
}

struct NameCollector {
    std::vector<std::string> names;
};

herr_t collect_link(hid_t, const char* name, const H5L_info_t*, void* op)
{
    static_cast<NameCollector*>(op)->names.emplace_back(name);
    return 0;
}

herr_t first_scale_name(hid_t, unsigned, hid_t scale, void* op)
{
    const auto len = H5Iget_name(scale, nullptr, 0);
    if (len <= 0) {
        return -1;
    }
    std::string name(static_cast<std::size_t>(len) + 1, '\0');
    H5Iget_name(scale, name.data(), name.size());
    name.resize(static_cast<std::size_t>(len));
    if (!name.empty() && name.front() == '/') {
        name.erase(0, 1);
    }
    *static_cast<std::string*>(op) = name;
    return 1; // stop after the first attached scale
}

Shape dataset_shape(hid_t ds)
{
    Handle space(checked(H5Dget_space(ds), "dataspace"), H5Sclose);
    const int rank = H5Sget_simple_extent_ndims(space.get());
    std::vector<hsize_t> dims(static_cast<std::size_t>(std::max(rank, 0)));
    if (rank > 0) {
        H5Sget_simple_extent_dims(space.get(), dims.data(), nullptr);
    }
    return Shape(dims.begin(), dims.end());
}

} // namespace

void write_netcdf(const DataCube& cube, const std::filesystem::path& path, const NetcdfWriteOptions& options)
{
    std::lock_guard lock(hdf5_mutex());
    silence_hdf5();

    Handle fcpl(checked(H5Pcreate(H5P_FILE_CREATE), "fcpl"), H5Pclose);
    H5Pset_link_creation_order(fcpl.get(), H5P_CRT_ORDER_TRACKED | H5P_CRT_ORDER_INDEXED);
    H5Pset_attr_creation_order(fcpl.get(), H5P_CRT_ORDER_TRACKED | H5P_CRT_ORDER_INDEXED);
    Handle fapl(checked(H5Pcreate(H5P_FILE_ACCESS), "fapl"), H5Pclose);
    H5Pset_libver_bounds(fapl.get(), H5F_LIBVER_EARLIEST, H5F_LIBVER_V18);
    Handle file(checked(H5Fcreate(path.c_str(), H5F_ACC_TRUNC, fcpl.get(), fapl.get()), "create " + path.string()),
                H5Fclose);

    std::map<std::string, Handle> scales;
    int dimid = 0;
    for (const auto& [dim, length] : cube.dims()) {
        const auto cit = cube.coords().find(dim);
        Handle ds;
        if (cit == cube.coords().end()) {
            ds = create_dataset(file.get(), dim, H5T_IEEE_F32BE, {length}, 4, options, false);
            char label[128];
            std::snprintf(label, sizeof label, "%s%10zu", std::string(k_pure_dim_prefix).c_str(), length);
            checked(H5DSset_scale(ds.get(), label), "set scale " + dim, 0);
        } else {
            const auto& coord = cit->second;
            if (coord.is_labels()) {
                const auto& labels = std::get<std::vector<std::string>>(coord.values);
                Handle type(checked(H5Tcopy(H5T_C_S1), "copy"), H5Tclose);
                H5Tset_size(type.get(), H5T_VARIABLE);
                H5Tset_cset(type.get(), H5T_CSET_UTF8);
                ds = create_dataset(file.get(), dim, type.get(), {length}, sizeof(char*), options, false);
                std::vector<const char*> ptrs;
                for (const auto& s : labels) {
                    ptrs.push_back(s.c_str());
                }
                if (!ptrs.empty()) {
                    checked(H5Dwrite(ds.get(), type.get(), H5S_ALL, H5S_ALL, H5P_DEFAULT, ptrs.data()),
                            "write labels " + dim, 0);
                }
            } else {
                const auto& values = std::get<std::vector<double>>(coord.values);
                check_representable(dim, coord.dtype, values);
                ds = create_dataset(file.get(), dim, file_type_for(coord.dtype), {length}, dtype_size(coord.dtype),
                                    options, false);
                write_numeric(ds.get(), coord.dtype, values);
            }
            checked(H5DSset_scale(ds.get(), dim.c_str()), "set scale " + dim, 0);
            write_attrs(ds.get(), coord.attrs);
        }
        write_attr(ds.get(), "_Netcdf4Dimid", std::int64_t{dimid++});
        scales.emplace(dim, std::move(ds));
    }

    for (const auto& [name, var] : cube.variables()) {
        if (scales.contains(name)) {
            throw FormatError("variable '" + name + "' collides with a dimension name");
        }
        check_representable(name, var.dtype, var.values.values());
        auto ds = create_dataset(file.get(), name, file_type_for(var.dtype), var.values.shape(), dtype_size(var.dtype),
                                 options, true);
        write_numeric(ds.get(), var.dtype, var.values.values());
        for (std::size_t i = 0; i < var.axes.size(); ++i) {
            checked(H5DSattach_scale(ds.get(), scales.at(var.axes[i]).get(), static_cast<unsigned>(i)),
                    "attach scale " + var.axes[i] + " to " + name, 0);
        }
        write_attrs(ds.get(), var.attrs);
    }
    write_attrs(file.get(), cube.attrs());
    checked(H5Fflush(file.get(), H5F_SCOPE_GLOBAL), "flush", 0);
}

DataCube read_netcdf(const std::filesystem::path& path)
{
    if (!std::filesystem::exists(path)) {
        throw NotFoundError("NetCDF file not found: " + path.string());
    }
    std::lock_guard lock(hdf5_mutex());
    silence_hdf5();

    if (H5Fis_hdf5(path.c_str()) <= 0) {
        throw FormatError(path.string() + " is not a NetCDF-4/HDF5 file");
    }
    Handle file(checked(H5Fopen(path.c_str(), H5F_ACC_RDONLY, H5P_DEFAULT), "open " + path.string()), H5Fclose);

    NameCollector links;
    hsize_t idx = 0;
    if (H5Literate(file.get(), H5_INDEX_CRT_ORDER, H5_ITER_INC, &idx, collect_link, &links) < 0) {
        links.names.clear();
        idx = 0;
        checked(H5Literate(file.get(), H5_INDEX_NAME, H5_ITER_INC, &idx, collect_link, &links), "list root", 0);
    }

    DataCube cube;
    std::vector<std::string> data_names;
    for (const auto& name : links.names) {
        Handle obj(H5Oopen(file.get(), name.c_str(), H5P_DEFAULT), H5Oclose);
        if (!obj || H5Iget_type(obj.get()) != H5I_DATASET) {
            continue; // groups and named types are not part of the cube model
        }
        Handle ds(H5Dopen2(file.get(), name.c_str(), H5P_DEFAULT), H5Dclose);
        if (H5DSis_scale(ds.get()) <= 0) {
            data_names.push_back(name);
            continue;
        }
        const auto shape = dataset_shape(ds.get());
        if (shape.size() != 1) {
            throw FormatError("dimension scale '" + name + "' is not one-dimensional");
        }
        char label[256] = {0};
        H5DSget_scale_name(ds.get(), label, sizeof label - 1);
        if (std::string_view(label).starts_with(k_pure_dim_prefix)) {
            cube.declare_dim(name, shape[0]);
            continue;
        }
        Handle type(checked(H5Dget_type(ds.get()), "type"), H5Tclose);
        Coordinate coord;
        if (H5Tget_class(type.get()) == H5T_STRING) {
            coord.values = read_strings(ds.get(), type.get(), shape[0]);
        } else {
            coord.dtype = dtype_for(type.get());
            coord.values = read_numeric(ds.get(), coord.dtype, shape[0]);
        }
        coord.attrs = read_attrs(ds.get());
        cube.set_coord(name, std::move(coord));
    }

    std::map<std::size_t, std::string> phony;
    for (const auto& name : data_names) {
        Handle ds(checked(H5Dopen2(file.get(), name.c_str(), H5P_DEFAULT), "open " + name), H5Dclose);
        Handle type(checked(H5Dget_type(ds.get()), "type"), H5Tclose);
        if (H5Tget_class(type.get()) == H5T_STRING) {
            throw FormatError("string data variable '" + name + "' is not supported");
        }
        Variable var;
        var.dtype = dtype_for(type.get());
        const auto shape = dataset_shape(ds.get());
        for (std::size_t i = 0; i < shape.size(); ++i) {
            std::string axis;
            if (H5DSget_num_scales(ds.get(), static_cast<unsigned>(i)) > 0) {
                int dim_idx = 0; // first scale attached to dimension i
                H5DSiterate_scales(ds.get(), static_cast<unsigned>(i), &dim_idx, first_scale_name, &axis);
            }
            if (axis.empty()) {
                auto [it, _] = phony.try_emplace(shape[i], "phony_dim_" + std::to_string(phony.size()));
                axis = it->second;
            }
            var.axes.push_back(axis);
        }
        var.values = NdArray(shape, read_numeric(ds.get(), var.dtype, shape_size(shape)));
        var.attrs = read_attrs(ds.get());
        cube.add_variable(name, std::move(var));
    }
    cube.attrs() = read_attrs(file.get());
    return cube;
}

} // namespace cubevid
