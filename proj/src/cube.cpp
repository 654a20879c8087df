#include "cubevid/cube.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace cubevid {

std::size_t Coordinate::size() const
{
    return std::visit([](const auto& v) { return v.size(); }, values);
}

void DataCube::declare_dim(const std::string& name, std::size_t length)
{
    if (name.empty()) {
        throw ShapeError("dimension names must be non-empty");
    }
    const auto it = dims_.find(name);
    if (it != dims_.end() && it->second != length) {
        throw ShapeError("dimension '" + name + "' already has length " +
                         std::to_string(it->second) + ", not " + std::to_string(length));
    }
    dims_[name] = length;
}

void DataCube::check_variable(const std::string& name, const Variable& variable) const
{
    if (name.empty()) {
        throw ShapeError("variable names must be non-empty");
    }
    if (variable.axes.size() != variable.values.rank()) {
        throw ShapeError("variable '" + name + "' declares " + std::to_string(variable.axes.size()) +
                         " axes but has rank " + std::to_string(variable.values.rank()));
    }
    std::set<std::string_view> seen;
    for (std::size_t i = 0; i < variable.axes.size(); ++i) {
        const auto& axis = variable.axes[i];
        if (!seen.insert(axis).second) {
            throw ShapeError("variable '" + name + "' repeats axis '" + axis + "'");
        }
        const auto known = dims_.find(axis);
        if (known != dims_.end() && known->second != variable.values.dim(i)) {
            throw ShapeError("variable '" + name + "' has " + std::to_string(variable.values.dim(i)) +
                             " entries along '" + axis + "' but the cube has " +
                             std::to_string(known->second));
        }
    }
}

void DataCube::add_variable(const std::string& name, Variable variable)
{
    if (variables_.contains(name)) {
        throw ShapeError("variable '" + name + "' already exists");
    }
    replace_variable(name, std::move(variable));
}

void DataCube::replace_variable(const std::string& name, Variable variable)
{
    variables_.erase(name);
    check_variable(name, variable);
    for (std::size_t i = 0; i < variable.axes.size(); ++i) {
        dims_[variable.axes[i]] = variable.values.dim(i);
    }
    variables_.insert_or_assign(name, std::move(variable));
}

void DataCube::remove_variable(const std::string& name) { variables_.erase(name); }

void DataCube::set_coord(const std::string& axis, Coordinate coord)
{
    const auto len = coord.size();
    declare_dim(axis, len);
    coords_.insert_or_assign(axis, std::move(coord));
}

bool DataCube::has_variable(std::string_view name) const { return variables_.find(name) != variables_.end(); }

const Variable& DataCube::variable(std::string_view name) const
{
    const auto it = variables_.find(name);
    if (it == variables_.end()) {
        throw NotFoundError("no variable named '" + std::string(name) + "'");
    }
    return it->second;
}

std::optional<std::size_t> DataCube::dim(std::string_view name) const
{
    const auto it = dims_.find(name);
    if (it == dims_.end()) {
        return std::nullopt;
    }
    return it->second;
}

std::vector<std::string> DataCube::variable_names() const
{
    std::vector<std::string> names;
    names.reserve(variables_.size());
    for (const auto& [name, _] : variables_) {
        names.push_back(name);
    }
    return names;
}

namespace {

bool fail(std::string* why, std::string message)
{
    if (why) {
        *why = std::move(message);
    }
    return false;
}

bool compare(const DataCube& a, const DataCube& b, bool values, std::string* why)
{
    if (a.dims() != b.dims()) {
        return fail(why, "dimension sets differ");
    }
    if (a.attrs() != b.attrs()) {
        return fail(why, "global attributes differ");
    }
    if (a.coords() != b.coords()) {
        for (const auto& [name, coord] : a.coords()) {
            const auto it = b.coords().find(name);
            if (it == b.coords().end()) {
                return fail(why, "coordinate '" + name + "' missing");
            }
            if (!(it->second == coord)) {
                return fail(why, "coordinate '" + name + "' differs");
            }
        }
        return fail(why, "coordinate sets differ");
    }
    if (a.variables().size() != b.variables().size()) {
        return fail(why, "variable counts differ (" + std::to_string(a.variables().size()) + " vs " +
                             std::to_string(b.variables().size()) + ")");
    }
    for (const auto& [name, va] : a.variables()) {
        const auto it = b.variables().find(name);
        if (it == b.variables().end()) {
            return fail(why, "variable '" + name + "' missing");
        }
        const auto& vb = it->second;
        if (va.axes != vb.axes || va.values.shape() != vb.values.shape()) {
            return fail(why, "variable '" + name + "' has a different layout");
        }
        if (va.dtype != vb.dtype) {
            return fail(why, "variable '" + name + "' has a different dtype");
        }
        if (va.attrs != vb.attrs) {
            return fail(why, "variable '" + name + "' has different attributes");
        }
        if (values && !bitwise_equal(va.values, vb.values)) {
            return fail(why, "variable '" + name + "' has different values");
        }
    }
    return true;
}

} // namespace

bool structurally_equal(const DataCube& a, const DataCube& b, std::string* why)
{
    return compare(a, b, false, why);
}

bool bitwise_equal(const DataCube& a, const DataCube& b, std::string* why)
{
    return compare(a, b, true, why);
}

// --- missing-data policy -------------------------------------------------

std::size_t ValidityMask::synthesized_count() const
{
    return static_cast<std::size_t>(std::count(observed.begin(), observed.end(), std::uint8_t{0}));
}

FillResult forward_fill_time(const NdArray& values, std::size_t time_axis, double leading_fill)
{
    if (time_axis >= values.rank()) {
        throw ConfigError("time axis index " + std::to_string(time_axis) + " out of range for rank " +
                          std::to_string(values.rank()));
    }
    if (!std::isfinite(leading_fill)) {
        throw ConfigError("leading fill value must be finite");
    }
    FillResult result{values, ValidityMask{values.shape(), std::vector<std::uint8_t>(values.size(), 1)}};
    auto out = result.values.values();
    for (const double v : out) {
        if (std::isinf(v)) {
            throw DataError("infinite value found; only NaN is treated as missing data");
        }
    }
    if (out.empty()) {
        return result;
    }

    const std::size_t steps = values.dim(time_axis);
    const std::size_t stride = values.strides()[time_axis];
    const std::size_t outer = values.size() / (steps * stride);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t inner = 0; inner < stride; ++inner) {
            const std::size_t base = o * steps * stride + inner;
            double last = leading_fill;
            for (std::size_t t = 0; t < steps; ++t) {
                const std::size_t i = base + t * stride;
                if (std::isnan(out[i])) {
                    out[i] = last;
                    result.mask.observed[i] = 0;
                } else {
                    last = out[i];
                }
            }
        }
    }
    return result;
}

FillResult forward_fill_time(const Variable& variable, std::string_view time_axis, double leading_fill)
{
    const auto it = std::find(variable.axes.begin(), variable.axes.end(), time_axis);
    if (it == variable.axes.end()) {
        throw ConfigError("time axis '" + std::string(time_axis) + "' is not an axis of the variable");
    }
    return forward_fill_time(variable.values, static_cast<std::size_t>(it - variable.axes.begin()),
                             leading_fill);
}

// --- video selection -----------------------------------------------------

namespace {

struct RoleIndex {
    std::size_t time, y, x;
    std::optional<std::size_t> channel;
};

RoleIndex role_indices(const std::string& name, const std::vector<std::string>& axes, const AxisOrder& order)
{
    auto find = [&](const std::string& role) {
        const auto it = std::find(axes.begin(), axes.end(), role);
        if (it == axes.end()) {
            throw ShapeError("variable '" + name + "' has no axis '" + role + "'");
        }
        return static_cast<std::size_t>(it - axes.begin());
    };
    RoleIndex idx{find(order.time), find(order.y), find(order.x), std::nullopt};
    if (axes.size() == 4) {
        for (std::size_t i = 0; i < 4; ++i) {
            if (i != idx.time && i != idx.y && i != idx.x) {
                idx.channel = i;
            }
        }
    } else if (axes.size() != 3) {
        throw ShapeError("variable '" + name + "' must have 3 or 4 axes to become video, it has " +
                         std::to_string(axes.size()));
    }
    return idx;
}

} // namespace

std::vector<ChannelSource> resolve_channels(const DataCube& cube, std::span<const std::string> names,
                                            const AxisOrder& order)
{
    if (names.empty()) {
        throw ConfigError("no input variables given");
    }
    if (order.time == order.y || order.time == order.x || order.y == order.x) {
        throw ConfigError("time, y and x axis names must be distinct");
    }
    std::set<std::string_view> seen;
    std::vector<ChannelSource> channels;
    std::optional<Shape> tyx;
    for (const auto& name : names) {
        if (!seen.insert(name).second) {
            throw ConfigError("variable '" + name + "' listed twice");
        }
        const auto& var = cube.variable(name);
        const auto idx = role_indices(name, var.axes, order);
        const Shape this_tyx{var.values.dim(idx.time), var.values.dim(idx.y), var.values.dim(idx.x)};
        if (tyx && *tyx != this_tyx) {
            throw ShapeError("variable '" + name + "' has time/y/x shape " + shape_to_string(this_tyx) +
                             " but earlier variables have " + shape_to_string(*tyx));
        }
        tyx = this_tyx;
        if (idx.channel) {
            for (std::size_t k = 0; k < var.values.dim(*idx.channel); ++k) {
                channels.push_back({name, var.axes[*idx.channel], k});
            }
        } else {
            channels.push_back({name, std::nullopt, 0});
        }
    }
    return channels;
}

VideoSelection select_for_video(const DataCube& cube, std::span<const std::string> names, const AxisOrder& order)
{
    VideoSelection sel;
    sel.channels = resolve_channels(cube, names, order);
    const auto& first = cube.variable(sel.channels.front().variable);
    const auto idx0 = role_indices(sel.channels.front().variable, first.axes, order);
    const std::size_t nt = first.values.dim(idx0.time);
    const std::size_t ny = first.values.dim(idx0.y);
    const std::size_t nx = first.values.dim(idx0.x);
    const std::size_t nc = sel.channels.size();
    sel.array = NdArray({nt, ny, nx, nc});

    for (std::size_t c = 0; c < nc; ++c) {
        const auto& src = sel.channels[c];
        const auto& var = cube.variable(src.variable);
        const auto idx = role_indices(src.variable, var.axes, order);
        const auto& st = var.values.strides();
        const std::size_t base = idx.channel ? src.channel_index * st[*idx.channel] : 0;
        const auto in = var.values.values();
        for (std::size_t t = 0; t < nt; ++t) {
            for (std::size_t y = 0; y < ny; ++y) {
                for (std::size_t x = 0; x < nx; ++x) {
                    sel.array.at(t, y, x, c) = in[base + t * st[idx.time] + y * st[idx.y] + x * st[idx.x]];
                }
            }
        }
    }
    return sel;
}

std::map<std::string, NdArray> unstack_channels(const NdArray& stack, std::span<const ChannelSource> channels,
                                                const std::map<std::string, VariableLayout>& layouts,
                                                const AxisOrder& order)
{
    if (stack.rank() != 4 || stack.dim(3) != channels.size()) {
        throw ShapeError("stack shape " + shape_to_string(stack.shape()) + " does not match " +
                         std::to_string(channels.size()) + " channels");
    }
    std::map<std::string, NdArray> out;
    for (std::size_t c = 0; c < channels.size(); ++c) {
        const auto& src = channels[c];
        const auto lit = layouts.find(src.variable);
        if (lit == layouts.end()) {
            throw ShapeError("no layout for variable '" + src.variable + "'");
        }
        const auto& layout = lit->second;
        auto [it, inserted] = out.try_emplace(src.variable, layout.shape);
        NdArray& dst = it->second;
        const auto idx = role_indices(src.variable, layout.axes, order);
        if (dst.dim(idx.time) != stack.dim(0) || dst.dim(idx.y) != stack.dim(1) || dst.dim(idx.x) != stack.dim(2)) {
            throw ShapeError("variable '" + src.variable + "' layout " + shape_to_string(layout.shape) +
                             " does not match stack " + shape_to_string(stack.shape()));
        }
        const auto& st = dst.strides();
        const std::size_t base = idx.channel ? src.channel_index * st[*idx.channel] : 0;
        auto outv = dst.values();
        for (std::size_t t = 0; t < stack.dim(0); ++t) {
            for (std::size_t y = 0; y < stack.dim(1); ++y) {
                for (std::size_t x = 0; x < stack.dim(2); ++x) {
                    outv[base + t * st[idx.time] + y * st[idx.y] + x * st[idx.x]] = stack.at(t, y, x, c);
                }
            }
        }
    }
    return out;
}

} // namespace cubevid
