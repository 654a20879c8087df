#pragma once

#include "cubevid/tensor.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cubevid {

/// Free-form metadata value. Integers and floats are kept apart so that a
/// round trip through any store reproduces the original type.
using AttrValue = std::variant<std::string, std::int64_t, double, std::vector<double>>;
using Attributes = std::map<std::string, AttrValue>;

struct Variable {
    std::vector<std::string> axes;
    NdArray values;
    DType dtype = DType::float64;
    Attributes attrs;

    friend bool operator==(const Variable&, const Variable&) = default;
};

/// Coordinate vector bound to one axis: numbers (timestamps, latitudes...)
/// or labels (band names).
struct Coordinate {
    std::variant<std::vector<double>, std::vector<std::string>> values;
    DType dtype = DType::float64; // ignored for label coordinates
    Attributes attrs;

    std::size_t size() const;
    bool is_labels() const { return std::holds_alternative<std::vector<std::string>>(values); }

    friend bool operator==(const Coordinate&, const Coordinate&) = default;
};

/// Names of the axes that play the time, y and x roles in one variable.
struct AxisOrder {
    std::string time = "time";
    std::string y = "y";
    std::string x = "x";

    friend bool operator==(const AxisOrder&, const AxisOrder&) = default;
};

/// Labeled collection of arrays sharing named dimensions.
///
/// A cube is built up with the mutating methods and then treated as an
/// immutable value; every mutation re-checks the invariants that involve the
/// touched entry (shape vs axes, unique axis names, coordinate lengths, one
/// length per dimension name).
class DataCube {
public:
    void declare_dim(const std::string& name, std::size_t length);
    void add_variable(const std::string& name, Variable variable);
    void replace_variable(const std::string& name, Variable variable);
    void remove_variable(const std::string& name);
    void set_coord(const std::string& axis, Coordinate coord);

    bool has_variable(std::string_view name) const;
    const Variable& variable(std::string_view name) const;
    const std::map<std::string, Variable, std::less<>>& variables() const { return variables_; }
    const std::map<std::string, Coordinate, std::less<>>& coords() const { return coords_; }
    const std::map<std::string, std::size_t, std::less<>>& dims() const { return dims_; }
    std::optional<std::size_t> dim(std::string_view name) const;

    Attributes& attrs() { return attrs_; }
    const Attributes& attrs() const { return attrs_; }

    std::vector<std::string> variable_names() const;

    friend bool operator==(const DataCube&, const DataCube&) = default;

private:
    void check_variable(const std::string& name, const Variable& variable) const;

    std::map<std::string, std::size_t, std::less<>> dims_;
    std::map<std::string, Variable, std::less<>> variables_;
    std::map<std::string, Coordinate, std::less<>> coords_;
    Attributes attrs_;
};

/// Names, axes, shapes, dtypes, coordinates and attributes agree; values are
/// not compared.
bool structurally_equal(const DataCube& a, const DataCube& b, std::string* why = nullptr);

/// Structural equality plus bit-identical values (NaN == NaN).
bool bitwise_equal(const DataCube& a, const DataCube& b, std::string* why = nullptr);

// --- missing-data policy -------------------------------------------------

/// Observed/synthesized flag per cell of a variable (same shape as the variable).
struct ValidityMask {
    Shape shape;
    std::vector<std::uint8_t> observed; // 1 = observed, 0 = synthesized by fill

    std::size_t synthesized_count() const;

    friend bool operator==(const ValidityMask&, const ValidityMask&) = default;
};

struct FillResult {
    NdArray values;
    ValidityMask mask;
};

/// Replaces every NaN by the last valid value before it along `time_axis`;
/// NaNs with no prior value take `leading_fill`. Infinite values are rejected.
FillResult forward_fill_time(const NdArray& values, std::size_t time_axis, double leading_fill = 0.0);

/// Same, locating the time axis of `variable` by name.
FillResult forward_fill_time(const Variable& variable, std::string_view time_axis,
                             double leading_fill = 0.0);

// --- video selection -----------------------------------------------------

/// Where one channel of a [t, y, x, c] stack comes from.
struct ChannelSource {
    std::string variable;
    std::optional<std::string> channel_axis; // extra axis expanded into channels
    std::size_t channel_index = 0;

    friend bool operator==(const ChannelSource&, const ChannelSource&) = default;
};

struct VideoSelection {
    NdArray array; // [t, y, x, c]
    std::vector<ChannelSource> channels;
};

/// Resolves which channels `names` contribute (a variable with one axis
/// beyond time/y/x contributes one channel per entry of that axis).
std::vector<ChannelSource> resolve_channels(const DataCube& cube, std::span<const std::string> names,
                                            const AxisOrder& order);

/// Stacks the named variables into one contiguous [t, y, x, c] array.
VideoSelection select_for_video(const DataCube& cube, std::span<const std::string> names,
                                const AxisOrder& order);

/// Layout of a variable to rebuild from a [t, y, x, c] stack.
struct VariableLayout {
    std::vector<std::string> axes;
    Shape shape;
};

/// Inverse of select_for_video: scatters the channels back into arrays with
/// their original axis order.
std::map<std::string, NdArray> unstack_channels(const NdArray& stack,
                                                std::span<const ChannelSource> channels,
                                                const std::map<std::string, VariableLayout>& layouts,
                                                const AxisOrder& order);

} // namespace cubevid
