#pragma once

#include "cubevid/error.hpp"

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cubevid {

/// Storage type of a variable as read from (and written back to) disk.
/// In memory every numeric value is held as a double.
enum class DType : std::uint8_t {
    int8,
    uint8,
    int16,
    uint16,
    int32,
    uint32,
    int64,
    uint64,
    float32,
    float64,
};

std::string_view dtype_name(DType dtype);
DType dtype_from_name(std::string_view name);
bool is_integer(DType dtype);
std::size_t dtype_size(DType dtype);
double dtype_lowest(DType dtype);
double dtype_highest(DType dtype);

/// Converts a reconstructed value back to what the storage type can hold:
/// integers are rounded (half away from zero) and clamped, float32 is
/// narrowed, float64 is left alone.
double coerce_to_dtype(double value, DType dtype);

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

std::string shape_to_string(const Shape& shape);

/// Dense row-major n-dimensional array.
template <typename T>
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T{})
        : shape_(std::move(shape)), data_(shape_size(shape_), fill)
    {
        compute_strides();
    }

    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data))
    {
        if (data_.size() != shape_size(shape_)) {
            throw ShapeError("tensor data has " + std::to_string(data_.size()) +
                             " elements but shape " + shape_to_string(shape_) + " needs " +
                             std::to_string(shape_size(shape_)));
        }
        compute_strides();
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    const std::vector<std::size_t>& strides() const noexcept { return strides_; }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }
    std::vector<T>& storage() noexcept { return data_; }
    const std::vector<T>& storage() const noexcept { return data_; }

    T& operator[](std::size_t flat) noexcept { return data_[flat]; }
    const T& operator[](std::size_t flat) const noexcept { return data_[flat]; }

    // 4-D accessors; the [t, y, x, c] layout is the working layout for video data.
    std::size_t offset(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) const noexcept
    {
        return i0 * strides_[0] + i1 * strides_[1] + i2 * strides_[2] + i3 * strides_[3];
    }
    T& at(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) noexcept
    {
        return data_[offset(i0, i1, i2, i3)];
    }
    const T& at(std::size_t i0, std::size_t i1, std::size_t i2, std::size_t i3) const noexcept
    {
        return data_[offset(i0, i1, i2, i3)];
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    void compute_strides()
    {
        strides_.assign(shape_.size(), 1);
        for (std::size_t i = shape_.size(); i-- > 1;) {
            strides_[i - 1] = strides_[i] * shape_[i];
        }
    }

    Shape shape_;
    std::vector<std::size_t> strides_;
    std::vector<T> data_;
};

using NdArray = Tensor<double>;
using SampleArray = Tensor<std::uint16_t>;

/// Bitwise equality of two double arrays (NaN payloads compare equal to themselves).
bool bitwise_equal(const NdArray& a, const NdArray& b);

} // namespace cubevid
