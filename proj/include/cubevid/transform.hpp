#pragma once

#include "cubevid/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace cubevid {

inline constexpr int k_supported_bit_depths[] = {8, 10, 12, 16};

bool is_supported_bit_depth(int bits);

struct ChannelRange {
    double min = 0.0;
    double max = 0.0;

    bool constant() const noexcept { return min == max; }

    friend bool operator==(const ChannelRange&, const ChannelRange&) = default;
};

/// Linear float <-> integer mapping, one range per channel, shared by all
/// frames of a sequence.
struct QuantParams {
    int bit_depth = 8;
    std::vector<ChannelRange> channels;

    std::uint32_t levels() const noexcept { return (std::uint32_t{1} << bit_depth) - 1; }

    /// Distance between adjacent reconstruction levels of channel `c`.
    double step(std::size_t c) const { return (channels.at(c).max - channels.at(c).min) / levels(); }

    friend bool operator==(const QuantParams&, const QuantParams&) = default;
};

/// Per-channel min/max of a finite [t, y, x, c] array.
QuantParams fit_quant(const NdArray& array, int bit_depth);

/// q = round((v - min) / (max - min) * (2^B - 1)), half away from zero;
/// constant channels map to 0. Values outside [min, max] are an error unless
/// `clamp` is set.
SampleArray quantize(const NdArray& array, const QuantParams& params, bool clamp = false);

/// v = min + q / (2^B - 1) * (max - min); constant channels yield min.
NdArray dequantize(const SampleArray& samples, const QuantParams& params);

/// Channel transform fitted on all pixel spectra of one cube.
struct PcaModel {
    std::vector<double> mean;                 // length C
    std::vector<double> components;           // n_keep x C, row-major, orthonormal rows
    std::vector<double> explained_variance;   // length n_keep, non-increasing
    double total_variance = 0.0;              // sum of per-channel variances
    std::vector<std::string> per_component_quality; // optional preset name per component

    std::size_t n_channels() const noexcept { return mean.size(); }
    std::size_t n_components() const noexcept { return explained_variance.size(); }
    double component(std::size_t k, std::size_t c) const { return components.at(k * n_channels() + c); }
    double explained_variance_ratio(std::size_t k) const;

    friend bool operator==(const PcaModel&, const PcaModel&) = default;
};

/// Fits the principal axes of the channel vectors of a [t, y, x, c] array and
/// keeps the `n_keep` with the largest variance. Variances use the N-1
/// normalization; each component's sign is chosen so that its largest-magnitude
/// entry is positive.
PcaModel pca_fit(const NdArray& array, std::size_t n_keep);

/// Per-pixel projection (v - mean) . components^T, giving [t, y, x, n_keep].
NdArray pca_forward(const NdArray& array, const PcaModel& model);

/// Per-pixel reconstruction pc . components + mean, giving [t, y, x, C].
NdArray pca_inverse(const NdArray& pcs, const PcaModel& model);

} // namespace cubevid
