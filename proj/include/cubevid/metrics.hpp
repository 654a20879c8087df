#pragma once

#include "cubevid/cube.hpp"
#include "cubevid/manifest.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace cubevid {

/// 8 * bytes / (t * h * w * c).
double bpppb(std::uint64_t total_bytes, std::size_t t, std::size_t h, std::size_t w, std::size_t c);

struct PsnrResult {
    std::vector<double> per_channel;     // dB; +inf when bit-equal, NaN when undefined
    double mean_db = 0.0;                // mean over finite channels (see below)
    double pooled_db = 0.0;              // global peak over the MSE of all samples
    std::vector<std::size_t> infinite_channels;
    std::vector<std::size_t> undefined_channels; // zero peak and non-zero error
};

/// Peak of channel k is the maximum of `orig` over t, y, x. The mean skips
/// infinite and undefined channels; it is +inf when every channel is
/// bit-equal and NaN when no channel has a defined finite value.
PsnrResult psnr(const NdArray& orig, const NdArray& recon);

inline constexpr std::size_t k_ssim_window = 7;
inline constexpr double k_ssim_k1 = 0.01;
inline constexpr double k_ssim_k2 = 0.03;

/// Mean SSIM over frames and channels: uniform 7x7 windows fully inside the
/// frame, sample (N-1) variances, dynamic range = per-channel peak as in
/// psnr(). Channels whose peak is not positive use their value range
/// instead, or 1 when constant.
double ssim(const NdArray& orig, const NdArray& recon);

struct SpectralAngleResult {
    double mean_degrees = 0.0; // NaN when every pixel was skipped
    std::size_t pixels = 0;    // pixels included in the mean
    std::size_t skipped = 0;   // pixels where either vector has zero norm
};

SpectralAngleResult spectral_angle(const NdArray& orig, const NdArray& recon);

struct MetricsRow {
    std::string stream;
    std::size_t t = 0, h = 0, w = 0, c = 0; // c counts the stream's input channels
    std::uint64_t bytes = 0;
    double bpppb = 0.0;
    PsnrResult psnr;
    double ssim = 0.0;
    SpectralAngleResult sa;
    double t_c = 0.0;
    double t_d = 0.0;
};

struct MetricsReport {
    std::vector<MetricsRow> rows; // manifest stream order
};

/// Metrics of each stream of a decoded cube against the filled original.
MetricsReport evaluate(const DataCube& filled_orig, const DataCube& recon, const Manifest& manifest);

/// Decompresses `dir` and evaluates it against `orig`, which is filled with
/// each stream's policy first. `t_c` supplies encode times by stream name.
MetricsReport evaluate_roundtrip(const DataCube& orig, const std::filesystem::path& dir,
                                 const std::map<std::string, double>& t_c = {});

} // namespace cubevid
