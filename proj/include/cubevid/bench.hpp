#pragma once

#include "cubevid/codec.hpp"
#include "cubevid/cube.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace cubevid {

// --- synthetic cubes ---------------------------------------------------------

enum class SynthKind { smooth_advection, checkerboard, rank1_spectral, noise };

std::string_view synth_kind_name(SynthKind kind);
SynthKind synth_kind_from_name(std::string_view name);

struct SynthDims {
    std::size_t t = 8, y = 32, x = 32, c = 3;
};

/// Reproducible test cube with variables b1..bc over (time, y, x) plus
/// numeric time/y/x coordinates. smooth-advection, checkerboard and noise
/// hold uint16 values in [0, 4095]; rank1-spectral holds float64
/// s(t, y, x) * v_c. Needs t >= 4, y >= 16, x >= 16, c >= 1.
DataCube synth_cube(SynthKind kind, const SynthDims& dims, std::uint64_t seed);

// --- sweeps ------------------------------------------------------------------

struct CubeSource {
    std::string name;
    std::optional<std::filesystem::path> path; // read from disk when set
    SynthKind kind = SynthKind::smooth_advection;
    SynthDims dims;
    std::uint64_t seed = 0;
    std::vector<std::string> variables; // empty: every 3-D variable on `axes`
    AxisOrder axes;
};

struct CodecCell {
    CodecId codec = CodecId::libx265;
    int bits = 12;
};

struct PcaMode {
    enum class Kind { off, keep, tiered } kind = Kind::off;
    std::size_t keep = 0; // for Kind::keep

    friend bool operator==(const PcaMode&, const PcaMode&) = default;
};

struct SweepSpec {
    std::vector<CubeSource> cubes;
    std::vector<CodecCell> matrix;
    std::vector<std::string> presets; // ladder subset; empty means all six
    std::vector<PcaMode> pca_modes = {PcaMode{}};
    bool era5_mode = false;
    std::size_t repetitions = 1;     // timings are the median over repetitions
    std::size_t jobs = 1;            // cells run concurrently
    std::optional<std::filesystem::path> work_dir;
    bool keep_outputs = false;
};

/// Sweep document (YAML or JSON); see docs/formats.md.
SweepSpec parse_sweep(const std::string& text, const std::filesystem::path& base_dir = {});
SweepSpec load_sweep(const std::filesystem::path& path);

struct ReportRow {
    std::string test;    // codec, plus "(PCA - k bands)" / "(PCA - all bands)"
    std::string cube;
    int bits = 0;
    std::string quality;
    double bpppb = 0.0;
    double psnr = 0.0;   // channel-mean dB, +inf when lossless
    double psnr_pooled = 0.0;
    double ssim = 0.0;
    double sa = 0.0;     // degrees
    double t_c = 0.0;
    double t_d = 0.0;
    std::size_t videos = 0;
    bool failed = false;
    std::string error;
};

/// Runs every (cube, codec, bits, pca mode, preset) cell; failures become
/// rows with `failed` set and never stop the sweep. Rows come out in cube,
/// matrix, pca-mode and ladder order.
std::vector<ReportRow> run_sweep(const SweepSpec& spec);

enum class ReportFormat { csv, markdown };

/// CSV header is Test,Bits,Quality,bpppb,PSNR,t_c,t_d; `extended` appends
/// Cube,PSNR_pooled,SSIM,SA,Videos,Status,Error.
std::string emit_report(const std::vector<ReportRow>& rows, ReportFormat format, bool extended = false);

/// Average QP libx265 actually used for `config`, read from its own log on a
/// 128x128 test pattern. Lets a sweep report what an odd option mix such as
/// crf 51 with qpmin=0:qpmax=0.01 really does. nullopt for other codecs or
/// when the encoder prints no summary.
std::optional<double> measure_effective_qp(const CodecConfig& config);

} // namespace cubevid
