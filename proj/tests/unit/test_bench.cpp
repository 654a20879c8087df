#include "cubevid/bench.hpp"
#include "cubevid/container.hpp"
#include "cubevid/cube_io.hpp"
#include "unit/test_util.hpp"

#include <fstream>
#include <sstream>

using namespace cubevid;

namespace {

std::vector<std::string> lines(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        out.push_back(line);
    }
    return out;
}

ReportRow row(std::string test, int bits, std::string quality, double rate = 0.0, double psnr = 0.0)
{
    ReportRow r;
    r.test = std::move(test);
    r.cube = "c";
    r.bits = bits;
    r.quality = std::move(quality);
    r.bpppb = rate;
    r.psnr = psnr;
    return r;
}

} // namespace

TEST(Synth, DeterministicPerSeed)
{
    for (auto kind : {SynthKind::smooth_advection, SynthKind::checkerboard, SynthKind::rank1_spectral,
                      SynthKind::noise}) {
        const auto a = synth_cube(kind, {4, 16, 16, 2}, 9);
        EXPECT_TRUE(bitwise_equal(a, synth_cube(kind, {4, 16, 16, 2}, 9))) << synth_kind_name(kind);
        EXPECT_EQ(a.variable_names(), (std::vector<std::string>{"b1", "b2"}));
        EXPECT_EQ(a.variable("b1").values.shape(), (Shape{4, 16, 16}));
        EXPECT_EQ(synth_kind_from_name(synth_kind_name(kind)), kind);
    }
    EXPECT_FALSE(bitwise_equal(synth_cube(SynthKind::noise, {4, 16, 16, 1}, 1),
                               synth_cube(SynthKind::noise, {4, 16, 16, 1}, 2)));
    EXPECT_EQ(synth_cube(SynthKind::rank1_spectral, {4, 16, 16, 2}, 0).variable("b1").dtype, DType::float64);
    EXPECT_THROW(synth_cube(SynthKind::noise, {3, 16, 16, 1}, 0), ConfigError);
    EXPECT_THROW(synth_kind_from_name("plasma"), ConfigError);
}

TEST(Synth, SmoothCompressesBetterThanNoise)
{
    REQUIRE_ENCODER();
    testutil::TempDir dir;
    auto rule = [] {
        MappingRule r;
        r.stream_name = "bands";
        r.input_vars = {"b1", "b2", "b3"};
        r.codec_configs = {resolve_preset(CodecId::libx265, "Medium", false, 12)};
        r.bit_depth = 12;
        return r;
    }();
    compress_cube(synth_cube(SynthKind::smooth_advection, {4, 64, 64, 3}, 1), {rule}, dir / "smooth");
    compress_cube(synth_cube(SynthKind::noise, {4, 64, 64, 3}, 1), {rule}, dir / "noise");
    const auto smooth = std::filesystem::file_size(dir.path() / "smooth" / "bands_0001.mkv");
    const auto noise = std::filesystem::file_size(dir.path() / "noise" / "bands_0001.mkv");
    EXPECT_LT(smooth, noise / 4);
}

TEST(Sweep, ParseFullDocument)
{
    const auto spec = parse_sweep(R"(
cubes:
  - {synth: smooth-advection, dims: [4, 32, 32, 3], seed: 7}
  - {path: data/s2.nc, name: s2, variables: [B02, B03], axes: [t, lat, lon]}
matrix:
  - {codec: libx265, bits: 12}
  - {codec: JP2OpenJPEG, bits: 16}
presets: [Best, Low]
pca: [off, tiered, {keep: 2}]
era5: true
repetitions: 3
jobs: 2
)",
                                  "/base");
    ASSERT_EQ(spec.cubes.size(), 2u);
    EXPECT_EQ(spec.cubes[0].name, "smooth-advection");
    EXPECT_EQ(spec.cubes[0].dims.y, 32u);
    EXPECT_EQ(spec.cubes[0].seed, 7u);
    EXPECT_EQ(spec.cubes[1].path, std::filesystem::path("/base/data/s2.nc"));
    EXPECT_EQ(spec.cubes[1].axes, (AxisOrder{"t", "lat", "lon"}));
    ASSERT_EQ(spec.matrix.size(), 2u);
    EXPECT_EQ(spec.matrix[1].codec, CodecId::jp2openjpeg);
    EXPECT_EQ(spec.presets, (std::vector<std::string>{"Best", "Low"}));
    EXPECT_EQ(spec.pca_modes, (std::vector<PcaMode>{{}, {PcaMode::Kind::tiered, 0}, {PcaMode::Kind::keep, 2}}));
    EXPECT_TRUE(spec.era5_mode);
    EXPECT_EQ(spec.repetitions, 3u);
    EXPECT_EQ(spec.jobs, 2u);
}

TEST(Sweep, ParseErrors)
{
    const std::string cube = "cubes: [{synth: noise, dims: [4, 16, 16, 1]}]\n";
    EXPECT_THROW(parse_sweep(cube), ConfigError); // no matrix
    EXPECT_THROW(parse_sweep(cube + "matrix: [{codec: libx265, bits: 16}]"), ConfigError);
    EXPECT_THROW(parse_sweep(cube + "matrix: [{codec: ffv1, bits: 8}]\npresets: [Ultra]"), ConfigError);
    EXPECT_THROW(parse_sweep(cube + "matrix: [{codec: ffv1, bits: 8}]\npca: half"), ConfigError);
    EXPECT_THROW(parse_sweep(cube + "matrix: [{codec: ffv1, bits: 8}]\npca: {keep: 0}"), ConfigError);
    EXPECT_THROW(parse_sweep(cube + "matrix: [{codec: ffv1, bits: 8}]\ncolour: blue"), ConfigError);
    EXPECT_THROW(parse_sweep("cubes: [{synth: noise}]\nmatrix: [{codec: ffv1, bits: 8}]"), ConfigError);
    EXPECT_THROW(parse_sweep("cubes: [{}]\nmatrix: [{codec: ffv1, bits: 8}]"), ConfigError);
    EXPECT_THROW(parse_sweep("cubes: [unterminated"), ConfigError);
    EXPECT_THROW(load_sweep("/nonexistent/sweep.yaml"), NotFoundError);
}

TEST(Report, CsvAndMarkdown)
{
    auto lossless = row("libx265", 12, "Best", 1.80634, std::numeric_limits<double>::infinity());
    lossless.t_c = 0.5;
    lossless.t_d = 0.25;
    const auto lossy = row("libx265", 12, "Low", 0.11049, 63.2271);
    auto broken = row("ffv1", 8, "Best");
    broken.failed = true;
    broken.error = "boom, with a comma";

    const auto csv = lines(emit_report({lossless, lossy, broken}, ReportFormat::csv));
    ASSERT_EQ(csv.size(), 4u);
    EXPECT_EQ(csv[0], "Test,Bits,Quality,bpppb,PSNR,t_c,t_d");
    EXPECT_EQ(csv[1], "libx265,12,Best,1.8063,inf,0.500,0.250");
    EXPECT_EQ(csv[2], "libx265,12,Low,0.1105,63.227,0.000,0.000");
    EXPECT_EQ(csv[3], "ffv1,8,Best,,,,");

    const auto ext = lines(emit_report({broken}, ReportFormat::csv, true));
    EXPECT_EQ(ext[0], "Test,Bits,Quality,bpppb,PSNR,t_c,t_d,Cube,PSNR_pooled,SSIM,SA,Videos,Status,Error");
    EXPECT_NE(ext[1].find("failed,\"boom, with a comma\""), std::string::npos) << ext[1];

    EXPECT_EQ(lines(emit_report({}, ReportFormat::csv)).size(), 1u);

    const auto md = emit_report({lossless, broken}, ReportFormat::markdown);
    EXPECT_LT(md.find("### libx265"), md.find("### ffv1"));
    EXPECT_NE(md.find("| 12 | Best | 1.8063 | ∞ |"), std::string::npos) << md;
}

TEST(Sweep, RunsCellsAndRecordsFailures)
{
    REQUIRE_ENCODER();
    testutil::TempDir dir;
    SweepSpec spec;
    CubeSource src;
    src.name = "smooth";
    src.dims = {4, 32, 32, 3};
    src.seed = 3;
    spec.cubes = {src};
    spec.matrix = {{CodecId::ffv1, 12}, {CodecId::libx265, 8}};
    spec.presets = {"Low", "Best"};
    spec.pca_modes = {PcaMode{}, PcaMode{PcaMode::Kind::keep, 5}}; // keep 5 of 3 channels cannot work
    spec.jobs = 3;
    spec.work_dir = dir.path();

    const auto rows = run_sweep(spec);
    ASSERT_EQ(rows.size(), 8u);
    // cube, matrix, pca mode, then ladder order
    EXPECT_EQ(rows[0].test, "ffv1");
    EXPECT_EQ(rows[0].quality, "Best");
    EXPECT_EQ(rows[1].quality, "Low");
    EXPECT_EQ(rows[2].test, "ffv1 (PCA - 5 bands)");
    EXPECT_EQ(rows[4].test, "libx265");
    for (std::size_t i : {0u, 1u, 4u, 5u}) {
        EXPECT_FALSE(rows[i].failed) << rows[i].error;
        EXPECT_GT(rows[i].bpppb, 0.0);
    }
    for (std::size_t i : {2u, 3u, 6u, 7u}) {
        EXPECT_TRUE(rows[i].failed);
        EXPECT_FALSE(rows[i].error.empty());
    }
    EXPECT_TRUE(std::isinf(rows[0].psnr));     // ffv1 is always lossless
    // 8 bits cannot hold the 12-bit synthetic range, so even x265 Best is lossy here
    EXPECT_TRUE(std::isfinite(rows[4].psnr));
    EXPECT_GT(rows[4].psnr, rows[5].psnr);
    EXPECT_LT(rows[5].bpppb, rows[4].bpppb);
    EXPECT_EQ(rows[0].videos, 1u);
    // outputs are cleaned up
    EXPECT_TRUE(std::filesystem::is_empty(dir.path()));
}

TEST(Sweep, LoadsCubeFromDisk)
{
    REQUIRE_ENCODER();
    testutil::TempDir dir;
    write_netcdf(synth_cube(SynthKind::checkerboard, {4, 16, 16, 2}, 0), dir / "cb.nc");
    {
        std::ofstream out(dir / "sweep.yaml");
        out << "cubes: [{path: cb.nc}, {path: missing.nc}]\nmatrix: [{codec: ffv1, bits: 12}]\npresets: [Best]\n";
    }
    const auto rows = run_sweep(load_sweep(dir / "sweep.yaml"));
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].cube, "cb");
    EXPECT_FALSE(rows[0].failed) << rows[0].error;
    EXPECT_TRUE(rows[1].failed);
}

TEST(EffectiveQp, VeryHighX265IsQpZero)
{
    REQUIRE_ENCODER();
    const auto qp = measure_effective_qp(resolve_preset(CodecId::libx265, "Very high", false, 12));
    ASSERT_TRUE(qp.has_value());
    EXPECT_LT(*qp, 0.5);
    const auto low = measure_effective_qp(resolve_preset(CodecId::libx265, "Low", false, 12));
    ASSERT_TRUE(low.has_value());
    EXPECT_GT(*low, *qp);
    EXPECT_FALSE(measure_effective_qp(resolve_preset(CodecId::vp9, "Low", false, 8)).has_value());
}
