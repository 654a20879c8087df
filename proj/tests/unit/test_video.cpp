#include "cubevid/bench.hpp"
#include "cubevid/transform.hpp"
#include "cubevid/video.hpp"
#include "unit/test_util.hpp"

using namespace cubevid;

namespace {

FrameStack random_frames(FrameGeometry g, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dist(0, (1 << g.bit_depth) - 1);
    FrameStack f(g);
    for (auto& s : f.samples) {
        s = static_cast<std::uint16_t>(dist(rng));
    }
    return f;
}

CodecConfig lossless(CodecId codec, int bits)
{
    return resolve_preset(codec, "Best", false, bits);
}

} // namespace

TEST(Planes, PackAndUnpackWithPadding)
{
    SampleArray s({2, 2, 3, 4});
    for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = static_cast<std::uint16_t>(i);
    }
    const std::array<std::size_t, 3> slots = {3, 3, 3};
    const auto f = pack_planes(s, slots, 12);
    EXPECT_EQ(f.geometry, (FrameGeometry{2, 2, 3, 3, 12}));
    for (std::size_t p = 0; p < 3; ++p) {
        EXPECT_EQ(f.at(1, p, 1, 2), s.at(1, 1, 2, 3));
    }
    SampleArray out({2, 2, 3, 4});
    const std::array<std::size_t, 1> real = {3};
    unpack_planes(f, real, out);
    for (std::size_t t = 0; t < 2; ++t) {
        for (std::size_t y = 0; y < 2; ++y) {
            for (std::size_t x = 0; x < 3; ++x) {
                EXPECT_EQ(out.at(t, y, x, 3), s.at(t, y, x, 3));
                EXPECT_EQ(out.at(t, y, x, 0), 0);
            }
        }
    }
}

class LosslessCodec : public ::testing::TestWithParam<std::tuple<CodecId, int>> {};

TEST_P(LosslessCodec, BitExactRoundTrip)
{
    REQUIRE_ENCODER();
    const auto [codec, bits] = GetParam();
    testutil::TempDir dir;
    // x265 needs frames of at least 96x96 for bit-exact high bit depth lossless output.
    const FrameGeometry g{3, 96, 96, 3, bits};
    const auto frames = random_frames(g, 17 + static_cast<std::uint64_t>(bits));
    const auto cfg = lossless(codec, bits);
    DecodedFrames back;
    if (cfg.per_frame()) {
        const auto stats = encode_frames_image(frames, cfg, dir / "jp2");
        EXPECT_EQ(stats.files, 3u);
        EXPECT_EQ(stats.bytes_written, disk_usage(dir / "jp2"));
        back = decode_frames_image(dir / "jp2", g);
    } else {
        const auto stats = encode_video(frames, cfg, dir / "v.mkv");
        EXPECT_EQ(stats.bytes_written, std::filesystem::file_size(dir / "v.mkv"));
        back = decode_video(dir / "v.mkv", g);
    }
    EXPECT_EQ(back.frames.geometry, g);
    EXPECT_TRUE(back.frames.samples == frames.samples);
}

INSTANTIATE_TEST_SUITE_P(AllDepths, LosslessCodec,
                         ::testing::Values(std::tuple{CodecId::libx265, 8}, std::tuple{CodecId::libx265, 10},
                                           std::tuple{CodecId::libx265, 12}, std::tuple{CodecId::vp9, 8},
                                           std::tuple{CodecId::vp9, 10}, std::tuple{CodecId::vp9, 12},
                                           std::tuple{CodecId::ffv1, 8}, std::tuple{CodecId::ffv1, 10},
                                           std::tuple{CodecId::ffv1, 12}, std::tuple{CodecId::ffv1, 16},
                                           std::tuple{CodecId::jp2openjpeg, 8},
                                           std::tuple{CodecId::jp2openjpeg, 12},
                                           std::tuple{CodecId::jp2openjpeg, 16}),
                         [](const auto& info) {
                             return std::string(codec_name(std::get<0>(info.param))) + "_" +
                                    std::to_string(std::get<1>(info.param));
                         });

TEST(Video, SingleFrameAndPlaneOrder)
{
    REQUIRE_ENCODER();
    testutil::TempDir dir;
    const FrameGeometry g{1, 16, 16, 3, 8};
    FrameStack f(g);
    for (std::size_t p = 0; p < 3; ++p) {
        for (std::size_t y = 0; y < 16; ++y) {
            for (std::size_t x = 0; x < 16; ++x) {
                f.at(0, p, y, x) = static_cast<std::uint16_t>(10 * (p + 1));
            }
        }
    }
    encode_video(f, lossless(CodecId::ffv1, 8), dir / "one.mkv");
    const auto back = decode_video(dir / "one.mkv"); // probed geometry
    EXPECT_EQ(back.frames.geometry, g);
    EXPECT_EQ(back.frames.at(0, 0, 3, 3), 10);
    EXPECT_EQ(back.frames.at(0, 1, 3, 3), 20);
    EXPECT_EQ(back.frames.at(0, 2, 3, 3), 30);
}

TEST(Video, MonochromeFfv1)
{
    REQUIRE_ENCODER();
    testutil::TempDir dir;
    const FrameGeometry g{4, 20, 24, 1, 8};
    const auto frames = random_frames(g, 2);
    encode_video(frames, lossless(CodecId::ffv1, 8), dir / "m.mkv");
    const auto back = decode_video(dir / "m.mkv", g);
    EXPECT_TRUE(back.frames.samples == frames.samples);
}

TEST(Video, TruncatedFileIsCorrupt)
{
    REQUIRE_ENCODER();
    testutil::TempDir dir;
    const FrameGeometry g{6, 32, 32, 3, 10};
    encode_video(random_frames(g, 3), lossless(CodecId::ffv1, 10), dir / "v.mkv");
    std::filesystem::resize_file(dir / "v.mkv", std::filesystem::file_size(dir / "v.mkv") / 2);
    EXPECT_THROW(decode_video(dir / "v.mkv", g), CodecError);
}

TEST(Video, GeometryMismatchAndMissingFile)
{
    REQUIRE_ENCODER();
    testutil::TempDir dir;
    const FrameGeometry g{2, 16, 16, 3, 10};
    encode_video(random_frames(g, 4), lossless(CodecId::ffv1, 10), dir / "v.mkv");
    EXPECT_THROW(decode_video(dir / "v.mkv", FrameGeometry{2, 16, 16, 3, 12}), FormatError);
    EXPECT_THROW(decode_video(dir / "v.mkv", FrameGeometry{2, 16, 8, 3, 10}), FormatError);
    EXPECT_THROW(decode_video(dir / "nope.mkv", g), NotFoundError);
}

TEST(Video, RejectsBadInput)
{
    REQUIRE_ENCODER();
    testutil::TempDir dir;
    FrameStack f(FrameGeometry{1, 16, 16, 3, 8});
    f.samples[0] = 300; // exceeds 8 bits
    EXPECT_THROW(encode_video(f, lossless(CodecId::ffv1, 8), dir / "v.mkv"), DataError);
    const auto ok = random_frames(FrameGeometry{1, 16, 16, 3, 8}, 1);
    EXPECT_THROW(encode_video(ok, resolve_preset(CodecId::jp2openjpeg, "Best", false, 8), dir / "v.mkv"),
                 ConfigError);
    CodecConfig broken{CodecId::libx265, {{"c:v", "libx265"}, {"no-such-option", "1"}}, 8};
    EXPECT_THROW(encode_video(ok, broken, dir / "v.mkv"), CodecError);
}

TEST(FrameImages, QualityLadderShrinksFiles)
{
    REQUIRE_ENCODER();
    testutil::TempDir dir;
    const auto cube = synth_cube(SynthKind::smooth_advection, {4, 64, 64, 3}, 5);
    std::vector<std::string> names = {"b1", "b2", "b3"};
    const auto sel = select_for_video(cube, names, AxisOrder{});
    const auto q = quantize(sel.array, fit_quant(sel.array, 16));
    const std::array<std::size_t, 3> slots = {0, 1, 2};
    const auto frames = pack_planes(q, slots, 16);
    std::uint64_t previous = std::numeric_limits<std::uint64_t>::max();
    for (std::size_t i = 1; i < preset_names().size(); ++i) {
        const auto cfg = resolve_preset(CodecId::jp2openjpeg, preset_names()[i], false, 16);
        const auto out = dir / ("q" + std::to_string(i));
        const auto stats = encode_frames_image(frames, cfg, out);
        EXPECT_EQ(stats.files, 4u);
        EXPECT_LE(stats.bytes_written, previous) << preset_names()[i];
        previous = stats.bytes_written;
        const auto back = decode_frames_image(out, frames.geometry);
        EXPECT_EQ(back.frames.geometry, frames.geometry);
    }
}
