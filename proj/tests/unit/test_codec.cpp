#include "cubevid/codec.hpp"
#include "cubevid/process.hpp"
#include "unit/test_util.hpp"

#include <algorithm>
#include <future>
#include <thread>

using namespace cubevid;

namespace {

const std::string& option(const CodecConfig& c, std::string_view key)
{
    const auto* v = find_option(c.options, key);
    if (!v) {
        throw std::runtime_error("missing option " + std::string(key));
    }
    return *v;
}

} // namespace

TEST(CodecNames, RoundTripAndAliases)
{
    for (auto id : {CodecId::libx264, CodecId::libx265, CodecId::vp9, CodecId::ffv1, CodecId::hevc_nvenc,
                    CodecId::jp2openjpeg}) {
        EXPECT_EQ(codec_from_name(codec_name(id)), id);
    }
    EXPECT_EQ(codec_from_name("libvpx-vp9"), CodecId::vp9);
    EXPECT_EQ(codec_name(CodecId::jp2openjpeg), "JP2OpenJPEG");
    EXPECT_THROW(codec_from_name("mpeg2video"), ConfigError);
}

TEST(Presets, TableExamples)
{
    const auto high = resolve_preset(CodecId::libx265, "High");
    EXPECT_EQ(high.options, (CodecOptions{{"c:v", "libx265"}, {"preset", "medium"}, {"tune", "psnr"}, {"crf", "1"}}));
    const auto vlow = resolve_preset(CodecId::vp9, "Very low");
    EXPECT_EQ(vlow.options, (CodecOptions{{"c:v", "vp9"},
                                          {"crf", "30"},
                                          {"arnr-strength", "2"},
                                          {"lag-in-frames", "25"},
                                          {"arnr-maxframes", "7"}}));
    const auto best = resolve_preset(CodecId::jp2openjpeg, "Best");
    EXPECT_EQ(best.options,
              (CodecOptions{{"codec", "JP2OpenJPEG"}, {"QUALITY", "100"}, {"REVERSIBLE", "YES"}, {"YCBCR420", "NO"}}));
    EXPECT_EQ(option(resolve_preset(CodecId::jp2openjpeg, "Low", true), "QUALITY"), "0.25");
}

TEST(Presets, LosslessFlagFollowsOptions)
{
    EXPECT_TRUE(resolve_preset(CodecId::libx265, "Best").lossless());
    EXPECT_FALSE(resolve_preset(CodecId::libx265, "Very high").lossless());
    EXPECT_TRUE(resolve_preset(CodecId::vp9, "Best").lossless());
    EXPECT_FALSE(resolve_preset(CodecId::vp9, "Medium").lossless());
    EXPECT_TRUE(resolve_preset(CodecId::jp2openjpeg, "Best").lossless());
    EXPECT_FALSE(resolve_preset(CodecId::jp2openjpeg, "Very high").lossless());
    EXPECT_TRUE(resolve_preset(CodecId::ffv1, "Very low").lossless());
    EXPECT_TRUE((CodecConfig{CodecId::libx264, {{"c:v", "libx264"}, {"qp", "0"}}, 8}).lossless());
    EXPECT_TRUE((CodecConfig{CodecId::libx265, {{"x265-params", "log-level=1:lossless=1"}}, 8}).lossless());
    EXPECT_FALSE((CodecConfig{CodecId::libx265, {{"x265-params", "nolossless=1"}}, 8}).lossless());
    EXPECT_TRUE(resolve_preset(CodecId::jp2openjpeg, "Best").per_frame());
}

TEST(Presets, Errors)
{
    EXPECT_THROW(resolve_preset(CodecId::libx265, "Ultra"), ConfigError);
    EXPECT_THROW(resolve_preset(CodecId::hevc_nvenc, "Best"), ConfigError);
    EXPECT_EQ(preset_names().size(), 6u);
    EXPECT_EQ(preset_index("Very low"), 5u);
    EXPECT_FALSE(preset_index("very low").has_value());
}

TEST(CodecConfigs, MakeFromOptions)
{
    const auto c = make_codec_config({{"c:v", "libvpx-vp9"}, {"crf", "3"}}, 10);
    EXPECT_EQ(c.codec, CodecId::vp9);
    EXPECT_EQ(c.bit_depth, 10);
    EXPECT_EQ(make_codec_config({{"codec", "JP2OpenJPEG"}, {"QUALITY", "5"}}, 16).codec, CodecId::jp2openjpeg);
    EXPECT_THROW(make_codec_config({{"crf", "3"}}, 8), ConfigError);
}

TEST(Capabilities, Table)
{
    const auto x265 = probe_capabilities(CodecId::libx265);
    EXPECT_EQ(x265.bit_depths, (std::vector<int>{8, 10, 12}));
    EXPECT_EQ(x265.max_channels, 3u);
    EXPECT_TRUE(x265.lossless_supported);
    EXPECT_FALSE(x265.supports(16));
    const auto ffv1 = probe_capabilities(CodecId::ffv1);
    EXPECT_TRUE(ffv1.supports(8) && ffv1.supports(16));
    const auto jp2 = probe_capabilities(CodecId::jp2openjpeg);
    EXPECT_TRUE(jp2.per_frame && jp2.supports(8) && jp2.supports(16));
    EXPECT_FALSE(probe_capabilities(CodecId::vp9).supports(16));
    EXPECT_THROW(check_supported(CodecConfig{CodecId::libx265, {}, 16}), ConfigError);
    EXPECT_NO_THROW(check_supported(CodecConfig{CodecId::libx265, {}, 12}));
}

TEST(Capabilities, PixelFormats)
{
    EXPECT_EQ(pixel_format(CodecId::libx265, 8, 3), "gbrp");
    EXPECT_EQ(pixel_format(CodecId::libx265, 12, 3), "gbrp12le");
    EXPECT_EQ(pixel_format(CodecId::vp9, 10, 3), "gbrp10le");
    EXPECT_EQ(pixel_format(CodecId::ffv1, 16, 3), "gbrp16le");
    EXPECT_EQ(pixel_format(CodecId::ffv1, 8, 3), "yuv444p");
    EXPECT_EQ(pixel_format(CodecId::libx264, 10, 3), "yuv444p10le");
    EXPECT_EQ(pixel_format(CodecId::libx265, 8, 1), "gray");
    EXPECT_EQ(pixel_format(CodecId::ffv1, 12, 1), "gray12le");
}

TEST(Process, CapturesOutputAndExitCode)
{
    const auto r = run_process({"sh", "-c", "echo out; echo err >&2; exit 3"});
    EXPECT_EQ(r.exit_code, 3);
    EXPECT_EQ(r.out, "out\n");
    EXPECT_EQ(r.err, "err\n");
    EXPECT_GT(r.wall_seconds, 0.0);
}

TEST(Process, StreamsLargeInputWithoutDeadlock)
{
    // 8 MiB through cat: both pipes must be serviced concurrently.
    std::string payload(8u << 20, '\0');
    for (std::size_t i = 0; i < payload.size(); ++i) {
        payload[i] = static_cast<char>(i * 2654435761u >> 24);
    }
    const auto r = run_process({"cat"}, payload);
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_TRUE(r.out == payload);
}

TEST(Process, ChildThatIgnoresStdin)
{
    std::string payload(4u << 20, 'x');
    const auto r = run_process({"true"}, payload);
    EXPECT_EQ(r.exit_code, 0);
}

TEST(Process, SignalsAndMissingPrograms)
{
    EXPECT_EQ(run_process({"sh", "-c", "kill -9 $$"}).exit_code, -9);
    EXPECT_THROW(run_process({"definitely-not-a-program-xyz"}), Error);
    EXPECT_THROW(run_process({}), Error);
}

TEST(ProcessLimiter, CapsConcurrency)
{
    ProcessLimiter limiter(2);
    std::atomic<int> active{0}, peak{0};
    std::vector<std::future<void>> jobs;
    for (int i = 0; i < 8; ++i) {
        jobs.push_back(std::async(std::launch::async, [&] {
            auto slot = limiter.acquire();
            const int now = ++active;
            int seen = peak.load();
            while (now > seen && !peak.compare_exchange_weak(seen, now)) {
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(20));
            --active;
        }));
    }
    for (auto& j : jobs) {
        j.get();
    }
    EXPECT_LE(peak.load(), 2);
    EXPECT_EQ(limiter.limit(), 2u);
}

TEST(Discovery, EncoderFromEnvironment)
{
    REQUIRE_ENCODER();
    const auto exe = find_encoder();
    EXPECT_TRUE(std::filesystem::exists(exe));
    EXPECT_EQ(run_process({exe.string(), "-hide_banner", "-version"}).exit_code, 0);
}
