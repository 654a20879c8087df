#include "cubevid/mapping.hpp"
#include "unit/test_util.hpp"

#include <fstream>

using namespace cubevid;

namespace {

using Groups = std::vector<std::array<std::size_t, 3>>;

Groups members(const std::vector<ChannelGroup>& groups)
{
    Groups out;
    for (const auto& g : groups) {
        out.push_back(g.members);
    }
    return out;
}

MappingRule simple_rule(std::string name, std::vector<std::string> vars, CodecConfig cfg, int bits)
{
    MappingRule r;
    r.stream_name = std::move(name);
    r.input_vars = std::move(vars);
    r.codec_configs = {std::move(cfg)};
    r.bit_depth = bits;
    return r;
}

// Small cube shaped like the Listing-1 example: four bands on (time, y, x) and
// monthly labels on (time_month, y, x), plus an unclaimed cloud mask.
DataCube listing_cube()
{
    std::mt19937_64 rng(1);
    DataCube cube;
    for (const auto* band : {"R", "G", "B", "NIR"}) {
        cube.add_variable(band, Variable{{"time", "y", "x"}, testutil::random_integers({6, 8, 8}, rng, 12),
                                         DType::uint16, {}});
    }
    cube.add_variable("labels", Variable{{"time_month", "y", "x"}, testutil::random_integers({2, 8, 8}, rng, 3),
                                         DType::uint8, {}});
    cube.add_variable("cloud", Variable{{"time", "y", "x"}, testutil::random_integers({6, 8, 8}, rng, 1),
                                        DType::uint8, {}});
    return cube;
}

const char* k_listing_rules = R"(
bands:
  - [R, G, B, NIR]
  - [time, y, x]
  - 0
  - {"c:v": libx265, preset: medium, x265-params: "qpmin=0:qpmax=0.01", tune: psnr}
  - 12
labels: [labels, [time_month, y, x], 0, {"c:v": ffv1}, 8]
)";

} // namespace

TEST(PlanStream, PaperExamples)
{
    MappingRule r;
    r.stream_name = "s";
    EXPECT_EQ(members(plan_stream(r, 4)), (Groups{{0, 1, 2}, {3, 3, 3}}));
    EXPECT_EQ(members(plan_stream(r, 6)), (Groups{{0, 1, 2}, {3, 4, 5}}));
    EXPECT_EQ(members(plan_stream(r, 1)), (Groups{{0, 0, 0}}));
    const auto five = plan_stream(r, 5);
    EXPECT_EQ(members(five), (Groups{{0, 1, 2}, {3, 4, 4}}));
    EXPECT_EQ(five[1].n_real, 2u);
    EXPECT_EQ(five[1].video_index, 2u);
    EXPECT_THROW(plan_stream(r, 0), ConfigError);
}

TEST(PlanStream, PcaCountReplacesChannelCount)
{
    MappingRule r;
    r.stream_name = "s";
    r.n_pcs = 9;
    EXPECT_EQ(plan_stream(r, 10).size(), 3u);
}

TEST(ValidateRules, ListingExample)
{
    const auto cube = listing_cube();
    const auto plan = validate_rules(parse_rules(k_listing_rules), cube);
    ASSERT_EQ(plan.streams.size(), 2u);
    EXPECT_EQ(plan.video_count(), 3u);
    EXPECT_EQ(plan.residual_variables, (std::vector<std::string>{"cloud"}));
    const auto& bands = plan.streams[0];
    EXPECT_EQ(bands.rule.stream_name, "bands");
    EXPECT_EQ(bands.video_configs.size(), 2u);
    EXPECT_EQ(bands.video_configs[1].bit_depth, 12);
    EXPECT_EQ(bands.tyx, (Shape{6, 8, 8}));
    EXPECT_EQ(plan.streams[1].rule.axes, (AxisOrder{"time_month", "y", "x"}));
    EXPECT_EQ(plan.streams[1].tyx, (Shape{2, 8, 8}));
    // Deterministic: the same inputs give the same plan.
    EXPECT_EQ(plan, validate_rules(parse_rules(k_listing_rules), cube));
}

TEST(ValidateRules, EmptyRulesLeaveEverythingResidual)
{
    const auto cube = listing_cube();
    const auto plan = validate_rules({}, cube);
    EXPECT_EQ(plan.video_count(), 0u);
    EXPECT_EQ(plan.residual_variables.size(), cube.variables().size());
}

TEST(ValidateRules, Errors)
{
    const auto cube = listing_cube();
    const auto ffv1 = CodecConfig{CodecId::ffv1, {{"c:v", "ffv1"}}, 8};
    const auto x265 = resolve_preset(CodecId::libx265, "High");

    EXPECT_THROW(validate_rules({simple_rule("s", {"Z"}, ffv1, 8)}, cube), NotFoundError);
    EXPECT_THROW(validate_rules({simple_rule("a", {"R"}, ffv1, 8), simple_rule("b", {"R", "G"}, ffv1, 8)}, cube),
                 ConfigError);
    EXPECT_THROW(validate_rules({simple_rule("a", {"R"}, ffv1, 8), simple_rule("a", {"G"}, ffv1, 8)}, cube),
                 ConfigError);
    EXPECT_THROW(validate_rules({simple_rule("bad name", {"R"}, ffv1, 8)}, cube), ConfigError);
    EXPECT_THROW(validate_rules({simple_rule("s", {"R"}, x265, 16)}, cube), ConfigError);
    EXPECT_THROW(validate_rules({simple_rule("s", {"R"}, ffv1, 9)}, cube), ConfigError);
    // labels live on another time axis
    EXPECT_THROW(validate_rules({simple_rule("s", {"R", "labels"}, ffv1, 8)}, cube), ShapeError);

    auto pcs = simple_rule("s", {"R", "G"}, ffv1, 8);
    pcs.n_pcs = 3;
    EXPECT_THROW(validate_rules({pcs}, cube), ConfigError);

    auto list = simple_rule("s", {"R", "G", "B", "NIR"}, ffv1, 8);
    list.codec_configs = {ffv1, ffv1, ffv1};
    EXPECT_THROW(validate_rules({list}, cube), ConfigError);
    list.codec_configs = {ffv1, x265};
    EXPECT_NO_THROW(validate_rules({list}, cube));

    auto mono = simple_rule("s", {"R", "G"}, ffv1, 8);
    mono.monochrome = true;
    EXPECT_THROW(validate_rules({mono}, cube), ConfigError);
    mono.input_vars = {"R"};
    EXPECT_NO_THROW(validate_rules({mono}, cube));
    mono.codec_configs = {resolve_preset(CodecId::vp9, "Best")};
    EXPECT_THROW(validate_rules({mono}, cube), ConfigError); // vp9 has no single-plane format
}

TEST(ParseRules, TupleForm)
{
    const auto rules = parse_rules(k_listing_rules);
    ASSERT_EQ(rules.size(), 2u);
    const auto& b = rules[0];
    EXPECT_EQ(b.stream_name, "bands");
    EXPECT_EQ(b.input_vars, (std::vector<std::string>{"R", "G", "B", "NIR"}));
    EXPECT_EQ(b.bit_depth, 12);
    ASSERT_EQ(b.codec_configs.size(), 1u);
    EXPECT_EQ(b.codec_configs[0].codec, CodecId::libx265);
    // Options keep their document order.
    EXPECT_EQ(b.codec_configs[0].options, (CodecOptions{{"c:v", "libx265"},
                                                        {"preset", "medium"},
                                                        {"x265-params", "qpmin=0:qpmax=0.01"},
                                                        {"tune", "psnr"}}));
    EXPECT_EQ(rules[1].input_vars, (std::vector<std::string>{"labels"}));
}

TEST(ParseRules, MappingFormAndJson)
{
    const auto rules = parse_rules(R"({
      "s2": {"input_vars": ["B02", "B03"], "axes": ["t", "lat", "lon"], "n_pcs": 1,
             "codec": [{"c:v": "libx265", "crf": "7"}], "bit_depth": 10,
             "leading_fill": -1, "clamp": true, "qualities": ["Medium"]}
    })");
    ASSERT_EQ(rules.size(), 1u);
    const auto& r = rules[0];
    EXPECT_EQ(r.axes, (AxisOrder{"t", "lat", "lon"}));
    EXPECT_EQ(r.n_pcs, 1u);
    EXPECT_EQ(r.leading_fill, -1.0);
    EXPECT_TRUE(r.clamp);
    EXPECT_EQ(r.qualities, (std::vector<std::string>{"Medium"}));
}

TEST(ParseRules, Errors)
{
    EXPECT_THROW(parse_rules(R"(s: [a, [t, y, x], 0, {"c:v": ffv1}])"), ConfigError);          // 4 entries
    EXPECT_THROW(parse_rules(R"(s: {input_vars: a, codec: {"c:v": ffv1}})"), ConfigError);     // no bit depth
    EXPECT_THROW(parse_rules(R"(s: {input_vars: a, codec: {"c:v": ffv1}, bit_depth: 8, x: 1})"), ConfigError);
    EXPECT_THROW(parse_rules(R"(s: [a, [t, y], 0, {"c:v": ffv1}, 8])"), ConfigError);
    EXPECT_THROW(parse_rules("- just a list"), ConfigError);
    EXPECT_THROW(parse_rules("s: [unterminated"), ConfigError);
    EXPECT_THROW(load_rules("/nonexistent/rules.yaml"), NotFoundError);
}
