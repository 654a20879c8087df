#include "cubevid/cube.hpp"
#include "unit/test_util.hpp"

#include <cmath>
#include <limits>

using namespace cubevid;

namespace {

constexpr double k_nan = std::numeric_limits<double>::quiet_NaN();

NdArray series(std::vector<double> v)
{
    const std::size_t n = v.size();
    return NdArray({n, 1, 1}, std::move(v));
}

std::vector<bool> observed(const ValidityMask& m)
{
    return {m.observed.begin(), m.observed.end()};
}

// Plain reference: walk every (y, x) column along time.
NdArray reference_fill(const NdArray& a, double leading)
{
    NdArray out = a;
    const std::size_t nt = a.dim(0), rest = a.size() / nt;
    for (std::size_t p = 0; p < rest; ++p) {
        double last = leading;
        bool seen = false;
        for (std::size_t t = 0; t < nt; ++t) {
            double& v = out[t * rest + p];
            if (std::isnan(v)) {
                v = seen ? last : leading;
            } else {
                last = v;
                seen = true;
            }
        }
    }
    return out;
}

} // namespace

TEST(ForwardFill, HoldsLastValidValue)
{
    const auto r = forward_fill_time(series({1, k_nan, 3, k_nan}), 0);
    EXPECT_EQ(r.values.storage(), (std::vector<double>{1, 1, 3, 3}));
    EXPECT_EQ(observed(r.mask), (std::vector<bool>{true, false, true, false}));
    EXPECT_EQ(r.mask.synthesized_count(), 2u);
}

TEST(ForwardFill, AllValidIsIdentity)
{
    const auto r = forward_fill_time(series({5, 6}), 0);
    EXPECT_EQ(r.values.storage(), (std::vector<double>{5, 6}));
    EXPECT_EQ(observed(r.mask), (std::vector<bool>{true, true}));
}

TEST(ForwardFill, LeadingGapTakesFillValue)
{
    EXPECT_EQ(forward_fill_time(series({k_nan, 7}), 0, 0.0).values.storage(), (std::vector<double>{0, 7}));
    EXPECT_EQ(forward_fill_time(series({k_nan, k_nan, 2}), 0, -9.0).values.storage(), (std::vector<double>{-9, -9, 2}));
}

TEST(ForwardFill, MatchesReferenceAndIsIdempotent)
{
    std::mt19937_64 rng(11);
    auto a = testutil::random_array({9, 4, 5, 2}, rng, -3, 3);
    std::bernoulli_distribution gap(0.35);
    for (auto& v : a.values()) {
        if (gap(rng)) {
            v = k_nan;
        }
    }
    const auto once = forward_fill_time(a, 0, 1.5);
    EXPECT_TRUE(bitwise_equal(once.values, reference_fill(a, 1.5)));
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(once.mask.observed[i] == 1, !std::isnan(a[i]));
        if (!std::isnan(a[i])) {
            EXPECT_EQ(once.values[i], a[i]); // valid cells untouched
        }
    }
    const auto twice = forward_fill_time(once.values, 0, 1.5);
    EXPECT_TRUE(bitwise_equal(once.values, twice.values));
    EXPECT_EQ(twice.mask.synthesized_count(), 0u);
}

TEST(ForwardFill, TimeAxisNeedNotBeFirst)
{
    // [y=1, time=3]
    NdArray a({1, 3}, std::vector<double>{4, k_nan, k_nan});
    const auto r = forward_fill_time(a, 1);
    EXPECT_EQ(r.values.storage(), (std::vector<double>{4, 4, 4}));
}

TEST(ForwardFill, Errors)
{
    EXPECT_THROW(forward_fill_time(series({1, std::numeric_limits<double>::infinity()}), 0), DataError);
    EXPECT_THROW(forward_fill_time(series({1, 2}), 3), ConfigError);
    Variable v{{"t", "y", "x"}, series({1, k_nan}), DType::float32, {}};
    EXPECT_THROW(forward_fill_time(v, "time"), ConfigError);
    EXPECT_EQ(forward_fill_time(v, "t").values.storage(), (std::vector<double>{1, 1}));
}

TEST(DataCube, EnforcesShapeInvariants)
{
    DataCube cube;
    cube.add_variable("a", Variable{{"time", "y"}, NdArray({2, 3}), DType::float32, {}});
    // "y" already has length 3
    EXPECT_THROW(cube.add_variable("b", Variable{{"y"}, NdArray({4}), DType::float32, {}}), ShapeError);
    // repeated axis
    EXPECT_THROW(cube.add_variable("c", Variable{{"y", "y"}, NdArray({3, 3}), DType::float32, {}}), ShapeError);
    // axis count vs rank
    EXPECT_THROW(cube.add_variable("d", Variable{{"y"}, NdArray({3, 1}), DType::float32, {}}), ShapeError);
    // coordinate length
    EXPECT_THROW(cube.set_coord("time", Coordinate{std::vector<double>{1, 2, 3}, DType::float64, {}}), ShapeError);
    cube.set_coord("time", Coordinate{std::vector<double>{1, 2}, DType::float64, {}});
    EXPECT_THROW(cube.add_variable("a", Variable{{"time"}, NdArray({2}), DType::float32, {}}), ShapeError);
    EXPECT_THROW(cube.variable("zzz"), NotFoundError);
    EXPECT_EQ(cube.dim("y"), 3u);
    EXPECT_FALSE(cube.dim("nope").has_value());
}

TEST(DataCube, StructuralAndBitwiseEquality)
{
    auto a = testutil::integer_cube(3, 4, 5, 2, 8, 3);
    auto b = a;
    std::string why;
    EXPECT_TRUE(bitwise_equal(a, b, &why)) << why;
    auto var = b.variable("b1");
    var.values[0] += 1;
    b.replace_variable("b1", var);
    EXPECT_TRUE(structurally_equal(a, b));
    EXPECT_FALSE(bitwise_equal(a, b, &why));
    EXPECT_NE(why.find("b1"), std::string::npos);
    b.attrs()["title"] = std::string("other");
    EXPECT_FALSE(structurally_equal(a, b, &why));
}

TEST(SelectForVideo, StacksChannelsInOrder)
{
    const auto cube = testutil::integer_cube(3, 4, 5, 4, 8, 7);
    const std::vector<std::string> names = {"b3", "b1", "b4"};
    const auto sel = select_for_video(cube, names, AxisOrder{});
    ASSERT_EQ(sel.array.shape(), (Shape{3, 4, 5, 3}));
    for (std::size_t c = 0; c < names.size(); ++c) {
        EXPECT_EQ(sel.channels[c].variable, names[c]);
        const auto& v = cube.variable(names[c]).values;
        for (std::size_t t = 0; t < 3; ++t) {
            for (std::size_t y = 0; y < 4; ++y) {
                for (std::size_t x = 0; x < 5; ++x) {
                    EXPECT_EQ(sel.array.at(t, y, x, c), v[(t * 4 + y) * 5 + x]);
                }
            }
        }
    }
}

TEST(SelectForVideo, SingletonAndErrors)
{
    const auto cube = testutil::integer_cube(2, 3, 3, 2, 8, 1);
    const std::vector<std::string> one = {"b2"};
    EXPECT_EQ(select_for_video(cube, one, AxisOrder{}).array.shape(), (Shape{2, 3, 3, 1}));
    const std::vector<std::string> dup = {"b1", "b1"};
    EXPECT_THROW(select_for_video(cube, dup, AxisOrder{}), ConfigError);
    const std::vector<std::string> missing = {"b1", "Z"};
    EXPECT_THROW(select_for_video(cube, missing, AxisOrder{}), NotFoundError);

    auto other = cube;
    other.add_variable("small", Variable{{"time", "y", "w"}, NdArray({2, 3, 7}), DType::uint8, {}});
    const std::vector<std::string> mismatch = {"b1", "small"};
    EXPECT_THROW(select_for_video(other, mismatch, AxisOrder{"time", "y", "x"}), ShapeError);
}

TEST(SelectForVideo, ChannelAxisExpandsAndUnstackRestores)
{
    // A variable stored as (band, x, time, y), in non-canonical axis order, plus a plain 3-D one.
    DataCube cube;
    std::mt19937_64 rng(5);
    cube.add_variable("refl", Variable{{"band", "x", "time", "y"}, testutil::random_array({2, 5, 3, 4}, rng),
                                       DType::float32, {}});
    cube.add_variable("t2m", Variable{{"y", "time", "x"}, testutil::random_array({4, 3, 5}, rng), DType::float64, {}});
    const std::vector<std::string> names = {"refl", "t2m"};
    const auto sel = select_for_video(cube, names, AxisOrder{});
    ASSERT_EQ(sel.array.shape(), (Shape{3, 4, 5, 3}));
    ASSERT_EQ(sel.channels.size(), 3u);
    EXPECT_EQ(sel.channels[1].channel_axis, std::optional<std::string>("band"));
    EXPECT_EQ(sel.channels[1].channel_index, 1u);

    std::map<std::string, VariableLayout> layouts;
    for (const auto& n : names) {
        layouts[n] = {cube.variable(n).axes, cube.variable(n).values.shape()};
    }
    const auto back = unstack_channels(sel.array, sel.channels, layouts, AxisOrder{});
    EXPECT_TRUE(bitwise_equal(back.at("refl"), cube.variable("refl").values));
    EXPECT_TRUE(bitwise_equal(back.at("t2m"), cube.variable("t2m").values));
}
