#include "cubevid/transform.hpp"
#include "unit/test_util.hpp"

#include <cmath>
#include <limits>

using namespace cubevid;

namespace {

NdArray column(std::vector<double> v)
{
    const std::size_t n = v.size();
    return NdArray({n, 1, 1, 1}, std::move(v));
}

QuantParams params(int bits, std::vector<ChannelRange> ranges)
{
    return QuantParams{bits, std::move(ranges)};
}

double max_abs(const NdArray& a, const NdArray& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

} // namespace

TEST(FitQuant, PerChannelRanges)
{
    NdArray a({2, 1, 2, 2}, std::vector<double>{0, -5, 1, 5, 0.5, 0, 0.25, 1});
    const auto p = fit_quant(a, 8);
    ASSERT_EQ(p.channels.size(), 2u);
    EXPECT_EQ(p.channels[0], (ChannelRange{0, 1}));
    EXPECT_EQ(p.channels[1], (ChannelRange{-5, 5}));
    EXPECT_EQ(p.levels(), 255u);

    const auto c = fit_quant(column({7.5, 7.5, 7.5}), 12);
    EXPECT_TRUE(c.channels[0].constant());
    EXPECT_EQ(c.channels[0].min, 7.5);
}

TEST(FitQuant, Errors)
{
    EXPECT_THROW(fit_quant(column({1, std::numeric_limits<double>::quiet_NaN()}), 8), DataError);
    EXPECT_THROW(fit_quant(column({1, 2}), 9), ConfigError);
    EXPECT_THROW(fit_quant(NdArray({2, 2}), 8), ShapeError);
}

TEST(Quantize, Endpoints)
{
    const auto p12 = params(12, {{0, 1}});
    EXPECT_EQ(quantize(column({1.0}), p12)[0], 4095);
    EXPECT_EQ(quantize(column({0.0}), p12)[0], 0);
    const auto p8 = params(8, {{0, 1}});
    EXPECT_EQ(quantize(column({0.5}), p8)[0], 128); // 127.5 rounds away from zero
    EXPECT_EQ(dequantize(SampleArray({1, 1, 1, 1}, std::vector<std::uint16_t>{4095}), p12)[0], 1.0);
}

TEST(Quantize, ConstantChannel)
{
    const auto p = params(10, {{3.25, 3.25}});
    const auto q = quantize(column({3.25, 3.25}), p);
    EXPECT_EQ(q.storage(), (std::vector<std::uint16_t>{0, 0}));
    EXPECT_EQ(dequantize(q, p).storage(), (std::vector<double>{3.25, 3.25}));
}

TEST(Quantize, RangeChecks)
{
    const auto p = params(8, {{0, 1}});
    EXPECT_THROW(quantize(column({1.5}), p), DataError);
    EXPECT_THROW(quantize(column({-0.01}), p), DataError);
    EXPECT_EQ(quantize(column({1.5, -3}), p, true).storage(), (std::vector<std::uint16_t>{255, 0}));
    EXPECT_THROW(dequantize(SampleArray({1, 1, 1, 1}, std::vector<std::uint16_t>{256}), p), DataError);
    EXPECT_THROW(quantize(NdArray({1, 1, 1, 2}), p), ShapeError);
}

TEST(Quantize, BoundAndMonotoneOnDenseGrid)
{
    for (const int bits : k_supported_bit_depths) {
        const double lo = -3.7, hi = 12.9;
        const std::size_t n = 20000;
        std::vector<double> grid(n);
        for (std::size_t i = 0; i < n; ++i) {
            grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        }
        const auto a = column(grid);
        const auto p = fit_quant(a, bits);
        const auto q = quantize(a, p);
        const auto back = dequantize(q, p);
        // A few ulps of the data magnitude on top of the exact half step.
        const double bound = (hi - lo) / (2.0 * p.levels()) + 8 * std::numeric_limits<double>::epsilon() * 16.0;
        for (std::size_t i = 0; i < n; ++i) {
            ASSERT_LE(std::abs(back[i] - grid[i]), bound) << "bits " << bits << " at " << grid[i];
            if (i > 0) {
                ASSERT_GE(q[i], q[i - 1]);
            }
        }
    }
}

TEST(Pca, CollinearChannelsMatchClosedForm)
{
    // channel 2 = 2 * channel 1: covariance [[s, 2s], [2s, 4s]] has eigenvalues 5s and 0.
    std::mt19937_64 rng(3);
    auto a = NdArray({4, 5, 6, 2});
    std::normal_distribution<double> g(1.0, 2.0);
    for (std::size_t i = 0; i < a.size(); i += 2) {
        a[i] = g(rng);
        a[i + 1] = 2.0 * a[i];
    }
    double mean = 0.0, ss = 0.0;
    const std::size_t n = a.size() / 2;
    for (std::size_t i = 0; i < a.size(); i += 2) {
        mean += a[i];
    }
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < a.size(); i += 2) {
        ss += (a[i] - mean) * (a[i] - mean);
    }
    const double s = ss / static_cast<double>(n - 1);

    const auto m = pca_fit(a, 1);
    EXPECT_NEAR(m.explained_variance_ratio(0), 1.0, 1e-9);
    EXPECT_NEAR(m.explained_variance[0], 5.0 * s, 1e-9 * 5.0 * s);
    EXPECT_NEAR(m.component(0, 0), 1.0 / std::sqrt(5.0), 1e-12);
    EXPECT_NEAR(m.component(0, 1), 2.0 / std::sqrt(5.0), 1e-12);
    EXPECT_NEAR(m.mean[1], 2.0 * mean, 1e-12 * std::abs(mean) + 1e-15);

    const auto full = pca_fit(a, 2);
    EXPECT_NEAR(full.explained_variance[1], 0.0, 1e-9 * s); // rank deficiency is not an error
}

TEST(Pca, FullRankIsIdentity)
{
    std::mt19937_64 rng(8);
    const auto a = testutil::random_array({5, 6, 7, 5}, rng, -100, 400);
    const auto m = pca_fit(a, 5);
    const auto back = pca_inverse(pca_forward(a, m), m);
    EXPECT_LE(max_abs(a, back), 1e-6 * 500.0);

    double sum = 0.0;
    for (const double v : m.explained_variance) {
        sum += v;
    }
    EXPECT_NEAR(sum, m.total_variance, 1e-8 * m.total_variance);
    for (std::size_t k = 1; k < m.n_components(); ++k) {
        EXPECT_GE(m.explained_variance[k - 1], m.explained_variance[k]);
    }
}

TEST(Pca, ComponentsOrthonormalWithSignConvention)
{
    std::mt19937_64 rng(4);
    const auto a = testutil::random_array({3, 8, 8, 6}, rng);
    const auto m = pca_fit(a, 4);
    for (std::size_t i = 0; i < 4; ++i) {
        double biggest = 0.0;
        for (std::size_t c = 0; c < 6; ++c) {
            if (std::abs(m.component(i, c)) > std::abs(biggest)) {
                biggest = m.component(i, c);
            }
        }
        EXPECT_GT(biggest, 0.0);
        for (std::size_t j = 0; j < 4; ++j) {
            double dot = 0.0;
            for (std::size_t c = 0; c < 6; ++c) {
                dot += m.component(i, c) * m.component(j, c);
            }
            EXPECT_NEAR(dot, i == j ? 1.0 : 0.0, 1e-10);
        }
    }
}

TEST(Pca, ProjectionProperties)
{
    std::mt19937_64 rng(6);
    const auto a = testutil::random_array({4, 4, 4, 4}, rng);
    const auto m = pca_fit(a, 2);
    // Data with every pixel equal to the mean projects to zero.
    NdArray mean_only({2, 2, 2, 4});
    for (std::size_t i = 0; i < mean_only.size(); ++i) {
        mean_only[i] = m.mean[i % 4];
    }
    const auto projected = pca_forward(mean_only, m);
    for (const double v : projected.values()) {
        EXPECT_NEAR(v, 0.0, 1e-14);
    }
    // Projecting onto the retained subspace is idempotent.
    const auto once = pca_inverse(pca_forward(a, m), m);
    const auto twice = pca_inverse(pca_forward(once, m), m);
    EXPECT_LE(max_abs(once, twice), 1e-12);
}

TEST(Pca, TenBandsKeepNine)
{
    std::mt19937_64 rng(10);
    const auto a = testutil::random_array({3, 6, 6, 10}, rng);
    const auto m = pca_fit(a, 9);
    EXPECT_EQ(m.n_components(), 9u);
    EXPECT_EQ(pca_forward(a, m).shape(), (Shape{3, 6, 6, 9}));
}

TEST(Pca, Errors)
{
    std::mt19937_64 rng(1);
    const auto a = testutil::random_array({2, 2, 2, 3}, rng);
    EXPECT_THROW(pca_fit(a, 0), ConfigError);
    EXPECT_THROW(pca_fit(a, 4), ConfigError);
    EXPECT_THROW(pca_fit(NdArray({1, 1, 2, 3}), 1), ShapeError); // 2 pixels < 3 channels
    const auto m = pca_fit(a, 2);
    EXPECT_THROW(pca_forward(NdArray({1, 1, 1, 2}), m), ShapeError);
    EXPECT_THROW(pca_inverse(NdArray({1, 1, 1, 3}), m), ShapeError);
}
