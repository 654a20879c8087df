#include "cubevid/bench.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace cubevid {

namespace {

// mt19937_64 output is fixed by the standard; the distributions are not, so
// they are spelled out here to keep cubes identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::uint64_t below(std::uint64_t n) { return engine_() % n; }

private:
    std::mt19937_64 engine_;
};

constexpr double k_top = 4095.0;
constexpr double k_two_pi = 2.0 * std::numbers::pi;

struct Wave {
    double kx, ky, phase, amplitude;
};

} // namespace

std::string_view synth_kind_name(SynthKind kind)
{
    switch (kind) {
    case SynthKind::smooth_advection: return "smooth-advection";
    case SynthKind::checkerboard: return "checkerboard";
    case SynthKind::rank1_spectral: return "rank1-spectral";
    case SynthKind::noise: return "noise";
    }
    return "?";
}

SynthKind synth_kind_from_name(std::string_view name)
{
    for (auto kind : {SynthKind::smooth_advection, SynthKind::checkerboard, SynthKind::rank1_spectral,
                      SynthKind::noise}) {
        if (synth_kind_name(kind) == name) {
            return kind;
        }
    }
    throw ConfigError("unknown synthetic cube kind '" + std::string(name) +
                      "' (expected smooth-advection, checkerboard, rank1-spectral or noise)");
}

DataCube synth_cube(SynthKind kind, const SynthDims& d, std::uint64_t seed)
{
    if (d.t < 4 || d.y < 16 || d.x < 16 || d.c < 1) {
        throw ConfigError("synthetic cubes need at least 4x16x16x1, got " + std::to_string(d.t) + "x" +
                          std::to_string(d.y) + "x" + std::to_string(d.x) + "x" + std::to_string(d.c));
    }
    Rng rng(seed);
    const Shape shape{d.t, d.y, d.x};
    std::vector<NdArray> bands(d.c, NdArray(shape));

    switch (kind) {
    case SynthKind::smooth_advection: {
        // A few long-wavelength waves drifting by (0.75, 0.5) px per frame;
        // every band mixes them with its own gains, so bands are correlated.
        std::vector<Wave> waves(4);
        for (auto& w : waves) {
            w = {rng.uniform(1.0, 3.0) / static_cast<double>(d.x), rng.uniform(1.0, 3.0) / static_cast<double>(d.y),
                 rng.uniform(0.0, k_two_pi), rng.uniform(0.5, 1.0)};
        }
        std::vector<std::vector<double>> gains(d.c, std::vector<double>(waves.size()));
        for (auto& g : gains) {
            for (auto& v : g) {
                v = rng.uniform(0.3, 1.0);
            }
        }
        for (std::size_t c = 0; c < d.c; ++c) {
            double norm = 0.0;
            for (std::size_t k = 0; k < waves.size(); ++k) {
                norm += gains[c][k] * waves[k].amplitude;
            }
            for (std::size_t t = 0; t < d.t; ++t) {
                for (std::size_t y = 0; y < d.y; ++y) {
                    for (std::size_t x = 0; x < d.x; ++x) {
                        const double px = static_cast<double>(x) - 0.75 * static_cast<double>(t);
                        const double py = static_cast<double>(y) - 0.5 * static_cast<double>(t);
                        double s = 0.0;
                        for (std::size_t k = 0; k < waves.size(); ++k) {
                            const auto& w = waves[k];
                            s += gains[c][k] * w.amplitude * std::sin(k_two_pi * (w.kx * px + w.ky * py) + w.phase);
                        }
                        bands[c][(t * d.y + y) * d.x + x] = std::round(k_top * (0.5 + 0.45 * s / norm));
                    }
                }
            }
        }
        break;
    }
    case SynthKind::checkerboard: {
        const std::size_t cell = std::max<std::size_t>(4, std::min(d.y, d.x) / 8);
        for (std::size_t c = 0; c < d.c; ++c) {
            const double lo = std::round(rng.uniform(0.0, 0.3) * k_top);
            const double hi = std::round(rng.uniform(0.7, 1.0) * k_top);
            for (std::size_t t = 0; t < d.t; ++t) {
                for (std::size_t y = 0; y < d.y; ++y) {
                    for (std::size_t x = 0; x < d.x; ++x) {
                        const bool odd = (((x + t) / cell) + (y / cell)) % 2 == 1;
                        bands[c][(t * d.y + y) * d.x + x] = odd ? hi : lo;
                    }
                }
            }
        }
        break;
    }
    case SynthKind::rank1_spectral: {
        std::vector<double> spectrum(d.c);
        for (auto& v : spectrum) {
            v = rng.uniform(0.2, 1.0);
        }
        const double phase = rng.uniform(0.0, k_two_pi);
        for (std::size_t t = 0; t < d.t; ++t) {
            for (std::size_t y = 0; y < d.y; ++y) {
                for (std::size_t x = 0; x < d.x; ++x) {
                    const double px = static_cast<double>(x) - static_cast<double>(t);
                    const double s = 1.5 + std::sin(k_two_pi * px / static_cast<double>(d.x) + phase) *
                                               std::cos(k_two_pi * static_cast<double>(y) / static_cast<double>(d.y));
                    for (std::size_t c = 0; c < d.c; ++c) {
                        bands[c][(t * d.y + y) * d.x + x] = s * spectrum[c];
                    }
                }
            }
        }
        break;
    }
    case SynthKind::noise:
        for (std::size_t c = 0; c < d.c; ++c) {
            for (auto& v : bands[c].values()) {
                v = static_cast<double>(rng.below(4096));
            }
        }
        break;
    }

    DataCube cube;
    const DType dtype = kind == SynthKind::rank1_spectral ? DType::float64 : DType::uint16;
    for (std::size_t c = 0; c < d.c; ++c) {
        Variable var{{"time", "y", "x"}, std::move(bands[c]), dtype, {}};
        var.attrs["long_name"] = "synthetic band " + std::to_string(c + 1);
        cube.add_variable("b" + std::to_string(c + 1), std::move(var));
    }
    auto ramp = [](std::size_t n, double step) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = static_cast<double>(i) * step;
        }
        return v;
    };
    cube.set_coord("time", Coordinate{ramp(d.t, 1.0), DType::float64, {{"units", std::string("days since 2020-01-01")}}});
    cube.set_coord("y", Coordinate{ramp(d.y, 30.0), DType::float64, {{"units", std::string("m")}}});
    cube.set_coord("x", Coordinate{ramp(d.x, 30.0), DType::float64, {{"units", std::string("m")}}});
    cube.attrs()["synthetic_kind"] = std::string(synth_kind_name(kind));
    cube.attrs()["seed"] = static_cast<std::int64_t>(seed);
    return cube;
}

} // namespace cubevid
